//! Igusa-Clebsch invariants of binary sextics via Clebsch transvectants.
//!
//! A binary form of degree `n` is stored by its coefficients in descending
//! degree: entry `i` multiplies `x^(n-i) y^i`. Everything is generic over
//! [`Ring`], so the same code evaluates invariants over `K`, over
//! `K[j]`, or over formal quadratic extensions of either.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::algebra::Ring;

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryForm<R: Ring> {
    pub degree: usize,
    pub coeffs: Vec<R>,
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

fn binomial(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

impl<R: Ring> BinaryForm<R> {
    pub fn new(coeffs: Vec<R>) -> Self {
        assert!(!coeffs.is_empty());
        BinaryForm { degree: coeffs.len() - 1, coeffs }
    }

    fn zero_like(&self) -> R {
        self.coeffs[0].zero_like()
    }

    fn d_x(&self) -> BinaryForm<R> {
        if self.degree == 0 {
            return BinaryForm { degree: 0, coeffs: vec![self.zero_like()] };
        }
        let n = self.degree;
        let coeffs = (0..n).map(|i| self.coeffs[i].scale_int((n - i) as i64)).collect();
        BinaryForm { degree: n - 1, coeffs }
    }

    fn d_y(&self) -> BinaryForm<R> {
        if self.degree == 0 {
            return BinaryForm { degree: 0, coeffs: vec![self.zero_like()] };
        }
        let n = self.degree;
        let coeffs = (1..=n).map(|i| self.coeffs[i].scale_int(i as i64)).collect();
        BinaryForm { degree: n - 1, coeffs }
    }

    fn derive(&self, dx: usize, dy: usize) -> BinaryForm<R> {
        let mut f = self.clone();
        for _ in 0..dx {
            f = f.d_x();
        }
        for _ in 0..dy {
            f = f.d_y();
        }
        f
    }

    fn mul(&self, o: &BinaryForm<R>) -> BinaryForm<R> {
        let zero = self.zero_like();
        let mut out = vec![zero; self.degree + o.degree + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero_elem() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].plus(&a.times(b));
            }
        }
        BinaryForm { degree: self.degree + o.degree, coeffs: out }
    }

    fn add(&self, o: &BinaryForm<R>) -> BinaryForm<R> {
        assert_eq!(self.degree, o.degree);
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a.plus(b)).collect();
        BinaryForm { degree: self.degree, coeffs }
    }

    fn scale(&self, r: &BigRational) -> BinaryForm<R> {
        BinaryForm { degree: self.degree, coeffs: self.coeffs.iter().map(|c| c.scale(r)).collect() }
    }

    /// The constant of a degree-zero form.
    pub fn constant(&self) -> R {
        assert_eq!(self.degree, 0, "not an invariant");
        self.coeffs[0].clone()
    }
}

/// The k-th transvectant `(f, g)_k`, normalised by `(n-k)!(m-k)!/(n! m!)`.
pub fn transvectant<R: Ring>(f: &BinaryForm<R>, g: &BinaryForm<R>, k: usize) -> BinaryForm<R> {
    let (n, m) = (f.degree, g.degree);
    assert!(k <= n && k <= m, "transvectant order exceeds degree");
    let mut acc: Option<BinaryForm<R>> = None;
    for j in 0..=k {
        let sign = if j % 2 == 0 { 1 } else { -1 };
        let term = f
            .derive(k - j, j)
            .mul(&g.derive(j, k - j))
            .scale(&BigRational::from_integer(BigInt::from(sign * binomial(k, j))));
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term),
        });
    }
    let norm = BigRational::new(
        factorial(n - k) * factorial(m - k),
        factorial(n) * factorial(m),
    );
    acc.unwrap().scale(&norm)
}

/// Clebsch invariants `(A, B, C, D)` of a binary sextic.
pub fn clebsch<R: Ring>(f: &BinaryForm<R>) -> [R; 4] {
    assert_eq!(f.degree, 6, "sextic required");
    let i = transvectant(f, f, 4);
    let delta = transvectant(&i, &i, 2);
    let y1 = transvectant(f, &i, 4);
    let y2 = transvectant(&i, &y1, 2);
    let y3 = transvectant(&i, &y2, 2);
    let a = transvectant(f, f, 6).constant();
    let b = transvectant(&i, &i, 4).constant();
    let c = transvectant(&i, &delta, 4).constant();
    let d = transvectant(&y3, &y1, 2).constant();
    [a, b, c, d]
}

/// Igusa-Clebsch invariants `(I2, I4, I6, I10)` of a binary sextic given by
/// descending coefficients. `I10` is the discriminant of the form.
pub fn igusa_clebsch_form<R: Ring>(f: &BinaryForm<R>) -> [R; 4] {
    let [a, b, c, d] = clebsch(f);
    let q = |n: i64| BigRational::from_integer(BigInt::from(n));
    let a2 = a.times(&a);
    let a3 = a2.times(&a);
    let a5 = a3.times(&a2);
    let i2 = a.scale(&q(-120));
    let i4 = a2.scale(&q(-720)).plus(&b.scale(&q(6750)));
    let i6 = a3
        .scale(&q(8640))
        .plus(&a.times(&b).scale(&q(-108000)))
        .plus(&c.scale(&q(202500)));
    let i10 = a5
        .scale(&q(-62208))
        .plus(&a3.times(&b).scale(&q(972000)))
        .plus(&a2.times(&c).scale(&q(1620000)))
        .plus(&a.times(&b).times(&b).scale(&q(-3037500)))
        .plus(&b.times(&c).scale(&q(-6075000)))
        .plus(&d.scale(&q(-4556250)));
    [i2, i4, i6, i10]
}

pub const WEIGHTS: [u32; 4] = [2, 4, 6, 10];
