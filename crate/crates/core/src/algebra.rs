//! Minimal commutative-ring abstraction used by the invariant-theory code,
//! plus univariate polynomials and formal quadratic extensions over any ring.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Ring elements carry whatever context they need (the quadratic field,
/// the relation of an extension), so `zero_like`/`one_like` take `&self`.
pub trait Ring: Clone + PartialEq + fmt::Debug {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn plus(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
    fn negate(&self) -> Self;
    fn is_zero_elem(&self) -> bool;
    /// Multiplication by a rational constant.
    fn scale(&self, r: &BigRational) -> Self;

    fn scale_int(&self, n: i64) -> Self {
        self.scale(&BigRational::from_integer(BigInt::from(n)))
    }

    fn pow_u(&self, mut e: u32) -> Self {
        let mut acc = self.one_like();
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.times(&base);
            }
            base = base.times(&base);
            e >>= 1;
        }
        acc
    }
}

impl Ring for BigRational {
    fn zero_like(&self) -> Self {
        BigRational::zero()
    }
    fn one_like(&self) -> Self {
        BigRational::one()
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn negate(&self) -> Self {
        -self
    }
    fn is_zero_elem(&self) -> bool {
        self.is_zero()
    }
    fn scale(&self, r: &BigRational) -> Self {
        self * r
    }
}

/// Dense univariate polynomial, coefficients ascending.
#[derive(Clone, PartialEq)]
pub struct Poly<R: Ring> {
    coeffs: Vec<R>,
    zero: R,
}

impl<R: Ring> fmt::Debug for Poly<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coeffs.iter()).finish()
    }
}

impl<R: Ring> Poly<R> {
    pub fn new(mut coeffs: Vec<R>, zero: R) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero_elem()) {
            coeffs.pop();
        }
        Poly { coeffs, zero }
    }

    pub fn constant(c: R) -> Self {
        let zero = c.zero_like();
        Poly::new(vec![c], zero)
    }

    /// The indeterminate.
    pub fn x(sample: &R) -> Self {
        Poly::new(vec![sample.zero_like(), sample.one_like()], sample.zero_like())
    }

    pub fn coeffs(&self) -> &[R] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> R {
        self.coeffs.get(i).cloned().unwrap_or_else(|| self.zero.clone())
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&R> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &R) -> R {
        let mut acc = self.zero.clone();
        for c in self.coeffs.iter().rev() {
            acc = acc.times(x).plus(c);
        }
        acc
    }

    pub fn map<S: Ring>(&self, zero: S, f: impl Fn(&R) -> S) -> Poly<S> {
        Poly::new(self.coeffs.iter().map(f).collect(), zero)
    }
}

impl<R: Ring> Ring for Poly<R> {
    fn zero_like(&self) -> Self {
        Poly::new(Vec::new(), self.zero.clone())
    }
    fn one_like(&self) -> Self {
        Poly::new(vec![self.zero.one_like()], self.zero.clone())
    }
    fn plus(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i).plus(&other.coeff(i))).collect(), self.zero.clone())
    }
    fn minus(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i).minus(&other.coeff(i))).collect(), self.zero.clone())
    }
    fn times(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return self.zero_like();
        }
        let mut out = vec![self.zero.clone(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero_elem() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].plus(&a.times(b));
            }
        }
        Poly::new(out, self.zero.clone())
    }
    fn negate(&self) -> Self {
        Poly::new(self.coeffs.iter().map(|c| c.negate()).collect(), self.zero.clone())
    }
    fn is_zero_elem(&self) -> bool {
        self.coeffs.is_empty()
    }
    fn scale(&self, r: &BigRational) -> Self {
        Poly::new(self.coeffs.iter().map(|c| c.scale(r)).collect(), self.zero.clone())
    }
}

/// Operations that need a field of coefficients.
pub trait Field: Ring {
    fn inverse(&self) -> Option<Self>;
}

impl Field for BigRational {
    fn inverse(&self) -> Option<Self> {
        (!self.is_zero()).then(|| self.recip())
    }
}

impl<F: Field> Poly<F> {
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let dd = divisor.degree().expect("division by zero polynomial");
        let lead_inv = divisor.leading().unwrap().inverse().expect("field coefficient");
        let mut rem = self.coeffs.clone();
        let mut quot = vec![self.zero.clone(); self.coeffs.len().saturating_sub(dd)];
        while rem.len() > dd {
            let top = rem.len() - 1;
            let c = rem[top].times(&lead_inv);
            let shift = top - dd;
            if !c.is_zero_elem() {
                for (i, d) in divisor.coeffs.iter().enumerate() {
                    rem[shift + i] = rem[shift + i].minus(&c.times(d));
                }
            }
            quot[shift] = c;
            rem.pop();
        }
        (Poly::new(quot, self.zero.clone()), Poly::new(rem, self.zero.clone()))
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            None => self.clone(),
            Some(l) => {
                let inv = l.inverse().expect("nonzero leading coefficient");
                Poly::new(self.coeffs.iter().map(|c| c.times(&inv)).collect(), self.zero.clone())
            }
        }
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero_elem() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }
}

/// Formal extension `R[s]/(s^2 - c)`; elements `x + y*s`. Not assumed to
/// be a field: `c` may be a square in `R`.
#[derive(Clone, Debug, PartialEq)]
pub struct RelQuad<R: Ring> {
    pub x: R,
    pub y: R,
    pub c: R,
}

impl<R: Ring> RelQuad<R> {
    pub fn new(x: R, y: R, c: R) -> Self {
        RelQuad { x, y, c }
    }

    pub fn from_base(x: R, c: R) -> Self {
        let y = x.zero_like();
        RelQuad { x, y, c }
    }

    /// The formal generator `s`.
    pub fn generator(c: R) -> Self {
        RelQuad { x: c.zero_like(), y: c.one_like(), c }
    }

    /// The base-ring part when the `s` part vanishes.
    pub fn as_base(&self) -> Option<&R> {
        self.y.is_zero_elem().then_some(&self.x)
    }
}

impl<R: Ring> Ring for RelQuad<R> {
    fn zero_like(&self) -> Self {
        RelQuad::from_base(self.x.zero_like(), self.c.clone())
    }
    fn one_like(&self) -> Self {
        RelQuad::from_base(self.x.one_like(), self.c.clone())
    }
    fn plus(&self, o: &Self) -> Self {
        RelQuad::new(self.x.plus(&o.x), self.y.plus(&o.y), self.c.clone())
    }
    fn minus(&self, o: &Self) -> Self {
        RelQuad::new(self.x.minus(&o.x), self.y.minus(&o.y), self.c.clone())
    }
    fn times(&self, o: &Self) -> Self {
        let x = self.x.times(&o.x).plus(&self.c.times(&self.y.times(&o.y)));
        let y = self.x.times(&o.y).plus(&self.y.times(&o.x));
        RelQuad::new(x, y, self.c.clone())
    }
    fn negate(&self) -> Self {
        RelQuad::new(self.x.negate(), self.y.negate(), self.c.clone())
    }
    fn is_zero_elem(&self) -> bool {
        self.x.is_zero_elem() && self.y.is_zero_elem()
    }
    fn scale(&self, r: &BigRational) -> Self {
        RelQuad::new(self.x.scale(r), self.y.scale(r), self.c.clone())
    }
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}
