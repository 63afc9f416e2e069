//! Table-driven finite fields `F_{p^k}` for `k in {1, 2, 4}` and dense
//! polynomials over them.
//!
//! A field element is stored as a discrete logarithm: `Fe(0)` is zero and
//! `Fe(i + 1)` is `g^i` for a fixed primitive element `g`. Multiplication
//! adds logarithms, addition goes through a Zech table. Coordinates with
//! respect to the defining modulus are available for conversion.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::arith;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fe(pub u32);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

pub struct FiniteField {
    p: u64,
    k: u32,
    q: u64,
    /// Monic modulus, ascending coefficients, length `k + 1`.
    modulus: Vec<u64>,
    /// `exp[i]` = coordinate code of `g^i`, for `0 <= i < q - 1`.
    exp: Vec<u32>,
    /// `log[code]` = `i` with `g^i` = code; unused at code 0.
    log: Vec<u32>,
    /// `zech[n]` = log(1 + g^n), or `u32::MAX` when `1 + g^n = 0`.
    zech: Vec<u32>,
}

impl std::fmt::Debug for FiniteField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GF({}^{})", self.p, self.k)
    }
}

/// Fields up to this size are memoised process-wide.
const CACHE_LIMIT: u64 = 1 << 14;

fn cache() -> &'static Mutex<HashMap<(u64, u32), Arc<FiniteField>>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u32), Arc<FiniteField>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Arithmetic on coordinate vectors modulo a monic polynomial.
struct PolyRep<'a> {
    p: u64,
    modulus: &'a [u64],
}

impl PolyRep<'_> {
    fn k(&self) -> usize {
        self.modulus.len() - 1
    }

    fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let k = self.k();
        let mut prod = vec![0u64; 2 * k];
        for i in 0..k {
            if a[i] == 0 {
                continue;
            }
            for j in 0..k {
                prod[i + j] = (prod[i + j] + a[i] * b[j]) % self.p;
            }
        }
        for top in (k..2 * k).rev() {
            let c = prod[top];
            if c == 0 {
                continue;
            }
            for i in 0..k {
                let sub = c * self.modulus[i] % self.p;
                prod[top - k + i] = (prod[top - k + i] + self.p - sub) % self.p;
            }
            prod[top] = 0;
        }
        prod.truncate(k);
        prod
    }

    fn pow(&self, a: &[u64], mut e: u64) -> Vec<u64> {
        let mut acc = vec![0u64; self.k()];
        acc[0] = 1;
        let mut base = a.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    fn is_one(&self, a: &[u64]) -> bool {
        a[0] == 1 && a[1..].iter().all(|&c| c == 0)
    }
}

fn encode(coords: &[u64], p: u64) -> u32 {
    coords.iter().rev().fold(0u64, |acc, &c| acc * p + c) as u32
}

fn decode(mut code: u64, p: u64, k: u32) -> Vec<u64> {
    (0..k)
        .map(|_| {
            let c = code % p;
            code /= p;
            c
        })
        .collect()
}

impl FiniteField {
    /// The field with `p^k` elements, `k in {1, 2, 4}`.
    pub fn get(p: u64, k: u32) -> Arc<FiniteField> {
        assert!(arith::is_prime(p), "characteristic must be prime");
        assert!(matches!(k, 1 | 2 | 4), "degree must be 1, 2 or 4");
        let q = p.pow(k);
        if q > CACHE_LIMIT {
            return Arc::new(FiniteField::build(p, k));
        }
        if let Some(f) = cache().lock().expect("field cache poisoned").get(&(p, k)) {
            return f.clone();
        }
        let built = Arc::new(FiniteField::build(p, k));
        let mut map = cache().lock().expect("field cache poisoned");
        map.entry((p, k)).or_insert(built).clone()
    }

    fn build(p: u64, k: u32) -> FiniteField {
        let q = p.pow(k);
        let order_factors: Vec<u64> = arith::factor_u64(q - 1).into_iter().map(|(l, _)| l).collect();
        let is_generator = |rep: &PolyRep, g: &[u64]| {
            g.iter().any(|&c| c != 0)
                && rep.is_one(&rep.pow(g, q - 1))
                && order_factors.iter().all(|&l| !rep.is_one(&rep.pow(g, (q - 1) / l)))
        };
        let (modulus, generator) = match k {
            1 => {
                let modulus = vec![0, 1];
                let rep = PolyRep { p, modulus: &modulus };
                let g = (1..p).find(|&g| is_generator(&rep, &[g])).expect("primitive root");
                (modulus, vec![g])
            }
            2 => {
                let modulus = if p == 2 {
                    vec![1, 1, 1]
                } else {
                    vec![p - arith::least_nonresidue(p), 0, 1]
                };
                let rep = PolyRep { p, modulus: &modulus };
                let g = (1..q)
                    .map(|c| decode(c, p, 2))
                    .find(|g| is_generator(&rep, g))
                    .expect("primitive element");
                (modulus, g)
            }
            _ => {
                // primitive quartic: t itself generates the multiplicative group
                let t = vec![0, 1, 0, 0];
                let modulus = (0..q)
                    .map(|c| {
                        let mut m = decode(c, p, 4);
                        m.push(1);
                        m
                    })
                    .find(|m| m[0] != 0 && is_generator(&PolyRep { p, modulus: m }, &t))
                    .expect("primitive quartic exists");
                (modulus, t)
            }
        };
        let rep = PolyRep { p, modulus: &modulus };
        let n = (q - 1) as usize;
        let mut exp = vec![0u32; n];
        let mut log = vec![0u32; q as usize];
        let mut cur = vec![0u64; k as usize];
        cur[0] = 1;
        for (i, slot) in exp.iter_mut().enumerate() {
            let code = encode(&cur, p);
            *slot = code;
            log[code as usize] = i as u32;
            cur = rep.mul(&cur, &generator);
        }
        debug_assert!(rep.is_one(&cur));
        let zech = exp
            .iter()
            .map(|&code| {
                let c0 = code as u64 % p;
                let bumped = code as u64 - c0 + (c0 + 1) % p;
                if bumped == 0 {
                    u32::MAX
                } else {
                    log[bumped as usize]
                }
            })
            .collect();
        FiniteField { p, k, q, modulus, exp, log, zech }
    }

    pub fn characteristic(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    pub fn order(&self) -> u64 {
        self.q
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    pub fn elements(&self) -> impl Iterator<Item = Fe> {
        (0..self.q as u32).map(Fe)
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = Fe> {
        (1..self.q as u32).map(Fe)
    }

    pub fn from_coords(&self, coords: &[u64]) -> Fe {
        let mut c = vec![0u64; self.k as usize];
        for (i, &x) in coords.iter().enumerate() {
            c[i] = x % self.p;
        }
        let code = encode(&c, self.p);
        if code == 0 {
            Fe::ZERO
        } else {
            Fe(self.log[code as usize] + 1)
        }
    }

    pub fn coords(&self, a: Fe) -> Vec<u64> {
        if a.is_zero() {
            vec![0; self.k as usize]
        } else {
            decode(self.exp[(a.0 - 1) as usize] as u64, self.p, self.k)
        }
    }

    pub fn from_u64(&self, n: u64) -> Fe {
        self.from_coords(&[n % self.p])
    }

    pub fn from_i64(&self, n: i64) -> Fe {
        self.from_u64(n.rem_euclid(self.p as i64) as u64)
    }

    /// The image of `a` in the prime field, if `a` lies there.
    pub fn to_prime_field(&self, a: Fe) -> Option<u64> {
        let c = self.coords(a);
        c[1..].iter().all(|&x| x == 0).then_some(c[0])
    }

    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a.is_zero() || b.is_zero() {
            return Fe::ZERO;
        }
        let n = self.q as u32 - 1;
        let s = (a.0 - 1) as u64 + (b.0 - 1) as u64;
        Fe((s % n as u64) as u32 + 1)
    }

    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        let n = self.q as u32 - 1;
        let (la, lb) = (a.0 - 1, b.0 - 1);
        let diff = if lb >= la { lb - la } else { lb + n - la };
        let z = self.zech[diff as usize];
        if z == u32::MAX {
            return Fe::ZERO;
        }
        Fe(((la as u64 + z as u64) % n as u64) as u32 + 1)
    }

    pub fn neg(&self, a: Fe) -> Fe {
        if a.is_zero() || self.p == 2 {
            return a;
        }
        let n = self.q as u32 - 1;
        Fe(((a.0 - 1) + n / 2) % n + 1)
    }

    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    pub fn inv(&self, a: Fe) -> Option<Fe> {
        if a.is_zero() {
            return None;
        }
        let n = self.q as u32 - 1;
        Some(Fe((n - (a.0 - 1)) % n + 1))
    }

    pub fn pow(&self, a: Fe, e: u64) -> Fe {
        if e == 0 {
            return Fe::ONE;
        }
        if a.is_zero() {
            return Fe::ZERO;
        }
        let n = self.q - 1;
        Fe((((a.0 - 1) as u64 * (e % n)) % n) as u32 + 1)
    }

    /// Quadratic character: 0, 1 or -1. In characteristic 2 every nonzero
    /// element is a square.
    pub fn chi(&self, a: Fe) -> i32 {
        if a.is_zero() {
            0
        } else if self.p == 2 || (a.0 - 1).is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    /// Multiplicative order of a nonzero element.
    pub fn mult_order(&self, a: Fe) -> u64 {
        assert!(!a.is_zero());
        let n = self.q - 1;
        n / num_integer::gcd(n, (a.0 - 1) as u64)
    }

    pub fn sqrt(&self, a: Fe) -> Option<Fe> {
        if a.is_zero() {
            return Some(a);
        }
        if self.p == 2 {
            let n = self.q as u32 - 1;
            // squaring is a bijection; halve the log modulo the odd order
            let l = a.0 - 1;
            let h = (0..n).find(|&h| (2 * h) % n == l).expect("odd order");
            return Some(Fe(h + 1));
        }
        let l = a.0 - 1;
        l.is_multiple_of(2).then_some(Fe(l / 2 + 1))
    }

    /// Frobenius `a -> a^p`.
    pub fn frobenius(&self, a: Fe) -> Fe {
        self.pow(a, self.p)
    }

    /// Trace and norm down to the prime field.
    pub fn trace_to_prime(&self, a: Fe) -> u64 {
        let mut acc = Fe::ZERO;
        let mut cur = a;
        for _ in 0..self.k {
            acc = self.add(acc, cur);
            cur = self.frobenius(cur);
        }
        self.to_prime_field(acc).expect("trace lies in the prime field")
    }

    pub fn norm_to_prime(&self, a: Fe) -> u64 {
        let e = (self.q - 1) / (self.p - 1);
        self.to_prime_field(self.pow(a, e)).expect("norm lies in the prime field")
    }

    /// Images of all elements of `self` in a field `big` of degree divisible
    /// by `self.degree()`, indexed by `Fe.0`.
    pub fn embedding_into(&self, big: &FiniteField) -> Vec<Fe> {
        assert_eq!(self.p, big.p);
        assert_eq!(big.k % self.k, 0);
        let rho = if self.k == 1 {
            Fe::ZERO
        } else {
            // a root of our modulus in the big field
            big.elements()
                .find(|&x| {
                    let mut acc = Fe::ZERO;
                    for &c in self.modulus.iter().rev() {
                        acc = big.add(big.mul(acc, x), big.from_u64(c));
                    }
                    acc.is_zero()
                })
                .expect("subfield modulus splits in the extension")
        };
        self.elements()
            .map(|a| {
                let c = self.coords(a);
                let mut acc = Fe::ZERO;
                for &ci in c.iter().rev() {
                    acc = big.add(big.mul(acc, rho), big.from_u64(ci));
                }
                acc
            })
            .collect()
    }
}

/// Dense polynomial over a finite field, ascending coefficients, trimmed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FPoly {
    pub coeffs: Vec<Fe>,
}

impl FPoly {
    pub fn new(mut coeffs: Vec<Fe>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        FPoly { coeffs }
    }

    pub fn zero() -> Self {
        FPoly { coeffs: Vec::new() }
    }

    pub fn x() -> Self {
        FPoly { coeffs: vec![Fe::ZERO, Fe::ONE] }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, f: &FiniteField, x: Fe) -> Fe {
        let mut acc = Fe::ZERO;
        for &c in self.coeffs.iter().rev() {
            acc = f.add(f.mul(acc, x), c);
        }
        acc
    }

    pub fn add(&self, f: &FiniteField, o: &FPoly) -> FPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        let get = |v: &[Fe], i: usize| v.get(i).copied().unwrap_or(Fe::ZERO);
        FPoly::new((0..n).map(|i| f.add(get(&self.coeffs, i), get(&o.coeffs, i))).collect())
    }

    pub fn sub(&self, f: &FiniteField, o: &FPoly) -> FPoly {
        let neg = FPoly::new(o.coeffs.iter().map(|&c| f.neg(c)).collect());
        self.add(f, &neg)
    }

    pub fn mul(&self, f: &FiniteField, o: &FPoly) -> FPoly {
        if self.is_zero() || o.is_zero() {
            return FPoly::zero();
        }
        let mut out = vec![Fe::ZERO; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in o.coeffs.iter().enumerate() {
                out[i + j] = f.add(out[i + j], f.mul(a, b));
            }
        }
        FPoly::new(out)
    }

    pub fn div_rem(&self, f: &FiniteField, d: &FPoly) -> (FPoly, FPoly) {
        let dd = d.degree().expect("division by zero polynomial");
        let inv = f.inv(d.coeffs[dd]).unwrap();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Fe::ZERO; rem.len().saturating_sub(dd)];
        while rem.len() > dd {
            let top = rem.len() - 1;
            let c = f.mul(rem[top], inv);
            let shift = top - dd;
            if !c.is_zero() {
                for (i, &di) in d.coeffs.iter().enumerate() {
                    rem[shift + i] = f.sub(rem[shift + i], f.mul(c, di));
                }
            }
            quot[shift] = c;
            rem.pop();
        }
        (FPoly::new(quot), FPoly::new(rem))
    }

    pub fn rem(&self, f: &FiniteField, d: &FPoly) -> FPoly {
        self.div_rem(f, d).1
    }

    pub fn monic(&self, f: &FiniteField) -> FPoly {
        match self.coeffs.last() {
            None => self.clone(),
            Some(&l) => {
                let inv = f.inv(l).unwrap();
                FPoly::new(self.coeffs.iter().map(|&c| f.mul(c, inv)).collect())
            }
        }
    }

    pub fn gcd(&self, f: &FiniteField, o: &FPoly) -> FPoly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.rem(f, &b);
            a = b;
            b = r;
        }
        a.monic(f)
    }

    pub fn derivative(&self, f: &FiniteField) -> FPoly {
        FPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| f.mul(f.from_u64(i as u64), c))
                .collect(),
        )
    }

    /// `self^e mod m`.
    pub fn pow_mod(&self, f: &FiniteField, mut e: u64, m: &FPoly) -> FPoly {
        let mut acc = FPoly::new(vec![Fe::ONE]).rem(f, m);
        let mut base = self.rem(f, m);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(f, &base).rem(f, m);
            }
            base = base.mul(f, &base).rem(f, m);
            e >>= 1;
        }
        acc
    }

    /// True when the polynomial has no repeated factor.
    pub fn is_squarefree(&self, f: &FiniteField) -> bool {
        let d = self.derivative(f);
        if d.is_zero() {
            return self.degree().unwrap_or(0) == 0;
        }
        self.gcd(f, &d).degree() == Some(0)
    }

    /// Degrees of the irreducible factors of a squarefree polynomial,
    /// ascending, by distinct-degree factorisation.
    pub fn factor_degrees(&self, f: &FiniteField) -> Vec<usize> {
        let mut out = Vec::new();
        let mut rest = self.monic(f);
        let x = FPoly::x();
        let mut h = x.clone();
        let mut d = 0;
        while rest.degree().unwrap_or(0) > 0 {
            d += 1;
            if 2 * d > rest.degree().unwrap() {
                out.push(rest.degree().unwrap());
                break;
            }
            h = h.pow_mod(f, f.order(), &rest);
            let g = h.sub(f, &x).gcd(f, &rest);
            let gd = g.degree().unwrap_or(0);
            if gd > 0 {
                out.extend(std::iter::repeat_n(d, gd / d));
                rest = rest.div_rem(f, &g).0;
                h = h.rem(f, &rest);
            }
        }
        out.sort();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_axioms_small() {
        for (p, k) in [(2, 1), (3, 1), (7, 1), (2, 2), (3, 2), (5, 2), (2, 4), (3, 4)] {
            let f = FiniteField::get(p, k);
            assert_eq!(f.order(), p.pow(k));
            let els: Vec<Fe> = f.elements().collect();
            for &a in &els {
                assert_eq!(f.add(a, f.neg(a)), Fe::ZERO);
                if !a.is_zero() {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), Fe::ONE);
                }
                for &b in els.iter().take(12) {
                    // coordinatewise addition oracle
                    let ca = f.coords(a);
                    let cb = f.coords(b);
                    let sum: Vec<u64> = ca.iter().zip(&cb).map(|(x, y)| (x + y) % p).collect();
                    assert_eq!(f.add(a, b), f.from_coords(&sum));
                }
            }
        }
    }

    #[test]
    fn degree_two_modulus_uses_least_nonresidue() {
        let f = FiniteField::get(7, 2);
        // t^2 - 3 with 3 the least non-residue mod 7
        assert_eq!(f.modulus(), &[4, 0, 1]);
        let t = f.from_coords(&[0, 1]);
        assert_eq!(f.mul(t, t), f.from_u64(3));
        let f2 = FiniteField::get(2, 2);
        assert_eq!(f2.modulus(), &[1, 1, 1]);
    }

    #[test]
    fn chi_counts_squares() {
        for (p, k) in [(3, 1), (11, 1), (5, 2), (3, 4)] {
            let f = FiniteField::get(p, k);
            let squares = f.nonzero_elements().filter(|&a| f.chi(a) == 1).count() as u64;
            assert_eq!(squares, (f.order() - 1) / 2);
            for a in f.nonzero_elements() {
                let is_sq = f.nonzero_elements().any(|b| f.mul(b, b) == a);
                assert_eq!(is_sq, f.chi(a) == 1);
            }
        }
    }

    #[test]
    fn embedding_is_a_homomorphism() {
        for (p, k, big) in [(3, 1, 2), (5, 2, 4), (2, 2, 4), (7, 1, 2)] {
            let s = FiniteField::get(p, k);
            let b = FiniteField::get(p, big);
            let map = s.embedding_into(&b);
            for a in s.elements() {
                for c in s.elements() {
                    assert_eq!(map[s.add(a, c).0 as usize], b.add(map[a.0 as usize], map[c.0 as usize]));
                    assert_eq!(map[s.mul(a, c).0 as usize], b.mul(map[a.0 as usize], map[c.0 as usize]));
                }
            }
        }
    }

    #[test]
    fn factor_degrees_examples() {
        let f = FiniteField::get(7, 1);
        // x^6 - 1 splits completely over F_7
        let mut c = vec![Fe::ZERO; 7];
        c[0] = f.from_i64(-1);
        c[6] = Fe::ONE;
        let poly = FPoly::new(c);
        assert!(poly.is_squarefree(&f));
        assert_eq!(poly.factor_degrees(&f), vec![1; 6]);

        let g = FiniteField::get(5, 1);
        let mut c = vec![Fe::ZERO; 7];
        c[0] = Fe::ONE;
        c[6] = Fe::ONE;
        let poly = FPoly::new(c);
        let degs = poly.factor_degrees(&g);
        assert_eq!(degs.iter().sum::<usize>(), 6);
        // x^6 + 1 = (x^2 + 1)(x^4 - x^2 + 1) over F_5; x^2 + 1 has roots 2, 3
        assert_eq!(degs, vec![1, 1, 2, 2]);
    }

    #[test]
    fn squarefree_detection() {
        let f = FiniteField::get(11, 1);
        // (x - 1)^2 (x + 2)
        let a = FPoly::new(vec![f.from_i64(-1), Fe::ONE]);
        let b = FPoly::new(vec![f.from_i64(2), Fe::ONE]);
        let p = a.mul(&f, &a).mul(&f, &b);
        assert!(!p.is_squarefree(&f));
        assert!(a.mul(&f, &b).is_squarefree(&f));
    }
}
