//! Exact arithmetic in the class-number-one imaginary quadratic fields
//! `K = Q(sqrt(-d))`, `d in {1, 2, 3, 7, 11}`, and their prime ideals.
//!
//! Elements are written `a + b*w` in the integral basis `{1, w}` where
//! `w = sqrt(-d)` for `d = 1, 2` and `w = (1 + sqrt(-d))/2` for `d = 3, 7, 11`.
//! Every ideal is principal, so a prime ideal is stored by a normalised
//! generator.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::algebra::{Field, Ring};
use crate::arith;
use crate::error::{Error, Result};

pub const SUPPORTED_D: [u32; 5] = [1, 2, 3, 7, 11];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OmegaKind {
    /// `w = sqrt(-d)`, minimal polynomial `x^2 + d`.
    SqrtMinusD,
    /// `w = (1 + sqrt(-d))/2`, minimal polynomial `x^2 - x + (1 + d)/4`.
    HalfInteger,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadField {
    d: u32,
}

impl QuadField {
    pub fn new(d: u32) -> Result<Self> {
        if SUPPORTED_D.contains(&d) {
            Ok(QuadField { d })
        } else {
            Err(Error::UnsupportedField(d))
        }
    }

    /// Parse an LMFDB field label such as `2.0.3.1`.
    pub fn from_label(label: &str) -> Result<Self> {
        let parts: Vec<&str> = label.trim().split('.').collect();
        if parts.len() != 4 || parts[0] != "2" || parts[1] != "0" || parts[3] != "1" {
            return Err(Error::UnknownField(label.to_string()));
        }
        let d = match parts[2] {
            "4" => 1,
            "8" => 2,
            "3" => 3,
            "7" => 7,
            "11" => 11,
            _ => return Err(Error::UnknownField(label.to_string())),
        };
        QuadField::new(d)
    }

    pub fn all() -> Vec<QuadField> {
        SUPPORTED_D.iter().map(|&d| QuadField { d }).collect()
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn label(&self) -> String {
        format!("2.0.{}.1", self.disc().abs())
    }

    pub fn disc(&self) -> i64 {
        match self.omega_kind() {
            OmegaKind::SqrtMinusD => -4 * self.d as i64,
            OmegaKind::HalfInteger => -(self.d as i64),
        }
    }

    pub fn omega_kind(&self) -> OmegaKind {
        if (4 - self.d % 4) % 4 == 1 {
            // -d = 1 mod 4
            OmegaKind::HalfInteger
        } else {
            OmegaKind::SqrtMinusD
        }
    }

    /// Trace of `w`.
    pub fn omega_trace(&self) -> i64 {
        match self.omega_kind() {
            OmegaKind::SqrtMinusD => 0,
            OmegaKind::HalfInteger => 1,
        }
    }

    /// Norm of `w`; `w^2 = trace*w - norm`.
    pub fn omega_norm(&self) -> i64 {
        match self.omega_kind() {
            OmegaKind::SqrtMinusD => self.d as i64,
            OmegaKind::HalfInteger => (1 + self.d as i64) / 4,
        }
    }

    pub fn elem(&self, a: i64, b: i64) -> QuadElement {
        QuadElement::new(*self, BigInt::from(a), BigInt::from(b))
    }

    pub fn zero(&self) -> QuadElement {
        self.elem(0, 0)
    }

    pub fn one(&self) -> QuadElement {
        self.elem(1, 0)
    }

    pub fn omega(&self) -> QuadElement {
        self.elem(0, 1)
    }

    /// `sqrt(-d)` in the integral basis.
    pub fn sqrt_minus_d(&self) -> QuadElement {
        match self.omega_kind() {
            OmegaKind::SqrtMinusD => self.elem(0, 1),
            OmegaKind::HalfInteger => self.elem(-1, 2),
        }
    }

    /// The roots of unity of `O_K`.
    pub fn unit_group(&self) -> Vec<QuadElement> {
        let generator = match self.d {
            1 => self.elem(0, 1),
            // w = (1+sqrt(-3))/2 is a primitive sixth root of unity
            3 => self.elem(0, 1),
            _ => self.elem(-1, 0),
        };
        let mut out = vec![self.one()];
        let mut cur = generator.clone();
        while !cur.is_one() {
            out.push(cur.clone());
            cur = &cur * &generator;
        }
        out
    }

    pub fn primes_up_to_norm(&self, bound: u64) -> Vec<PrimeIdeal> {
        let mut out: Vec<PrimeIdeal> = arith::primes_up_to(bound)
            .into_iter()
            .flat_map(|p| split_prime(*self, p))
            .filter(|pr| pr.norm() <= bound)
            .collect();
        out.sort();
        out
    }
}

impl fmt::Display for QuadField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q(sqrt(-{}))", self.d)
    }
}

/// An element `a + b*w` of `O_K`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadElement {
    field: QuadField,
    a: BigInt,
    b: BigInt,
}

impl fmt::Debug for QuadElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for QuadElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        let b_part = if self.b.is_one() {
            "w".to_string()
        } else if self.b == -BigInt::one() {
            "-w".to_string()
        } else {
            format!("{}*w", self.b)
        };
        if self.a.is_zero() {
            write!(f, "{b_part}")
        } else if self.b.is_negative() {
            write!(f, "{}{}", self.a, b_part)
        } else {
            write!(f, "{}+{}", self.a, b_part)
        }
    }
}

impl QuadElement {
    pub fn new(field: QuadField, a: BigInt, b: BigInt) -> Self {
        QuadElement { field, a, b }
    }

    pub fn field(&self) -> QuadField {
        self.field
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }

    pub fn b(&self) -> &BigInt {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.a.is_one() && self.b.is_zero()
    }

    pub fn from_int(field: QuadField, n: BigInt) -> Self {
        QuadElement::new(field, n, BigInt::zero())
    }

    pub fn norm(&self) -> BigInt {
        let t = self.field.omega_trace();
        let n = self.field.omega_norm();
        &self.a * &self.a + &self.a * &self.b * t + &self.b * &self.b * n
    }

    pub fn trace(&self) -> BigInt {
        &self.a * 2 + &self.b * self.field.omega_trace()
    }

    pub fn conj(&self) -> Self {
        // conj(w) = t - w
        let t = self.field.omega_trace();
        QuadElement::new(self.field, &self.a + &self.b * t, -&self.b)
    }

    pub fn is_unit(&self) -> bool {
        self.norm().is_one()
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        QuadElement::new(self.field, &self.a * k, &self.b * k)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = self.field.one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Content: gcd of the two coordinates.
    pub fn content(&self) -> BigInt {
        self.a.gcd(&self.b)
    }

    /// `self / other` when the quotient lies in `O_K`.
    pub fn div_exact(&self, other: &QuadElement) -> Option<QuadElement> {
        let n = other.norm();
        if n.is_zero() {
            return None;
        }
        let num = self * &other.conj();
        if (&num.a % &n).is_zero() && (&num.b % &n).is_zero() {
            Some(QuadElement::new(self.field, &num.a / &n, &num.b / &n))
        } else {
            None
        }
    }

    /// Canonical representative among unit multiples: minimise
    /// (|b|, b < 0, |a|, a < 0) lexicographically.
    pub fn normalize(&self) -> QuadElement {
        self.field
            .unit_group()
            .iter()
            .map(|u| self * u)
            .min_by(|x, y| x.normal_key().cmp(&y.normal_key()))
            .expect("unit group is non-empty")
    }

    fn normal_key(&self) -> (BigInt, bool, BigInt, bool) {
        (self.b.abs(), self.b.is_negative(), self.a.abs(), self.a.is_negative())
    }

    /// Lexicographic comparison of coordinates `(a, b)`.
    pub fn lex_cmp(&self, other: &QuadElement) -> Ordering {
        (&self.a, &self.b).cmp(&(&other.a, &other.b))
    }

    pub fn coords_i64(&self) -> Option<(i64, i64)> {
        Some((self.a.to_i64()?, self.b.to_i64()?))
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident) => {
        impl std::ops::$tr<QuadElement> for QuadElement {
            type Output = QuadElement;
            fn $m(self, rhs: QuadElement) -> QuadElement {
                (&self).$m(&rhs)
            }
        }
        impl std::ops::$tr<&QuadElement> for QuadElement {
            type Output = QuadElement;
            fn $m(self, rhs: &QuadElement) -> QuadElement {
                (&self).$m(rhs)
            }
        }
    };
}

impl std::ops::Add<&QuadElement> for &QuadElement {
    type Output = QuadElement;
    fn add(self, rhs: &QuadElement) -> QuadElement {
        QuadElement::new(self.field, &self.a + &rhs.a, &self.b + &rhs.b)
    }
}

impl std::ops::Sub<&QuadElement> for &QuadElement {
    type Output = QuadElement;
    fn sub(self, rhs: &QuadElement) -> QuadElement {
        QuadElement::new(self.field, &self.a - &rhs.a, &self.b - &rhs.b)
    }
}

impl std::ops::Mul<&QuadElement> for &QuadElement {
    type Output = QuadElement;
    fn mul(self, rhs: &QuadElement) -> QuadElement {
        let t = self.field.omega_trace();
        let n = self.field.omega_norm();
        let bd = &self.b * &rhs.b;
        let a = &self.a * &rhs.a - &bd * n;
        let b = &self.a * &rhs.b + &self.b * &rhs.a + bd * t;
        QuadElement::new(self.field, a, b)
    }
}

impl std::ops::Neg for &QuadElement {
    type Output = QuadElement;
    fn neg(self) -> QuadElement {
        QuadElement::new(self.field, -&self.a, -&self.b)
    }
}

impl std::ops::Neg for QuadElement {
    type Output = QuadElement;
    fn neg(self) -> QuadElement {
        -&self
    }
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

/// An element of `K`: `num / den` with `den > 0` and
/// `gcd(num.a, num.b, den) = 1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadFrac {
    num: QuadElement,
    den: BigInt,
}

impl fmt::Debug for QuadFrac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for QuadFrac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else if self.num.b.is_zero() {
            write!(f, "{}/{}", self.num.a, self.den)
        } else {
            write!(f, "({})/{}", self.num, self.den)
        }
    }
}

impl From<QuadElement> for QuadFrac {
    fn from(num: QuadElement) -> Self {
        QuadFrac { num, den: BigInt::one() }
    }
}

impl QuadFrac {
    pub fn new(num: QuadElement, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let mut g = num.content().gcd(&den);
        if den.is_negative() {
            g = -g;
        }
        let num = QuadElement::new(num.field, &num.a / &g, &num.b / &g);
        QuadFrac { num, den: den / g }
    }

    pub fn from_parts(field: QuadField, a: i64, b: i64, den: i64) -> Self {
        QuadFrac::new(field.elem(a, b), BigInt::from(den))
    }

    pub fn from_rational(field: QuadField, r: &BigRational) -> Self {
        QuadFrac::new(QuadElement::from_int(field, r.numer().clone()), r.denom().clone())
    }

    pub fn from_int(field: QuadField, n: i64) -> Self {
        QuadFrac::from(field.elem(n, 0))
    }

    pub fn field(&self) -> QuadField {
        self.num.field
    }

    pub fn numer(&self) -> &QuadElement {
        &self.num
    }

    pub fn denom(&self) -> &BigInt {
        &self.den
    }

    pub fn is_integral(&self) -> bool {
        self.den.is_one()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn conj(&self) -> Self {
        QuadFrac::new(self.num.conj(), self.den.clone())
    }

    pub fn norm(&self) -> BigRational {
        BigRational::new(self.num.norm(), &self.den * &self.den)
    }

    /// The rational value, when the `w` coordinate vanishes.
    pub fn as_rational(&self) -> Option<BigRational> {
        self.num.b.is_zero().then(|| BigRational::new(self.num.a.clone(), self.den.clone()))
    }

    pub fn inv(&self) -> Option<Self> {
        if self.num.is_zero() {
            return None;
        }
        // 1/(x/d) = d * conj(x) / N(x)
        let n = self.num.norm();
        Some(QuadFrac::new(self.num.conj().scale(&self.den), n))
    }

    /// Square root in `K`, if one exists.
    pub fn sqrt(&self) -> Option<QuadFrac> {
        let field = self.field();
        if self.is_zero() {
            return Some(self.clone());
        }
        // write x = A + B*sqrt(D) with D = -d, solve (U + V sqrt(D))^2 = x
        let (big_a, big_b) = self.sqrt_d_coords();
        let dd = BigRational::from_integer(BigInt::from(-(field.d as i64)));
        let norm = &big_a * &big_a - &dd * &big_b * &big_b;
        let root_norm = rational_sqrt(&norm)?;
        let two = BigRational::from_integer(BigInt::from(2));
        for sign in [1i64, -1] {
            let m = &root_norm * BigRational::from_integer(BigInt::from(sign));
            // U^2 + D V^2 = A, U^2 - D V^2 = m
            let u2 = (&big_a + &m) / &two;
            let v2 = (&big_a - &m) / (&two * &dd);
            let (Some(u), Some(v)) = (rational_sqrt(&u2), rational_sqrt(&v2)) else {
                continue;
            };
            for (su, sv) in [(1i64, 1i64), (1, -1)] {
                let uu = &u * BigRational::from_integer(BigInt::from(su));
                let vv = &v * BigRational::from_integer(BigInt::from(sv));
                let cand = QuadFrac::from_rational(field, &uu)
                    .plus(&QuadFrac::from(field.sqrt_minus_d()).scale(&vv));
                if cand.times(&cand) == *self {
                    return Some(cand);
                }
            }
        }
        None
    }

    /// Coordinates `(A, B)` with `self = A + B*sqrt(-d)`.
    fn sqrt_d_coords(&self) -> (BigRational, BigRational) {
        let den = &self.den;
        match self.field().omega_kind() {
            OmegaKind::SqrtMinusD => (
                BigRational::new(self.num.a.clone(), den.clone()),
                BigRational::new(self.num.b.clone(), den.clone()),
            ),
            OmegaKind::HalfInteger => (
                BigRational::new(&self.num.a * 2 + &self.num.b, den * 2),
                BigRational::new(self.num.b.clone(), den * 2),
            ),
        }
    }
}

fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    let n = arith::exact_sqrt(r.numer())?;
    let d = arith::exact_sqrt(r.denom())?;
    Some(BigRational::new(n, d))
}

impl Ring for QuadFrac {
    fn zero_like(&self) -> Self {
        QuadFrac::from(self.field().zero())
    }
    fn one_like(&self) -> Self {
        QuadFrac::from(self.field().one())
    }
    fn plus(&self, o: &Self) -> Self {
        let num = self.num.scale(&o.den) + o.num.scale(&self.den);
        QuadFrac::new(num, &self.den * &o.den)
    }
    fn minus(&self, o: &Self) -> Self {
        let num = self.num.scale(&o.den) - o.num.scale(&self.den);
        QuadFrac::new(num, &self.den * &o.den)
    }
    fn times(&self, o: &Self) -> Self {
        QuadFrac::new(&self.num * &o.num, &self.den * &o.den)
    }
    fn negate(&self) -> Self {
        QuadFrac { num: -&self.num, den: self.den.clone() }
    }
    fn is_zero_elem(&self) -> bool {
        self.num.is_zero()
    }
    fn scale(&self, r: &BigRational) -> Self {
        QuadFrac::new(self.num.scale(r.numer()), &self.den * r.denom())
    }
}

impl Field for QuadFrac {
    fn inverse(&self) -> Option<Self> {
        self.inv()
    }
}

/// Parse an element literal: `a+b*w`, `-w`, `7`, `(a+b*w)/den` or `a/den`.
pub fn parse_element(field: QuadField, text: &str) -> Result<QuadFrac> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::Parse("empty element literal".into()));
    }
    let (numer, den) = match s.rfind('/') {
        Some(pos) => {
            let den: BigInt = s[pos + 1..]
                .parse()
                .map_err(|_| Error::Parse(format!("bad denominator in `{text}`")))?;
            if den.is_zero() {
                return Err(Error::Parse(format!("zero denominator in `{text}`")));
            }
            let mut n = &s[..pos];
            if n.starts_with('(') && n.ends_with(')') {
                n = &n[1..n.len() - 1];
            }
            (n.to_string(), den)
        }
        None => (s.clone(), BigInt::one()),
    };
    let mut a = BigInt::zero();
    let mut b = BigInt::zero();
    let bytes: Vec<char> = numer.chars().collect();
    let mut i = 0;
    if bytes.is_empty() {
        return Err(Error::Parse(format!("empty numerator in `{text}`")));
    }
    while i < bytes.len() {
        let mut sign = BigInt::one();
        if bytes[i] == '+' || bytes[i] == '-' {
            if bytes[i] == '-' {
                sign = -sign;
            }
            i += 1;
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let coeff: Option<BigInt> = (i > start).then(|| numer[start..i].parse().unwrap());
        let has_w = if i < bytes.len() && bytes[i] == '*' {
            i += 1;
            if i < bytes.len() && bytes[i] == 'w' {
                i += 1;
                true
            } else {
                return Err(Error::Parse(format!("expected `w` after `*` in `{text}`")));
            }
        } else if i < bytes.len() && bytes[i] == 'w' {
            i += 1;
            true
        } else {
            false
        };
        match (coeff, has_w) {
            (None, false) => return Err(Error::Parse(format!("malformed term in `{text}`"))),
            (c, true) => b += sign * c.unwrap_or_else(BigInt::one),
            (Some(c), false) => a += sign * c,
        }
        if i < bytes.len() && bytes[i] != '+' && bytes[i] != '-' {
            return Err(Error::Parse(format!("unexpected `{}` in `{text}`", bytes[i])));
        }
    }
    Ok(QuadFrac::new(QuadElement::new(field, a, b), den))
}

/// A prime ideal of `O_K`, stored by a normalised generator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PrimeIdeal {
    p: u64,
    f: u8,
    e: u8,
    gen: QuadElement,
    conj_gen: Option<QuadElement>,
    index: u8,
    /// Image of `w` in `O_K / P` when the residue degree is one.
    root: Option<u64>,
}

impl fmt::Debug for PrimeIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl fmt::Display for PrimeIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl PartialOrd for PrimeIdeal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PrimeIdeal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.norm()
            .cmp(&other.norm())
            .then_with(|| self.gen.lex_cmp(&other.gen))
    }
}

impl PrimeIdeal {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn residue_degree(&self) -> u8 {
        self.f
    }

    pub fn ramification(&self) -> u8 {
        self.e
    }

    pub fn field(&self) -> QuadField {
        self.gen.field
    }

    pub fn gen(&self) -> &QuadElement {
        &self.gen
    }

    pub fn norm(&self) -> u64 {
        self.p.pow(self.f as u32)
    }

    pub fn is_split(&self) -> bool {
        self.conj_gen.is_some()
    }

    pub fn is_inert(&self) -> bool {
        self.f == 2
    }

    pub fn is_ramified(&self) -> bool {
        self.e == 2
    }

    /// 1 or 2 for split primes (1 = lexicographically smaller generator), else 0.
    pub fn index(&self) -> u8 {
        self.index
    }

    pub fn root(&self) -> Option<u64> {
        self.root
    }

    pub fn conjugate(&self) -> Option<PrimeIdeal> {
        let g = self.conj_gen.as_ref()?;
        split_prime(self.field(), self.p).into_iter().find(|q| &q.gen == g)
    }

    pub fn label(&self) -> String {
        if self.index > 0 {
            format!("p{}.{}[{}]", self.p, self.index, self.gen)
        } else {
            format!("p{}[{}]", self.norm(), self.gen)
        }
    }

    pub fn divides(&self, x: &QuadElement) -> bool {
        if x.is_zero() {
            return true;
        }
        x.div_exact(&self.gen).is_some()
    }

    /// `P`-adic valuation of a nonzero element of `O_K`.
    pub fn valuation(&self, x: &QuadElement) -> u32 {
        assert!(!x.is_zero(), "valuation of zero");
        let mut cur = x.clone();
        let mut v = 0;
        while let Some(q) = cur.div_exact(&self.gen) {
            cur = q;
            v += 1;
        }
        v
    }

    /// `P`-adic valuation of a nonzero element of `K`.
    pub fn valuation_frac(&self, x: &QuadFrac) -> i64 {
        let vn = self.valuation(x.numer()) as i64;
        let vd = arith::valuation(x.denom(), self.p) as i64 * self.e as i64;
        vn - vd
    }

    /// Whether this prime's generator matches `g` up to units.
    pub fn has_generator(&self, g: &QuadElement) -> bool {
        g.field() == self.field() && g.normalize() == self.gen
    }

    /// Identify the prime ideal generated by `g`, if `g` generates a prime.
    pub fn from_generator(g: &QuadElement) -> Option<PrimeIdeal> {
        let n = g.norm().to_u64()?;
        if n < 2 {
            return None;
        }
        let p = if arith::is_prime(n) {
            n
        } else {
            let r = (n as f64).sqrt().round() as u64;
            if r * r != n || !arith::is_prime(r) {
                return None;
            }
            r
        };
        let target = g.normalize();
        split_prime(g.field(), p).into_iter().find(|q| q.gen == target)
    }
}

/// Roots of the minimal polynomial of `w` modulo `p`.
fn omega_roots_mod(field: QuadField, p: u64) -> Vec<u64> {
    let t = field.omega_trace();
    let n = field.omega_norm();
    let eval = |x: u64| -> u64 {
        let x = x as i128;
        ((x * x - t as i128 * x + n as i128).rem_euclid(p as i128)) as u64
    };
    if p == 2 {
        return (0..2).filter(|&x| eval(x) == 0).collect();
    }
    let disc = t * t - 4 * n;
    let Some(r) = arith::sqrt_mod(disc, p) else {
        return Vec::new();
    };
    let inv2 = p.div_ceil(2);
    let r1 = arith::mul_mod((t.rem_euclid(p as i64) as u64 + r) % p, inv2, p);
    let r2 = arith::mul_mod((t.rem_euclid(p as i64) as u64 + p - r) % p, inv2, p);
    let mut v = vec![r1, r2];
    v.sort();
    v.dedup();
    v
}

/// Shortest nonzero element of the ideal `(p, w - c)` for the norm form.
fn reduce_ideal_generator(field: QuadField, p: u64, c: u64) -> QuadElement {
    let t = BigInt::from(field.omega_trace());
    let n = BigInt::from(field.omega_norm());
    // twice the bilinear form attached to Q(x, y) = x^2 + t x y + n y^2
    let dot2 = |u: &(BigInt, BigInt), v: &(BigInt, BigInt)| -> BigInt {
        &u.0 * &v.0 * 2 + &t * (&u.0 * &v.1 + &u.1 * &v.0) + &n * &u.1 * &v.1 * 2
    };
    let mut v1 = (BigInt::from(p), BigInt::zero());
    let mut v2 = (-BigInt::from(c), BigInt::one());
    loop {
        if dot2(&v1, &v1) > dot2(&v2, &v2) {
            std::mem::swap(&mut v1, &mut v2);
        }
        let num = dot2(&v1, &v2);
        let den = dot2(&v1, &v1);
        let mu = BigRational::new(num, den).round().to_integer();
        v2 = (&v2.0 - &mu * &v1.0, &v2.1 - &mu * &v1.1);
        if dot2(&v2, &v2) >= dot2(&v1, &v1) {
            break;
        }
    }
    QuadElement::new(field, v1.0, v1.1)
}

/// The prime ideals of `O_K` above the rational prime `p`.
pub fn split_prime(field: QuadField, p: u64) -> Vec<PrimeIdeal> {
    assert!(p >= 2, "p must be at least 2");
    match arith::kronecker_disc(field.disc(), p) {
        -1 => vec![PrimeIdeal {
            p,
            f: 2,
            e: 1,
            gen: field.elem(p as i64, 0),
            conj_gen: None,
            index: 0,
            root: None,
        }],
        0 => {
            let c = omega_roots_mod(field, p)[0];
            let gen = reduce_ideal_generator(field, p, c).normalize();
            vec![PrimeIdeal { p, f: 1, e: 2, gen, conj_gen: None, index: 0, root: Some(c) }]
        }
        _ => {
            let roots = omega_roots_mod(field, p);
            let mut gens: Vec<(QuadElement, u64)> = roots
                .iter()
                .map(|&c| (reduce_ideal_generator(field, p, c).normalize(), c))
                .collect();
            gens.sort_by(|x, y| x.0.lex_cmp(&y.0));
            let (g1, c1) = gens[0].clone();
            let (g2, c2) = gens[1].clone();
            vec![
                PrimeIdeal {
                    p,
                    f: 1,
                    e: 1,
                    gen: g1.clone(),
                    conj_gen: Some(g2.clone()),
                    index: 1,
                    root: Some(c1),
                },
                PrimeIdeal { p, f: 1, e: 1, gen: g2, conj_gen: Some(g1), index: 2, root: Some(c2) },
            ]
        }
    }
}

/// Euclidean division `x = q*y + r` with `N(r) < N(y)`. All five fields are
/// norm-Euclidean; the quotient is the nearest lattice point to `x/y`.
pub fn div_round(x: &QuadElement, y: &QuadElement) -> (QuadElement, QuadElement) {
    assert!(!y.is_zero(), "division by zero");
    let field = x.field();
    let n = y.norm();
    let num = x * &y.conj();
    let floor = |v: &BigInt| v.div_floor(&n);
    let (a0, b0) = (floor(num.a()), floor(num.b()));
    let mut best: Option<(QuadElement, QuadElement, BigInt)> = None;
    for da in 0..2 {
        for db in 0..2 {
            let q = QuadElement::new(field, &a0 + da, &b0 + db);
            let r = x - &(&q * y);
            let rn = r.norm();
            if best.as_ref().is_none_or(|b| rn < b.2) {
                best = Some((q, r, rn));
            }
        }
    }
    let (q, r, _) = best.unwrap();
    (q, r)
}

/// A greatest common divisor in `O_K`, normalised.
pub fn gcd(x: &QuadElement, y: &QuadElement) -> QuadElement {
    let (mut a, mut b) = (x.clone(), y.clone());
    while !b.is_zero() {
        let (_, r) = div_round(&a, &b);
        a = b;
        b = r;
    }
    if a.is_zero() {
        a
    } else {
        a.normalize()
    }
}

/// The norm of an element, as a free function.
pub fn norm(x: &QuadElement) -> BigInt {
    x.norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(d: u32) -> QuadField {
        QuadField::new(d).unwrap()
    }

    #[test]
    fn labels_round_trip() {
        for f in QuadField::all() {
            assert_eq!(QuadField::from_label(&f.label()).unwrap(), f);
        }
        assert_eq!(k(3).label(), "2.0.3.1");
        assert_eq!(k(1).label(), "2.0.4.1");
        assert!(QuadField::from_label("2.0.15.1").is_err());
        assert!(QuadField::new(5).is_err());
    }

    #[test]
    fn norms() {
        assert_eq!(k(1).one().norm(), BigInt::from(1));
        assert_eq!(k(1).elem(2, 3).norm(), BigInt::from(13));
        // sqrt(-3) = 2w - 1 has norm 3
        assert_eq!(k(3).sqrt_minus_d().norm(), BigInt::from(3));
    }

    #[test]
    fn unit_groups() {
        assert_eq!(k(1).unit_group().len(), 4);
        assert_eq!(k(3).unit_group().len(), 6);
        for d in [2, 7, 11] {
            assert_eq!(k(d).unit_group().len(), 2);
        }
        for f in QuadField::all() {
            for u in f.unit_group() {
                assert!(u.is_unit());
            }
        }
    }

    #[test]
    fn splitting_examples() {
        let r = split_prime(k(3), 3);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].ramification(), 2);
        assert!(r[0].has_generator(&k(3).sqrt_minus_d()));

        let i = split_prime(k(3), 2);
        assert_eq!(i.len(), 1);
        assert_eq!(i[0].residue_degree(), 2);
        assert_eq!(i[0].gen(), &k(3).elem(2, 0));

        let s = split_prime(k(3), 13);
        assert_eq!(s.len(), 2);
        for pr in &s {
            assert_eq!(pr.gen().norm(), BigInt::from(13));
        }
        let prod = s[0].gen() * s[1].gen();
        assert!(prod.div_exact(&k(3).elem(13, 0)).unwrap().is_unit());
    }

    /// Brute-force oracle: does some a + b*w have norm p?
    fn has_element_of_norm(f: QuadField, p: i64) -> bool {
        let r = (4 * p) as f64;
        let bound = r.sqrt() as i64 + 2;
        (-bound..=bound).any(|a| (-bound..=bound).any(|b| f.elem(a, b).norm() == BigInt::from(p)))
    }

    #[test]
    fn split_matches_brute_force_norm_search() {
        for f in QuadField::all() {
            for p in arith::primes_up_to(80) {
                let primes = split_prime(f, p);
                let degree_one = primes.iter().any(|q| q.residue_degree() == 1);
                assert_eq!(degree_one, has_element_of_norm(f, p as i64), "{f} p={p}");
            }
        }
    }

    #[test]
    fn ramification_bookkeeping_up_to_1000() {
        for f in QuadField::all() {
            for p in arith::primes_up_to(1000) {
                let primes = split_prime(f, p);
                let total: u32 = primes.iter().map(|q| (q.e * q.f) as u32).sum();
                assert_eq!(total, 2);
                for q in &primes {
                    assert_eq!(q.gen().norm(), BigInt::from(q.norm()));
                    assert_eq!(q.is_ramified(), f.disc() % p as i64 == 0);
                }
            }
        }
    }

    #[test]
    fn normalization_is_idempotent_and_unit_invariant() {
        let f = k(3);
        let g = f.elem(5, -3);
        let n = g.normalize();
        assert_eq!(n.normalize(), n);
        for u in f.unit_group() {
            assert_eq!((&g * &u).normalize(), n);
        }
        assert_eq!(k(1).elem(-2, -1).normalize(), k(1).elem(2, 1));
    }

    #[test]
    fn literal_parsing() {
        let f = k(3);
        assert_eq!(parse_element(f, "3-2*w").unwrap(), QuadFrac::from(f.elem(3, -2)));
        assert_eq!(parse_element(f, "-w").unwrap(), QuadFrac::from(f.elem(0, -1)));
        assert_eq!(parse_element(f, "(54-4*w)/3").unwrap(), QuadFrac::from_parts(f, 54, -4, 3));
        assert_eq!(parse_element(f, "4/6").unwrap(), QuadFrac::from_parts(f, 2, 0, 3));
        assert!(parse_element(f, "3+x").is_err());
        assert!(parse_element(f, "1/0").is_err());
        let x = QuadFrac::from_parts(f, 7, -5, 9);
        assert_eq!(parse_element(f, &x.to_string()).unwrap(), x);
    }

    #[test]
    fn square_roots_in_k() {
        let f = k(3);
        let x = QuadFrac::from_parts(f, 3, -7, 5);
        let sq = x.times(&x);
        let r = sq.sqrt().unwrap();
        assert_eq!(r.times(&r), sq);
        assert!(QuadFrac::from_int(f, 2).sqrt().is_none());
        assert!(QuadFrac::from_int(f, -3).sqrt().is_some());
        assert!(QuadFrac::from_int(k(1), -1).sqrt().is_some());
    }

    #[test]
    fn euclidean_division_reduces_norm() {
        for f in QuadField::all() {
            for (a, b, c, d) in [(17, -5, 3, 2), (100, 33, -7, 4), (1, 1, 0, 3), (-41, 12, 5, -5)] {
                let x = f.elem(a, b);
                let y = f.elem(c, d);
                let (q, r) = div_round(&x, &y);
                assert_eq!(&(&q * &y) + &r, x);
                assert!(r.norm() < y.norm(), "{f}: {x} / {y}");
            }
            let g = gcd(&(f.elem(3, 1) * f.elem(2, -1)), &(f.elem(3, 1) * f.elem(5, 0)));
            assert!(g.div_exact(&f.elem(3, 1)).is_some());
        }
    }

    #[test]
    fn valuations() {
        let f = k(3);
        let p13 = &split_prime(f, 13)[0];
        let x = p13.gen().pow(3) * f.elem(2, 0);
        assert_eq!(p13.valuation(&x), 3);
        let r3 = &split_prime(f, 3)[0];
        assert_eq!(r3.valuation(&f.elem(9, 0)), 4);
        assert_eq!(r3.valuation_frac(&QuadFrac::from_parts(f, 1, 0, 3)), -2);
    }
}
