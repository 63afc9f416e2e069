//! Quaternionic mod-ℓ group theory and residual diagnostics.
//!
//! `O/ℓ` for a maximal order of a quaternion algebra ramified at `ℓ` is
//! modelled by pairs `(α, β)` over `F_{ℓ^2}` standing for the matrices
//! `((α, β), (0, α^ℓ))`. The ℓ-adic order itself is modelled in
//! [`LocalOrderModel`] by `α + βj` with `α, β` in the unramified quadratic
//! ring, `j^2 = ℓ` and `jα = α'j`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_integer::Integer;
use serde::Serialize;

use crate::arith;
use crate::counting::{reduce_curve, TraceTable};
use crate::curve::GenusTwoCurve;
use crate::error::{Error, Result};
use crate::gf::{FPoly, Fe, FiniteField};
use crate::quadfield::PrimeIdeal;
use crate::residue::ResidueField;

pub const MAX_ENUMERATION_ELL: u64 = 7;

fn check_ell(ell: u64, max: u64) -> Result<()> {
    if !arith::is_prime(ell) || ell > max {
        return Err(Error::InvalidConfig(format!("ℓ = {ell} must be a prime at most {max}")));
    }
    Ok(())
}

pub struct QuatOrderModEll {
    ell: u64,
    field: Arc<FiniteField>,
    elements: Vec<(Fe, Fe)>,
}

impl QuatOrderModEll {
    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn field(&self) -> &Arc<FiniteField> {
        &self.field
    }

    pub fn elements(&self) -> &[(Fe, Fe)] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// `(α, β)(γ, δ) = (αγ, αδ + βγ^ℓ)`.
    pub fn mul(&self, x: (Fe, Fe), y: (Fe, Fe)) -> (Fe, Fe) {
        let f = &self.field;
        let a = f.mul(x.0, y.0);
        let b = f.add(f.mul(x.0, y.1), f.mul(x.1, f.frobenius(y.0)));
        (a, b)
    }

    pub fn inv(&self, x: (Fe, Fe)) -> (Fe, Fe) {
        let f = &self.field;
        let ai = f.inv(x.0).expect("α is a unit");
        (ai, f.neg(f.mul(f.mul(x.1, f.frobenius(ai)), ai)))
    }

    pub fn identity(&self) -> (Fe, Fe) {
        (self.field.from_u64(1), Fe::ZERO)
    }

    pub fn element_order(&self, x: (Fe, Fe)) -> u64 {
        let e = self.identity();
        let mut y = x;
        let mut n = 1;
        while y != e {
            y = self.mul(y, x);
            n += 1;
        }
        n
    }

    /// Whether products and inverses of elements stay in the shape.
    pub fn is_closed(&self) -> bool {
        let f = &self.field;
        let in_shape = |x: (Fe, Fe)| !x.0.is_zero();
        self.elements.iter().all(|&x| in_shape(self.inv(x)) && self.mul(x, self.inv(x)) == self.identity())
            && self.elements.iter().all(|&x| {
                self.elements.iter().step_by(7).all(|&y| {
                    let z = self.mul(x, y);
                    // as matrices the (2,2) entry of the product is (αγ)^ℓ
                    in_shape(z) && f.frobenius(z.0) == f.mul(f.frobenius(x.0), f.frobenius(y.0))
                })
            })
    }
}

pub fn build_quat_order_group(ell: u64) -> Result<QuatOrderModEll> {
    check_ell(ell, MAX_ENUMERATION_ELL)?;
    let field = FiniteField::get(ell, 2);
    let mut elements = Vec::new();
    for a in field.nonzero_elements() {
        for b in field.elements() {
            elements.push((a, b));
        }
    }
    Ok(QuatOrderModEll { ell, field, elements })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SesReport {
    pub ell: u64,
    pub group_order: usize,
    pub kernel_order: usize,
    pub kernel_exponent: u64,
    pub kernel_abelian: bool,
    /// `β -> (1, β)` is an isomorphism from `F_{ℓ^2}^+` onto the kernel.
    pub kernel_is_additive_group: bool,
    pub reduction_is_homomorphism: bool,
    pub quotient_order: usize,
    pub quotient_cyclic: bool,
}

impl SesReport {
    pub fn holds(&self) -> bool {
        let l2 = (self.ell * self.ell) as usize;
        self.group_order == (l2 - 1) * l2
            && self.kernel_order == l2
            && self.kernel_exponent == self.ell
            && self.kernel_abelian
            && self.kernel_is_additive_group
            && self.reduction_is_homomorphism
            && self.quotient_order == l2 - 1
            && self.quotient_cyclic
    }
}

/// The sequence `1 -> F_{ℓ^2}^+ -> (O/ℓ)^× -> F_{ℓ^2}^× -> 1` with the map
/// `(α, β) -> α`, checked by enumeration.
pub fn verify_ses(ell: u64) -> Result<SesReport> {
    let g = build_quat_order_group(ell)?;
    let f = g.field().clone();
    let one = f.from_u64(1);
    let kernel: Vec<(Fe, Fe)> = g.elements().iter().copied().filter(|x| x.0 == one).collect();
    let kernel_abelian = kernel.iter().all(|&x| kernel.iter().all(|&y| g.mul(x, y) == g.mul(y, x)));
    let kernel_exponent = kernel.iter().map(|&x| g.element_order(x)).fold(1, |a, b| a.lcm(&b));
    let kernel_is_additive_group = kernel
        .iter()
        .all(|&x| kernel.iter().all(|&y| g.mul(x, y) == (one, f.add(x.1, y.1))));
    let reduction_is_homomorphism = g
        .elements()
        .iter()
        .step_by(3)
        .all(|&x| g.elements().iter().step_by(5).all(|&y| g.mul(x, y).0 == f.mul(x.0, y.0)));
    let mut image: Vec<Fe> = g.elements().iter().map(|x| x.0).collect();
    image.sort();
    image.dedup();
    let quotient_order = image.len();
    let quotient_cyclic = image.iter().any(|&a| f.mult_order(a) as usize == quotient_order);
    Ok(SesReport {
        ell,
        group_order: g.order(),
        kernel_order: kernel.len(),
        kernel_exponent,
        kernel_abelian,
        kernel_is_additive_group,
        reduction_is_homomorphism,
        quotient_order,
        quotient_cyclic,
    })
}

/// `Z/ℓ^k[θ]`, the unramified quadratic ring truncated at precision `k`:
/// `θ^2 = u` for odd `ℓ` (u a non-residue), `θ^2 = θ - 1` for `ℓ = 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalOrderModel {
    pub ell: i64,
    pub k: u32,
    pub modulus: i64,
    /// `i^2 = u`, with `i = θ` for odd ℓ and `i = 2θ - 1` (so `u = -3`) for ℓ = 2.
    pub u: i64,
}

/// `a + bθ`.
type Unr = (i64, i64);
/// `α + βj`.
pub type LocalElement = (Unr, Unr);

impl LocalOrderModel {
    pub fn new(ell: u64, k: u32) -> Result<Self> {
        if ![2, 3, 5].contains(&ell) || !(1..=4).contains(&k) {
            return Err(Error::InvalidConfig(format!("local model needs ℓ in {{2, 3, 5}} and 1 <= k <= 4, got ({ell}, {k})")));
        }
        let u = if ell == 2 { -3 } else { arith::least_nonresidue(ell) as i64 };
        Ok(LocalOrderModel { ell: ell as i64, k, modulus: (ell as i64).pow(k), u })
    }

    fn red(&self, x: i64) -> i64 {
        x.rem_euclid(self.modulus)
    }

    fn unr(&self, a: i64, b: i64) -> Unr {
        (self.red(a), self.red(b))
    }

    fn umul(&self, x: Unr, y: Unr) -> Unr {
        if self.ell == 2 {
            // θ^2 = θ - 1
            let c = x.1 * y.1;
            self.unr(x.0 * y.0 - c, x.0 * y.1 + x.1 * y.0 + c)
        } else {
            self.unr(x.0 * y.0 + self.u * x.1 * y.1, x.0 * y.1 + x.1 * y.0)
        }
    }

    fn uadd(&self, x: Unr, y: Unr) -> Unr {
        self.unr(x.0 + y.0, x.1 + y.1)
    }

    /// Galois conjugation of the unramified ring.
    fn uconj(&self, x: Unr) -> Unr {
        if self.ell == 2 {
            // θ' = 1 - θ
            self.unr(x.0 + x.1, -x.1)
        } else {
            self.unr(x.0, -x.1)
        }
    }

    pub fn mul(&self, x: LocalElement, y: LocalElement) -> LocalElement {
        let ell = (self.ell, 0);
        let a = self.uadd(self.umul(x.0, y.0), self.umul(ell, self.umul(x.1, self.uconj(y.1))));
        let b = self.uadd(self.umul(x.0, y.1), self.umul(x.1, self.uconj(y.0)));
        (a, b)
    }

    pub fn add(&self, x: LocalElement, y: LocalElement) -> LocalElement {
        (self.uadd(x.0, y.0), self.uadd(x.1, y.1))
    }

    pub fn neg(&self, x: LocalElement) -> LocalElement {
        (self.unr(-x.0 .0, -x.0 .1), self.unr(-x.1 .0, -x.1 .1))
    }

    pub fn from_int(&self, n: i64) -> LocalElement {
        (self.unr(n, 0), (0, 0))
    }

    pub fn i(&self) -> LocalElement {
        if self.ell == 2 {
            (self.unr(-1, 2), (0, 0))
        } else {
            ((0, 1), (0, 0))
        }
    }

    pub fn j(&self) -> LocalElement {
        ((0, 0), (1, 0))
    }

    /// Reduced norm `αα' - ℓββ'`, an element of `Z/ℓ^k`.
    pub fn norm(&self, x: LocalElement) -> i64 {
        let n = |y: Unr| self.umul(y, self.uconj(y));
        let a = n(x.0);
        let b = n(x.1);
        debug_assert_eq!(a.1, 0);
        self.red(a.0 - self.ell * b.0)
    }

    /// `ℓ`-adic valuation of the reduced norm, capped at `k`.
    pub fn valuation(&self, x: LocalElement) -> u32 {
        let n = self.norm(x);
        if n == 0 {
            return self.k;
        }
        arith::valuation(&n.into(), self.ell as u64)
    }

    fn coords(&self, x: LocalElement) -> [i64; 4] {
        [x.0 .0, x.0 .1, x.1 .0, x.1 .1]
    }

    fn basis(&self) -> [LocalElement; 4] {
        [((1, 0), (0, 0)), ((0, 1), (0, 0)), ((0, 0), (1, 0)), ((0, 0), (0, 1))]
    }

    /// Hermite normal form of the subgroup of `(Z/ℓ^k)^4` spanned by `gens`.
    fn span(&self, gens: &[[i64; 4]]) -> Vec<[i64; 4]> {
        let mut rows: Vec<[i64; 4]> = gens.to_vec();
        for i in 0..4 {
            let mut r = [0; 4];
            r[i] = self.modulus;
            rows.push(r);
        }
        hermite_normal_form(rows)
    }
}

/// Row-style HNF of an integer lattice of full rank 4.
fn hermite_normal_form(mut rows: Vec<[i64; 4]>) -> Vec<[i64; 4]> {
    let mut out = Vec::new();
    for col in 0..4 {
        // gcd-combine all rows into one with a pivot in `col`
        loop {
            let nz: Vec<usize> = (0..rows.len()).filter(|&r| rows[r][col] != 0).collect();
            if nz.len() <= 1 {
                break;
            }
            let piv = *nz.iter().min_by_key(|&&r| rows[r][col].abs()).unwrap();
            for &r in &nz {
                if r != piv {
                    let q = rows[r][col].div_euclid(rows[piv][col]);
                    for c in 0..4 {
                        rows[r][c] -= q * rows[piv][c];
                    }
                }
            }
        }
        if let Some(pos) = rows.iter().position(|r| r[col] != 0) {
            let mut r = rows.swap_remove(pos);
            if r[col] < 0 {
                r.iter_mut().for_each(|x| *x = -*x);
            }
            out.push(r);
        }
    }
    // reduce entries above pivots
    for i in 0..out.len() {
        for k in 0..i {
            let q = out[k][i].div_euclid(out[i][i]);
            for c in 0..4 {
                out[k][c] -= q * out[i][c];
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalModelReport {
    pub ell: u64,
    pub precision: u32,
    pub u: i64,
    pub i_squared_is_u: bool,
    pub j_squared_is_ell: bool,
    pub ij_anticommute: bool,
    pub ideal_two_sided: bool,
    pub j_ideal_squared_is_ell: bool,
    pub valuation_of_j_is_one: bool,
    pub units_have_valuation_zero: bool,
    pub norm_multiplicative: bool,
}

impl LocalModelReport {
    pub fn holds(&self) -> bool {
        self.i_squared_is_u
            && self.j_squared_is_ell
            && self.ij_anticommute
            && self.ideal_two_sided
            && self.j_ideal_squared_is_ell
            && self.valuation_of_j_is_one
            && self.units_have_valuation_zero
            && self.norm_multiplicative
    }
}

/// Check the relations of the local order and `J^2 = (ℓ)` for `J = Oj`.
pub fn verify_local_model(ell: u64, k: u32) -> Result<LocalModelReport> {
    let m = LocalOrderModel::new(ell, k)?;
    let (i, j) = (m.i(), m.j());
    let i_squared_is_u = m.mul(i, i) == m.from_int(m.u);
    let j_squared_is_ell = m.mul(j, j) == m.from_int(m.ell);
    let ij_anticommute = m.mul(i, j) == m.neg(m.mul(j, i));

    // Z-basis of J = O j
    let jbasis: Vec<LocalElement> = m.basis().iter().map(|&b| m.mul(b, j)).collect();
    let jgens: Vec<[i64; 4]> = jbasis.iter().map(|&x| m.coords(x)).collect();
    let j_lattice = m.span(&jgens);
    let left: Vec<[i64; 4]> = m.basis().iter().flat_map(|&o| jbasis.iter().map(move |&x| (o, x))).map(|(o, x)| m.coords(m.mul(o, x))).collect();
    let right: Vec<[i64; 4]> = m.basis().iter().flat_map(|&o| jbasis.iter().map(move |&x| (o, x))).map(|(o, x)| m.coords(m.mul(x, o))).collect();
    let ideal_two_sided = m.span(&[jgens.clone(), left].concat()) == j_lattice
        && m.span(&[jgens.clone(), right].concat()) == j_lattice;
    let squares: Vec<[i64; 4]> = jbasis.iter().flat_map(|&x| jbasis.iter().map(move |&y| (x, y))).map(|(x, y)| m.coords(m.mul(x, y))).collect();
    let ell_o: Vec<[i64; 4]> = m.basis().iter().map(|&b| m.coords(m.mul(m.from_int(m.ell), b))).collect();
    let j_ideal_squared_is_ell = m.span(&squares) == m.span(&ell_o);

    let valuation_of_j_is_one = m.valuation(j) == 1;
    // α + βj is a unit exactly when α is, and then w = 0; otherwise w >= 1
    let span = m.modulus.min(9);
    let mut units_have_valuation_zero = true;
    for a in 0..span {
        for b in 0..span {
            let x = (m.unr(a, b), m.unr(b + 1, a));
            let alpha_unit = m.valuation((x.0, (0, 0))) == 0;
            if alpha_unit != (m.valuation(x) == 0) {
                units_have_valuation_zero = false;
            }
        }
    }
    let mut rng_state = 0x9e3779b97f4a7c15u64;
    let mut next = || {
        rng_state ^= rng_state << 13;
        rng_state ^= rng_state >> 7;
        rng_state ^= rng_state << 17;
        (rng_state % m.modulus as u64) as i64
    };
    let mut norm_multiplicative = true;
    for _ in 0..100 {
        let x = ((next(), next()), (next(), next()));
        let y = ((next(), next()), (next(), next()));
        if m.norm(m.mul(x, y)) != m.red(m.norm(x) * m.norm(y)) {
            norm_multiplicative = false;
        }
    }
    Ok(LocalModelReport {
        ell,
        precision: k,
        u: m.u,
        i_squared_is_u,
        j_squared_is_ell,
        ij_anticommute,
        ideal_two_sided,
        j_ideal_squared_is_ell,
        valuation_of_j_is_one,
        units_have_valuation_zero,
        norm_multiplicative,
    })
}

/// A residual Frobenius observation: trace mod ℓ and optionally determinant mod ℓ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResidualTrace {
    pub trace: i64,
    pub det: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CartanReport {
    pub ell: u64,
    pub contained: bool,
    /// Indices of observations not realisable in the non-split Cartan.
    pub violations: Vec<usize>,
}

/// Whether every observation is `(α + α^ℓ, α^{ℓ+1})` for some `α` in `F_{ℓ^2}^×`.
pub fn nonsplit_cartan_check(obs: &[ResidualTrace], ell: u64) -> Result<CartanReport> {
    check_ell(ell, 127)?;
    let f = FiniteField::get(ell, 2);
    let pairs: Vec<(u64, u64)> = f
        .nonzero_elements()
        .map(|a| (f.trace_to_prime(a), f.norm_to_prime(a)))
        .collect();
    let l = ell as i64;
    let violations: Vec<usize> = obs
        .iter()
        .enumerate()
        .filter(|(_, o)| {
            let t = o.trace.rem_euclid(l) as u64;
            let d = o.det.map(|d| d.rem_euclid(l) as u64);
            !pairs.iter().any(|&(pt, pn)| pt == t && d.is_none_or(|d| d == pn))
        })
        .map(|(i, _)| i)
        .collect();
    Ok(CartanReport { ell, contained: violations.is_empty(), violations })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleTypeSample {
    pub prime: PrimeIdeal,
    pub degrees: Vec<usize>,
}

/// Degrees of the irreducible factors of the reduced defining polynomial.
pub fn sextic_cycle_type(curve: &GenusTwoCurve, prime: &PrimeIdeal) -> Result<CycleTypeSample> {
    let rf = ResidueField::new(prime);
    let coeffs = reduce_curve(curve, &rf)?;
    let degrees = FPoly::new(coeffs).factor_degrees(rf.field());
    Ok(CycleTypeSample { prime: prime.clone(), degrees })
}

/// Histogram of cycle types over good odd primes of norm at most `bound`.
pub fn cycle_type_histogram(curve: &GenusTwoCurve, bound: u64) -> BTreeMap<Vec<usize>, usize> {
    let mut h = BTreeMap::new();
    for p in curve.field().primes_up_to_norm(bound) {
        if let Ok(s) = sextic_cycle_type(curve, &p) {
            *h.entry(s.degrees).or_insert(0) += 1;
        }
    }
    h
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityReport {
    pub parities: Vec<(PrimeIdeal, u8)>,
    pub all_odd: bool,
}

pub fn trace_parity_probe(table: &TraceTable, primes: &[PrimeIdeal]) -> Result<ParityReport> {
    let mut parities = Vec::new();
    for p in primes {
        let a = table.trace(p).ok_or_else(|| Error::MissingPrime(p.label()))?;
        parities.push((p.clone(), a.rem_euclid(2) as u8));
    }
    let all_odd = parities.iter().all(|(_, e)| *e == 1);
    Ok(ParityReport { parities, all_odd })
}

/// Whether a factorisation pattern is that of an element of order 3 acting
/// on the six Weierstrass points (two 3-cycles).
pub fn is_order_three_pattern(degrees: &[usize]) -> bool {
    degrees.iter().all(|&d| d == 3)
}

/// Fraction of good primes where trace parity matches the cycle pattern
/// (odd trace exactly when Frobenius permutes the roots as two 3-cycles).
pub fn parity_pattern_agreement(curve: &GenusTwoCurve, table: &TraceTable, primes: &[PrimeIdeal]) -> f64 {
    let mut total = 0;
    let mut agree = 0;
    for p in primes {
        let (Some(a), Ok(s)) = (table.trace(p), sextic_cycle_type(curve, p)) else { continue };
        total += 1;
        if (a.rem_euclid(2) == 1) == is_order_three_pattern(&s.degrees) {
            agree += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        agree as f64 / total as f64
    }
}
