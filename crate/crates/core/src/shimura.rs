//! Shimura conics `X_6`, `X_10`, the Baba-Granath family `C_j`, Hilbert
//! symbols and the quaternion splitting criterion, recovery of `j` from a
//! curve, and the potentially-good-reduction predicate.

use std::collections::HashSet;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::algebra::{rational, Poly, RelQuad, Ring};
use crate::arith;
use crate::curve::GenusTwoCurve;
use crate::error::{Error, Result};
use crate::invariants::{igusa_clebsch_form, BinaryForm, WEIGHTS};
use crate::quadfield::{self, split_prime, PrimeIdeal, QuadElement, QuadField, QuadFrac};

/// Coefficient of `Y^2` in the conic `X^2 + c Y^2 + Z^2 = 0` of discriminant `disc`.
fn conic_coefficient(disc: u32) -> Result<i64> {
    match disc {
        6 => Ok(3),
        10 => Ok(2),
        _ => Err(Error::InvalidConfig(format!("quaternion discriminant {disc} is not 6 or 10"))),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConicPoint {
    disc: u32,
    coords: [QuadElement; 3],
}

impl ConicPoint {
    /// A projective point, normalised: integral coordinates with trivial
    /// common divisor and a canonical first nonzero coordinate.
    pub fn new(disc: u32, coords: [QuadFrac; 3]) -> Result<Self> {
        conic_coefficient(disc)?;
        if coords.iter().all(|c| c.is_zero()) {
            return Err(Error::InvalidConfig("all projective coordinates are zero".into()));
        }
        let field = coords[0].field();
        let lcm = coords.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<QuadElement> = coords.iter().map(|c| c.numer().scale(&(&lcm / c.denom()))).collect();
        let g = ints.iter().fold(field.zero(), |acc, x| quadfield::gcd(&acc, x));
        let mut ints: Vec<QuadElement> = ints.iter().map(|x| x.div_exact(&g).expect("gcd divides")).collect();
        let lead = ints.iter().find(|x| !x.is_zero()).unwrap().clone();
        let unit = lead.normalize().div_exact(&lead).expect("unit multiple");
        for x in ints.iter_mut() {
            *x = &*x * &unit;
        }
        let [x, y, z]: [QuadElement; 3] = ints.try_into().unwrap();
        Ok(ConicPoint { disc, coords: [x, y, z] })
    }

    pub fn from_elements(disc: u32, coords: [QuadElement; 3]) -> Result<Self> {
        ConicPoint::new(disc, coords.map(QuadFrac::from))
    }

    pub fn disc(&self) -> u32 {
        self.disc
    }

    pub fn field(&self) -> QuadField {
        self.coords[0].field()
    }

    pub fn coords(&self) -> &[QuadElement; 3] {
        &self.coords
    }
}

fn conic_form(c: i64, p: &[QuadElement; 3]) -> QuadElement {
    &(&(&p[0] * &p[0]) + &(&p[1] * &p[1]).scale(&BigInt::from(c))) + &(&p[2] * &p[2])
}

fn conic_bilinear(c: i64, p: &[QuadElement; 3], q: &[QuadElement; 3]) -> QuadElement {
    &(&(&p[0] * &q[0]) + &(&p[1] * &q[1]).scale(&BigInt::from(c))) + &(&p[2] * &q[2])
}

pub fn conic_contains(p: &ConicPoint) -> bool {
    let c = conic_coefficient(p.disc).expect("validated at construction");
    conic_form(c, &p.coords).is_zero()
}

/// First point of `X_disc(K)` found by a sweep over coordinates of size at most `bound`.
pub fn find_base_point(field: QuadField, disc: u32, bound: i64) -> Result<Option<ConicPoint>> {
    let c = conic_coefficient(disc)?;
    let elems: Vec<QuadElement> = small_elements(field, bound);
    for x in &elems {
        for y in &elems {
            for z in &elems {
                if x.is_zero() && y.is_zero() && z.is_zero() {
                    continue;
                }
                let p = [x.clone(), y.clone(), z.clone()];
                if conic_form(c, &p).is_zero() {
                    return ConicPoint::from_elements(disc, p).map(Some);
                }
            }
        }
    }
    Ok(None)
}

/// Elements `a + b*w` with `|a|, |b| <= bound`, ordered by height then
/// coordinates.
fn small_elements(field: QuadField, bound: i64) -> Vec<QuadElement> {
    let mut v: Vec<(i64, i64)> = Vec::new();
    for a in -bound..=bound {
        for b in -bound..=bound {
            v.push((a, b));
        }
    }
    v.sort_by_key(|&(a, b)| (a.abs().max(b.abs()), a, b));
    v.into_iter().map(|(a, b)| field.elem(a, b)).collect()
}

/// Second intersections of `X_disc` with the lines through `base` whose
/// slope `(s : u)` has coordinates of absolute value at most `height`.
/// Deterministic order, projective duplicates removed.
pub fn parametrize_conic(base: &ConicPoint, height: i64) -> Result<Vec<ConicPoint>> {
    if !conic_contains(base) {
        return Err(Error::BasePointInvalid);
    }
    let c = conic_coefficient(base.disc)?;
    let field = base.field();
    let p0 = &base.coords;
    let k = (0..3).rev().find(|&i| !p0[i].is_zero()).unwrap();
    let others: Vec<usize> = (0..3).filter(|&i| i != k).collect();
    let elems = small_elements(field, height);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for s in &elems {
        for u in &elems {
            if s.is_zero() && u.is_zero() {
                continue;
            }
            let mut v = [field.zero(), field.zero(), field.zero()];
            v[others[0]] = s.clone();
            v[others[1]] = u.clone();
            let qv = conic_form(c, &v);
            let b2 = conic_bilinear(c, p0, &v).scale(&BigInt::from(2));
            let pt: Vec<QuadElement> = (0..3).map(|i| &(&qv * &p0[i]) - &(&b2 * &v[i])).collect();
            if pt.iter().all(|x| x.is_zero()) {
                continue;
            }
            let point = ConicPoint::from_elements(base.disc, pt.try_into().unwrap())?;
            debug_assert!(conic_contains(&point));
            if seen.insert(point.clone()) {
                out.push(point);
            }
        }
    }
    Ok(out)
}

/// `j = (4Y / 3X)^2` for a point of `X_6`.
pub fn j_from_point(p: &ConicPoint) -> Result<QuadFrac> {
    if p.disc != 6 {
        return Err(Error::InvalidConfig("j is defined on the discriminant-6 conic".into()));
    }
    let [x, y, _] = &p.coords;
    if x.is_zero() {
        return Err(Error::DegeneratePoint);
    }
    let r = QuadFrac::from(y.scale(&BigInt::from(4))).times(&QuadFrac::from(x.scale(&BigInt::from(3))).inv().unwrap());
    Ok(r.times(&r))
}

/// Coordinates of `P_j = (4 : 3 sqrt(j) : sqrt(-27j - 16))` in the formal
/// biquadratic extension `R[a, b]/(a^2 - j, b^2 + 27j + 16)`.
pub fn family_point<R: Ring>(j: &R) -> [RelQuad<RelQuad<R>>; 3] {
    let one = j.one_like();
    let c_outer = j.scale_int(-27).minus(&one.scale_int(16));
    let inner = |x: R| RelQuad::from_base(x, j.clone());
    let outer_c = inner(c_outer);
    let lift = |x: RelQuad<R>| RelQuad::from_base(x, outer_c.clone());
    let x = lift(inner(one.scale_int(4)));
    let y = lift(RelQuad::new(j.zero_like(), one.scale_int(3), j.clone()));
    let z = RelQuad::generator(outer_c.clone());
    [x, y, z]
}

/// `X^2 + 3 Y^2 + Z^2` evaluated at `family_point(j)`.
pub fn family_point_residual<R: Ring>(j: &R) -> RelQuad<RelQuad<R>> {
    let [x, y, z] = family_point(j);
    x.times(&x).plus(&y.times(&y).scale_int(3)).plus(&z.times(&z))
}

/// Descending sextic coefficients of `C_j` over `R[s]/(s^2 + 6j)`.
pub fn family_coefficients<R: Ring>(j: &R) -> Vec<RelQuad<R>> {
    let one = j.one_like();
    let c = j.scale_int(-6);
    let base = |x: R| RelQuad::from_base(x, c.clone());
    let s = RelQuad::generator(c.clone());
    let t = base(j.scale_int(-54).minus(&one.scale_int(32)));
    let k = |n: i64| base(one.scale_int(n));
    let t2 = t.times(&t);
    let t3 = t2.times(&t);
    vec![
        k(-4).plus(&s.scale_int(3)),
        t.scale_int(6),
        t.scale_int(3).times(&k(28).plus(&s.scale_int(9))),
        t2.scale_int(-4),
        t2.scale_int(3).times(&k(28).minus(&s.scale_int(9))),
        t3.scale_int(6),
        t3.negate().times(&k(4).plus(&s.scale_int(3))),
    ]
}

/// `C_j` with `s = sqrt(-6j)` kept formal.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyCurve {
    pub j: QuadFrac,
    /// Descending coefficients in `K[s]/(s^2 + 6j)`.
    pub coeffs: Vec<RelQuad<QuadFrac>>,
}

fn check_admissible(j: &QuadFrac) -> Result<()> {
    let field = j.field();
    let u = j.scale_int(27).plus(&QuadFrac::from_int(field, 16));
    if j.is_zero() || u.is_zero() {
        return Err(Error::DegenerateJ(j.to_string()));
    }
    Ok(())
}

pub fn baba_granath_curve(j: &QuadFrac) -> Result<FamilyCurve> {
    check_admissible(j)?;
    Ok(FamilyCurve { j: j.clone(), coeffs: family_coefficients(j) })
}

impl FamilyCurve {
    /// Igusa-Clebsch invariants; they lie in `K`.
    pub fn igusa_clebsch(&self) -> [QuadFrac; 4] {
        igusa_clebsch_form(&BinaryForm::new(self.coeffs.clone())).map(|x| {
            x.as_base().cloned().expect("family invariants are defined over K")
        })
    }
}

/// Igusa-Clebsch invariants of `C_j` as polynomials in `j` over `Q`.
pub fn family_invariant_polys() -> &'static [Poly<BigRational>; 4] {
    static POLYS: OnceLock<[Poly<BigRational>; 4]> = OnceLock::new();
    POLYS.get_or_init(|| {
        let j = Poly::x(&BigRational::zero());
        let ic = igusa_clebsch_form(&BinaryForm::new(family_coefficients(&j)));
        ic.map(|x| x.as_base().cloned().expect("family invariants are defined over Q(j)"))
    })
}

/// Whether two invariant vectors define the same point of weighted
/// projective space `P(2, 4, 6, 10)`.
pub fn same_weighted_class(a: &[QuadFrac; 4], b: &[QuadFrac; 4]) -> bool {
    let w = WEIGHTS.map(|k| k / 2);
    for k in 0..4 {
        for l in k + 1..4 {
            let lhs = a[k].pow_u(w[l]).times(&b[l].pow_u(w[k]));
            let rhs = a[l].pow_u(w[k]).times(&b[k].pow_u(w[l]));
            if lhs != rhs {
                return false;
            }
        }
    }
    true
}

/// Absolute invariants `(I2^5/I10, I2^3 I4/I10, I2^2 I6/I10)`, or when
/// `I2 = 0` the fallback set `(I4^5/I10^2, I4 I6/I10, I6^5/I10^3)`.
pub fn absolute_invariants(ic: &[QuadFrac; 4]) -> Result<[QuadFrac; 3]> {
    let [i2, i4, i6, i10] = ic;
    let inv10 = i10.inv().ok_or(Error::SingularCurve)?;
    if !i2.is_zero() {
        Ok([
            i2.pow_u(5).times(&inv10),
            i2.pow_u(3).times(i4).times(&inv10),
            i2.pow_u(2).times(i6).times(&inv10),
        ])
    } else {
        let inv10_2 = inv10.times(&inv10);
        Ok([
            i4.pow_u(5).times(&inv10_2),
            i4.times(i6).times(&inv10),
            i6.pow_u(5).times(&inv10_2).times(&inv10),
        ])
    }
}

/// Roots in `K` of a polynomial of degree at most 2.
fn small_degree_roots(f: &Poly<QuadFrac>) -> Vec<QuadFrac> {
    match f.degree() {
        Some(1) => vec![f.coeff(0).negate().times(&f.coeff(1).inv().unwrap())],
        Some(2) => {
            let (c, b, a) = (f.coeff(0), f.coeff(1), f.coeff(2));
            let disc = b.times(&b).minus(&a.times(&c).scale_int(4));
            let Some(r) = disc.sqrt() else { return Vec::new() };
            let inv2a = a.scale_int(2).inv().unwrap();
            let mut v = vec![b.negate().plus(&r).times(&inv2a), b.negate().minus(&r).times(&inv2a)];
            v.dedup();
            v
        }
        _ => Vec::new(),
    }
}

/// Recover `j` with `C_j` geometrically isomorphic to `curve`.
pub fn find_j_from_curve(curve: &GenusTwoCurve) -> Result<QuadFrac> {
    find_j_from_invariants(&curve.igusa_clebsch())
}

pub fn find_j_from_invariants(t: &[QuadFrac; 4]) -> Result<QuadFrac> {
    let field = t[0].field();
    let zero = QuadFrac::from_int(field, 0);
    let p: Vec<Poly<QuadFrac>> = family_invariant_polys()
        .iter()
        .map(|f| f.map(zero.clone(), |c| QuadFrac::from_rational(field, c)))
        .collect();
    let w = WEIGHTS.map(|k| k / 2);
    let relation = |k: usize, l: usize| -> Poly<QuadFrac> {
        let lhs = Poly::constant(t[k].pow_u(w[l])).times(&p[l].pow_u(w[k]));
        let rhs = Poly::constant(t[l].pow_u(w[k])).times(&p[k].pow_u(w[l]));
        lhs.minus(&rhs)
    };
    // cheapest relations first, the large ones only if the gcd is still big
    let order = [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)];
    let mut g: Option<Poly<QuadFrac>> = None;
    for (idx, &(k, l)) in order.iter().enumerate() {
        let r = relation(k, l);
        if r.is_zero_elem() {
            continue;
        }
        g = Some(match g {
            None => r,
            Some(g) => g.gcd(&r),
        });
        let g_ref = g.as_mut().unwrap();
        // remove the degenerate members j = 0, 27j + 16 = 0
        loop {
            let common = g_ref.gcd(&p[3]);
            if common.degree().unwrap_or(0) == 0 {
                break;
            }
            *g_ref = g_ref.div_rem(&common).0;
        }
        if idx >= 2 && g_ref.degree().unwrap_or(0) <= 2 {
            break;
        }
    }
    let g = g.ok_or_else(|| Error::NotInFamily("all invariant relations vanish".into()))?;
    let mut roots = small_degree_roots(&g);
    roots.sort_by_key(|a| a.to_string());
    for j in roots {
        if check_admissible(&j).is_err() {
            continue;
        }
        let fam = p.iter().map(|f| f.eval(&j)).collect::<Vec<_>>();
        if same_weighted_class(t, &fam.try_into().unwrap()) {
            return Ok(j);
        }
    }
    Err(Error::NotInFamily(format!("invariant equations have no admissible root in {}", field.label())))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    Infinite,
    Finite(u64),
}

/// Square-class representative of a nonzero rational as an integer.
fn integer_rep(r: &BigRational) -> BigInt {
    r.numer() * r.denom()
}

fn split_off(n: &BigInt, p: u64) -> (u32, BigInt) {
    let v = arith::valuation(n, p);
    (v, n / BigInt::from(p).pow(v))
}

/// The Hilbert symbol `(a, b)_v` for nonzero rationals.
pub fn hilbert_symbol(a: &BigRational, b: &BigRational, place: Place) -> i32 {
    assert!(!a.is_zero() && !b.is_zero(), "Hilbert symbol of zero");
    let (a, b) = (integer_rep(a), integer_rep(b));
    match place {
        Place::Infinite => {
            if a.is_negative() && b.is_negative() {
                -1
            } else {
                1
            }
        }
        Place::Finite(2) => {
            let (alpha, u) = split_off(&a, 2);
            let (beta, v) = split_off(&b, 2);
            let m8 = |x: &BigInt| x.mod_floor(&BigInt::from(8)).to_u64().unwrap();
            let (u8, v8) = (m8(&u), m8(&v));
            let eps = |x: u64| ((x - 1) / 2) % 2;
            let om = |x: u64| ((x * x - 1) / 8) % 2;
            let e = eps(u8) * eps(v8) + alpha as u64 * om(v8) + beta as u64 * om(u8);
            if e.is_multiple_of(2) {
                1
            } else {
                -1
            }
        }
        Place::Finite(p) => {
            let (alpha, u) = split_off(&a, p);
            let (beta, v) = split_off(&b, p);
            let mut s = 1;
            if (alpha * beta) % 2 == 1 && (p - 1) / 2 % 2 == 1 {
                s = -s;
            }
            if beta % 2 == 1 {
                s *= arith::legendre(arith::mod_u64(&u, p) as i64, p);
            }
            if alpha % 2 == 1 {
                s *= arith::legendre(arith::mod_u64(&v, p) as i64, p);
            }
            s
        }
    }
}

/// The places where `(a, b)` can be nontrivial: infinity and primes dividing `2ab`.
pub fn relevant_places(a: &BigRational, b: &BigRational) -> Vec<Place> {
    let prod = integer_rep(a) * integer_rep(b) * 2;
    let mut v = vec![Place::Infinite];
    v.extend(arith::factor_bigint_abs(&prod).into_iter().map(|(p, _)| Place::Finite(p.to_u64().unwrap())));
    v
}

/// Hilbert symbol presentation `(a, b)_Q` of the quaternion algebra of
/// discriminant `disc`.
pub fn quaternion_algebra(disc: u32) -> Result<(BigRational, BigRational)> {
    match disc {
        6 => Ok((rational(-6, 1), rational(2, 1))),
        10 => Ok((rational(-2, 1), rational(5, 1))),
        _ => Err(Error::InvalidConfig(format!("quaternion discriminant {disc} is not 6 or 10"))),
    }
}

/// `K` splits `B_disc` iff no prime dividing `disc` splits in `K`.
pub fn splits_quaternion(field: QuadField, disc: u32) -> Result<bool> {
    conic_coefficient(disc)?;
    Ok(arith::factor_u64(disc as u64).iter().all(|&(p, _)| !split_prime(field, p)[0].is_split()))
}

/// The same question decided by local symbols: `(a, b)_{K_w} = (a, b)_p^{[K_w : Q_p]}`
/// at each finite `w | p`; complex places always split.
pub fn splits_quaternion_hilbert(field: QuadField, disc: u32) -> Result<bool> {
    let (a, b) = quaternion_algebra(disc)?;
    for place in relevant_places(&a, &b) {
        let Place::Finite(p) = place else { continue };
        let sym = hilbert_symbol(&a, &b, place);
        for w in split_prime(field, p) {
            let local_degree = (w.residue_degree() * w.ramification()) as u32;
            if sym.pow(local_degree) != 1 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionType {
    PotentiallyGood,
    PotentiallyBad,
    /// Primes above 2 and 3.
    Undetermined,
}

/// The potentially-good-reduction predicate for `C_j` at `P`.
pub fn reduction_type(j: &QuadFrac, prime: &PrimeIdeal) -> ReductionType {
    if prime.p() == 2 || prime.p() == 3 {
        return ReductionType::Undetermined;
    }
    if j.is_zero() || prime.valuation_frac(j) != 0 {
        ReductionType::PotentiallyBad
    } else {
        ReductionType::PotentiallyGood
    }
}

/// Primes not above 6 where `C_j` has potentially bad reduction.
pub fn potentially_bad_primes(j: &QuadFrac) -> Vec<PrimeIdeal> {
    let field = j.field();
    let mut ps = rational_support(j);
    ps.retain(|&p| p != 2 && p != 3);
    let mut out: Vec<PrimeIdeal> = ps
        .into_iter()
        .flat_map(|p| split_prime(field, p))
        .filter(|pr| reduction_type(j, pr) == ReductionType::PotentiallyBad)
        .collect();
    out.sort();
    out
}

/// Rational primes dividing the norm of the numerator or the denominator.
fn rational_support(x: &QuadFrac) -> Vec<u64> {
    let mut ps: Vec<u64> = arith::factor_bigint_abs(&x.numer().norm())
        .into_iter()
        .chain(arith::factor_bigint_abs(x.denom()))
        .map(|(p, _)| p.to_u64().expect("prime fits in u64"))
        .collect();
    ps.sort();
    ps.dedup();
    ps
}

/// Primes `P` not above 6 at which a curve with invariants `ic` has
/// potentially bad reduction: some `k` has `10 v(I_k) < k v(I10)`. These
/// are the primes dividing the discriminant of a model minimal over an
/// extension, i.e. the stable discriminant support.
pub fn stable_bad_support(ic: &[QuadFrac; 4]) -> Vec<PrimeIdeal> {
    let field = ic[3].field();
    let mut ps: Vec<u64> = ic.iter().filter(|x| !x.is_zero()).flat_map(rational_support).collect();
    ps.sort();
    ps.dedup();
    ps.retain(|&p| p != 2 && p != 3);
    let mut out: Vec<PrimeIdeal> = ps
        .into_iter()
        .flat_map(|p| split_prime(field, p))
        .filter(|pr| {
            let v10 = pr.valuation_frac(&ic[3]);
            (0..3).any(|k| !ic[k].is_zero() && 10 * pr.valuation_frac(&ic[k]) < WEIGHTS[k] as i64 * v10)
        })
        .collect();
    out.sort();
    out
}

/// Primes not above 6 dividing `I10` of the given invariants.
pub fn raw_discriminant_support(ic: &[QuadFrac; 4]) -> Vec<PrimeIdeal> {
    let field = ic[3].field();
    let mut out: Vec<PrimeIdeal> = rational_support(&ic[3])
        .into_iter()
        .filter(|&p| p != 2 && p != 3)
        .flat_map(|p| split_prime(field, p))
        .filter(|pr| pr.valuation_frac(&ic[3]) != 0)
        .collect();
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qi() -> QuadField {
        QuadField::new(1).unwrap()
    }

    fn q3() -> QuadField {
        QuadField::new(3).unwrap()
    }

    fn pt(field: QuadField, disc: u32, c: [(i64, i64); 3]) -> ConicPoint {
        ConicPoint::from_elements(disc, c.map(|(a, b)| field.elem(a, b))).unwrap()
    }

    #[test]
    fn conic_membership() {
        assert!(conic_contains(&pt(qi(), 6, [(1, 0), (0, 0), (0, 1)])));
        // sqrt(-3) = -1 + 2w
        assert!(conic_contains(&pt(q3(), 6, [(-1, 2), (1, 0), (0, 0)])));
        assert!(!conic_contains(&pt(qi(), 6, [(1, 0), (1, 0), (1, 0)])));
        assert!(ConicPoint::from_elements(7, [qi().one(), qi().zero(), qi().zero()]).is_err());
    }

    #[test]
    fn parametrization_stays_on_conic() {
        let base = pt(qi(), 6, [(1, 0), (0, 0), (0, 1)]);
        let pts = parametrize_conic(&base, 1).unwrap();
        assert!(!pts.is_empty());
        assert!(pts.iter().all(conic_contains));

        let base3 = pt(q3(), 6, [(-1, 2), (1, 0), (0, 0)]);
        let pts3 = parametrize_conic(&base3, 3).unwrap();
        let uniq: HashSet<_> = pts3.iter().collect();
        assert_eq!(uniq.len(), pts3.len());
        assert!(pts3.iter().all(conic_contains));

        let bad = pt(qi(), 6, [(1, 0), (1, 0), (1, 0)]);
        assert!(matches!(parametrize_conic(&bad, 1), Err(Error::BasePointInvalid)));
    }

    #[test]
    fn parametrization_matches_exhaustive_sweep() {
        // every point of small height on X_6(Q(i)) lies on some line of the sweep
        let field = qi();
        let base = pt(field, 6, [(1, 0), (0, 0), (0, 1)]);
        let swept: HashSet<ConicPoint> = parametrize_conic(&base, 5).unwrap().into_iter().collect();
        let elems = small_elements(field, 2);
        let mut found = 0;
        for x in &elems {
            for y in &elems {
                for z in &elems {
                    let c = [x.clone(), y.clone(), z.clone()];
                    if c.iter().all(|e| e.is_zero()) || !conic_form(3, &c).is_zero() {
                        continue;
                    }
                    let p = ConicPoint::from_elements(6, c).unwrap();
                    if p == base {
                        continue;
                    }
                    found += 1;
                    // the slope through the base has small height here
                    assert!(swept.contains(&p), "{:?} missing", p.coords());
                }
            }
        }
        assert!(found > 0);
        // regression count for the height-5 sweep
        assert_eq!(swept.len(), parametrize_conic(&base, 5).unwrap().len());
    }

    #[test]
    fn j_values() {
        assert!(j_from_point(&pt(qi(), 6, [(1, 0), (0, 0), (0, 1)])).unwrap().is_zero());
        assert!(matches!(j_from_point(&pt(qi(), 6, [(0, 0), (1, 0), (0, 0)])), Err(Error::DegeneratePoint)));
        let j = QuadFrac::from_int(qi(), 1);
        assert!(family_point_residual(&j).is_zero_elem());
        let jx = Poly::x(&BigRational::zero());
        assert!(family_point_residual(&jx).is_zero_elem());
    }

    #[test]
    fn family_degenerate_and_coefficients() {
        let f = q3();
        assert!(matches!(baba_granath_curve(&QuadFrac::from_parts(f, -16, 0, 27)), Err(Error::DegenerateJ(_))));
        assert!(matches!(baba_granath_curve(&QuadFrac::from_int(f, 0)), Err(Error::DegenerateJ(_))));
        let c = baba_granath_curve(&QuadFrac::from_int(f, 1)).unwrap();
        // -t^3 (4 + 3s) with t = -86
        let k = |n: i64| QuadFrac::from_int(f, n);
        assert_eq!(c.coeffs[6].x, k(636056 * 4));
        assert_eq!(c.coeffs[6].y, k(636056 * 3));
        assert_eq!(c.coeffs[6].c, k(-6));
    }

    #[test]
    fn family_invariants_closed_form() {
        let p = family_invariant_polys();
        let j = Poly::x(&BigRational::zero());
        let k = |n: &str| Poly::constant(BigRational::from_integer(n.parse::<BigInt>().unwrap()));
        let one = k("1");
        let u = j.scale_int(27).plus(&k("16"));
        let u3 = u.pow_u(3);
        assert_eq!(p[0], k("1327104").times(&j.plus(&one)).times(&u3));
        assert_eq!(p[1], k("110075314176").times(&j).times(&u3.pow_u(2)));
        assert_eq!(
            p[2],
            k("12173449145352192").times(&j).times(&j.scale_int(5).plus(&k("4"))).times(&u3.pow_u(3))
        );
        assert_eq!(p[3], k("2067895430987964852731904").times(&j.pow_u(3)).times(&u3.pow_u(5)));
    }

    #[test]
    fn family_invariants_land_in_k() {
        let f = q3();
        let j = QuadFrac::from_parts(f, 2, -1, 3);
        let c = baba_granath_curve(&j).unwrap();
        let ic = c.igusa_clebsch();
        let expect: Vec<QuadFrac> = family_invariant_polys().iter().map(|p| p.map(QuadFrac::from_int(f, 0), |c| QuadFrac::from_rational(f, c)).eval(&j)).collect();
        assert_eq!(ic.to_vec(), expect);
    }

    #[test]
    fn find_j_round_trip() {
        for (a, b, d) in [(1, 0, 1), (2, -1, 3), (-5, 2, 7), (3, 3, 1), (7, 0, 2)] {
            for f in [qi(), q3()] {
                let j = QuadFrac::from_parts(f, a, b, d);
                let ic = baba_granath_curve(&j).unwrap().igusa_clebsch();
                assert_eq!(find_j_from_invariants(&ic).unwrap(), j, "j = {j}");
            }
        }
    }

    #[test]
    fn not_in_family() {
        let f = qi();
        let k = |n: i64| QuadFrac::from_int(f, n);
        let c = GenusTwoCurve::new(f, vec![k(0), k(-1), k(0), k(0), k(0), k(1)]).unwrap();
        assert!(matches!(find_j_from_curve(&c), Err(Error::NotInFamily(_))));
    }

    #[test]
    fn hilbert_classical() {
        let m1 = rational(-1, 1);
        assert_eq!(hilbert_symbol(&m1, &m1, Place::Finite(2)), -1);
        assert_eq!(hilbert_symbol(&m1, &m1, Place::Infinite), -1);
        for p in [3, 5, 7, 11, 13] {
            assert_eq!(hilbert_symbol(&m1, &m1, Place::Finite(p)), 1);
        }
    }

    /// Whether `a x^2 + b y^2 = z^2` has a primitive solution modulo `p^k`
    /// that lifts: brute force over a small lattice.
    fn solvable_locally(a: i64, b: i64, p: u64) -> bool {
        let m = if p == 2 { 64 } else { (p * p * p) as i64 };
        let unit = |x: i64| x.rem_euclid(p as i64) != 0;
        for x in 0..m {
            for y in 0..m {
                if !(unit(x) || unit(y)) {
                    continue;
                }
                let r = (a * x * x + b * y * y).rem_euclid(m);
                for z in 0..m {
                    if (z * z).rem_euclid(m) == r {
                        return true;
                    }
                }
            }
        }
        false
    }

    #[test]
    fn hilbert_against_solvability() {
        for (a, b) in [(-6, 2), (-2, 5), (3, 5), (-1, 3), (2, 7), (-3, -5)] {
            for p in [2u64, 3, 5, 7] {
                let sym = hilbert_symbol(&rational(a, 1), &rational(b, 1), Place::Finite(p));
                assert_eq!(sym == 1, solvable_locally(a, b, p), "({a}, {b})_{p}");
            }
        }
    }

    #[test]
    fn ramification_of_standard_algebras() {
        for (disc, ram) in [(6u32, vec![2u64, 3]), (10, vec![2, 5])] {
            let (a, b) = quaternion_algebra(disc).unwrap();
            let got: Vec<u64> = relevant_places(&a, &b)
                .into_iter()
                .filter(|&v| hilbert_symbol(&a, &b, v) == -1)
                .map(|v| match v {
                    Place::Finite(p) => p,
                    Place::Infinite => 0,
                })
                .collect();
            assert_eq!(got, ram);
        }
    }

    #[test]
    fn splitting_criteria_agree() {
        let expected = [(1, true), (2, false), (3, true), (7, false), (11, false)];
        for (d, e) in expected {
            let f = QuadField::new(d).unwrap();
            assert_eq!(splits_quaternion(f, 6).unwrap(), e, "d = {d}");
            assert_eq!(splits_quaternion_hilbert(f, 6).unwrap(), e, "d = {d}");
            assert_eq!(splits_quaternion(f, 10).unwrap(), splits_quaternion_hilbert(f, 10).unwrap());
        }
    }

    #[test]
    fn reduction_predicate() {
        let f = q3();
        let one = QuadFrac::from_int(f, 1);
        for pr in f.primes_up_to_norm(200) {
            let expect = if pr.p() <= 3 { ReductionType::Undetermined } else { ReductionType::PotentiallyGood };
            assert_eq!(reduction_type(&one, &pr), expect);
        }
        let j13 = QuadFrac::from_int(f, 13);
        for pr in split_prime(f, 13) {
            assert_eq!(reduction_type(&j13, &pr), ReductionType::PotentiallyBad);
        }
        assert_eq!(potentially_bad_primes(&j13).len(), 2);
    }

    #[test]
    fn raw_family_model_is_not_minimal() {
        // j = 1: 27j + 16 = 43 divides the raw discriminant although v(j) = 0
        let f = q3();
        let ic = baba_granath_curve(&QuadFrac::from_int(f, 1)).unwrap().igusa_clebsch();
        let raw = raw_discriminant_support(&ic);
        assert!(raw.iter().all(|p| p.p() == 43) && raw.len() == 2);
        assert!(stable_bad_support(&ic).is_empty());
    }

    #[test]
    fn stable_support_matches_j_support() {
        let f = q3();
        for (a, b, d) in [(5, 0, 1), (2, -1, 7), (13, 4, 5), (-11, 3, 1), (1, 1, 35)] {
            let j = QuadFrac::from_parts(f, a, b, d);
            let ic = baba_granath_curve(&j).unwrap().igusa_clebsch();
            assert_eq!(stable_bad_support(&ic), potentially_bad_primes(&j), "j = {j}");
        }
    }
}
