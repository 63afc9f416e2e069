//! Point counting on genus-2 curves over residue fields and Euler factors
//! of QM shape `(1 - a t + q t^2)^2`.

use rayon::prelude::*;
use serde::Serialize;

use crate::curve::GenusTwoCurve;
use crate::error::{Error, Result};
use crate::gf::{FPoly, Fe, FiniteField};
use crate::quadfield::PrimeIdeal;
use crate::residue::ResidueField;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EulerRecord {
    pub prime: PrimeIdeal,
    pub q: u64,
    pub n1: u64,
    pub n2: Option<u64>,
    pub a: i64,
    pub good: bool,
}

impl EulerRecord {
    /// Coefficients of `(1 - a t + q t^2)^2`, ascending, when certified.
    pub fn lpoly(&self) -> Option<[i64; 5]> {
        let (a, q) = (self.a, self.q as i64);
        self.n2.map(|_| [1, -2 * a, a * a + 2 * q, -2 * a * q, q * q])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BadPrime {
    pub prime: PrimeIdeal,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceTable {
    pub curve: String,
    pub bound: u64,
    pub square_check_bound: u64,
    pub version: String,
    pub records: Vec<EulerRecord>,
    pub bad: Vec<BadPrime>,
    /// Good primes whose counts are incompatible with a QM Euler factor.
    pub shape_failures: Vec<BadPrime>,
}

impl TraceTable {
    pub fn record(&self, prime: &PrimeIdeal) -> Option<&EulerRecord> {
        self.records.iter().find(|r| &r.prime == prime)
    }

    pub fn trace(&self, prime: &PrimeIdeal) -> Option<i64> {
        self.record(prime).map(|r| r.a)
    }

    pub fn is_bad(&self, prime: &PrimeIdeal) -> bool {
        self.bad.iter().any(|b| &b.prime == prime)
    }

    /// Fraction of good primes with odd trace.
    pub fn odd_trace_fraction(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let odd = self.records.iter().filter(|r| r.a.rem_euclid(2) == 1).count();
        odd as f64 / self.records.len() as f64
    }

    pub fn to_document(&self) -> TraceTableDocument {
        TraceTableDocument {
            curve: self.curve.clone(),
            bound: self.bound,
            square_check_bound: self.square_check_bound,
            version: self.version.clone(),
            records: self
                .records
                .iter()
                .map(|r| RecordDocument {
                    p: r.prime.p(),
                    f: r.prime.residue_degree(),
                    gen: gen_pair(&r.prime),
                    q: r.q,
                    n1: r.n1,
                    n2: r.n2,
                    a: r.a,
                    good: r.good,
                })
                .collect(),
            bad: self.bad.iter().map(|b| BadDocument { gen: gen_pair(&b.prime), reason: b.reason.clone() }).collect(),
            shape_failures: self
                .shape_failures
                .iter()
                .map(|b| BadDocument { gen: gen_pair(&b.prime), reason: b.reason.clone() })
                .collect(),
        }
    }
}

fn gen_pair(p: &PrimeIdeal) -> [String; 2] {
    [p.gen().a().to_string(), p.gen().b().to_string()]
}

#[derive(Serialize)]
pub struct TraceTableDocument {
    pub curve: String,
    pub bound: u64,
    pub square_check_bound: u64,
    pub version: String,
    pub records: Vec<RecordDocument>,
    pub bad: Vec<BadDocument>,
    pub shape_failures: Vec<BadDocument>,
}

#[derive(Serialize)]
pub struct RecordDocument {
    pub p: u64,
    pub f: u8,
    pub gen: [String; 2],
    pub q: u64,
    pub n1: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n2: Option<u64>,
    pub a: i64,
    pub good: bool,
}

#[derive(Serialize)]
pub struct BadDocument {
    pub gen: [String; 2],
    pub reason: String,
}

fn bad(prime: &PrimeIdeal, reason: &str) -> Error {
    Error::BadReduction { prime: prime.label(), reason: reason.to_string() }
}

/// The reduction of the integral model at `P`, checked to be a smooth
/// model of degree 5 or 6 in odd characteristic.
pub fn reduce_curve(curve: &GenusTwoCurve, rf: &ResidueField) -> Result<Vec<Fe>> {
    let prime = rf.prime();
    if prime.p() == 2 {
        return Err(bad(prime, "characteristic 2"));
    }
    let model = curve.integral_model();
    if crate::arith::mod_u64(&model.scale, prime.p()) == 0 {
        return Err(bad(prime, "divides the y-scaling of the integral model"));
    }
    let coeffs: Vec<Fe> = model.coeffs.iter().map(|c| rf.reduce(c)).collect();
    check_reduced(&coeffs, curve.degree(), rf.field(), prime)?;
    Ok(coeffs)
}

fn check_reduced(coeffs: &[Fe], degree: usize, field: &FiniteField, prime: &PrimeIdeal) -> Result<()> {
    if coeffs[degree].is_zero() {
        return Err(bad(prime, "leading coefficient vanishes"));
    }
    if !FPoly::new(coeffs.to_vec()).is_squarefree(field) {
        return Err(bad(prime, "repeated root"));
    }
    Ok(())
}

/// Number of points on the smooth projective model of `y^2 = f(x)` over
/// `field`, for ascending coefficients of degree 5 or 6 (odd characteristic).
pub fn count_on_field(coeffs: &[Fe], field: &FiniteField) -> u64 {
    let top = (0..coeffs.len()).rev().find(|&i| !coeffs[i].is_zero()).expect("nonzero polynomial");
    let mut total: i64 = 0;
    for x in field.elements() {
        let mut acc = Fe::ZERO;
        for &c in coeffs[..=top].iter().rev() {
            acc = field.add(field.mul(acc, x), c);
        }
        total += 1 + field.chi(acc) as i64;
    }
    total += if top == 6 { 1 + field.chi(coeffs[6]) as i64 } else { 1 };
    total as u64
}

/// `#C(F)` for the residue field `F = O_K / P`.
pub fn count_points(curve: &GenusTwoCurve, rf: &ResidueField) -> Result<u64> {
    let coeffs = reduce_curve(curve, rf)?;
    Ok(count_on_field(&coeffs, rf.field()))
}

pub fn euler_record(curve: &GenusTwoCurve, prime: &PrimeIdeal, with_square_check: bool) -> Result<EulerRecord> {
    let rf = ResidueField::new(prime);
    let coeffs = reduce_curve(curve, &rf)?;
    let q = rf.order();
    let n1 = count_on_field(&coeffs, rf.field());
    let twice_a = q as i64 + 1 - n1 as i64;
    if twice_a.rem_euclid(2) != 0 {
        return Err(Error::NotQmShape {
            prime: prime.label(),
            detail: format!("#C(F_{q}) = {n1} has the wrong parity"),
        });
    }
    let a = twice_a / 2;
    if (a * a) as u64 > 4 * q {
        return Err(Error::NotQmShape { prime: prime.label(), detail: format!("|a| = {} exceeds 2 sqrt({q})", a.abs()) });
    }
    let n2 = if with_square_check {
        let (big, map) = rf.square_extension();
        let lifted: Vec<Fe> = coeffs.iter().map(|c| map[c.0 as usize]).collect();
        let n2 = count_on_field(&lifted, &big);
        let q = q as i64;
        let expect = q * q + 1 - 2 * (a * a - 2 * q);
        if n2 as i64 != expect {
            return Err(Error::NotQmShape {
                prime: prime.label(),
                detail: format!("#C(F_q^2) = {n2}, square shape requires {expect}"),
            });
        }
        Some(n2)
    } else {
        None
    };
    Ok(EulerRecord { prime: prime.clone(), q, n1, n2, a, good: true })
}

enum Outcome {
    Good(EulerRecord),
    Bad(BadPrime),
    Shape(BadPrime),
}

fn classify(curve: &GenusTwoCurve, prime: &PrimeIdeal, square_check_bound: u64) -> Outcome {
    match euler_record(curve, prime, prime.norm() <= square_check_bound) {
        Ok(r) => Outcome::Good(r),
        Err(Error::BadReduction { reason, .. }) => Outcome::Bad(BadPrime { prime: prime.clone(), reason }),
        Err(Error::NotQmShape { detail, .. }) => Outcome::Shape(BadPrime { prime: prime.clone(), reason: detail }),
        Err(e) => Outcome::Shape(BadPrime { prime: prime.clone(), reason: e.to_string() }),
    }
}

/// Euler data at every prime of norm at most `bound`, in canonical prime
/// order. Identical output for any degree of parallelism.
pub fn trace_table(curve: &GenusTwoCurve, bound: u64, square_check_bound: u64) -> TraceTable {
    trace_table_with(curve, bound, square_check_bound, true)
}

pub fn trace_table_with(curve: &GenusTwoCurve, bound: u64, square_check_bound: u64, parallel: bool) -> TraceTable {
    let primes = if bound < 2 { Vec::new() } else { curve.field().primes_up_to_norm(bound) };
    let outcomes: Vec<Outcome> = if parallel {
        primes.par_iter().map(|p| classify(curve, p, square_check_bound)).collect()
    } else {
        primes.iter().map(|p| classify(curve, p, square_check_bound)).collect()
    };
    let mut table = TraceTable {
        curve: curve.hash(),
        bound,
        square_check_bound,
        version: env!("CARGO_PKG_VERSION").to_string(),
        records: Vec::new(),
        bad: Vec::new(),
        shape_failures: Vec::new(),
    };
    for o in outcomes {
        match o {
            Outcome::Good(r) => table.records.push(r),
            Outcome::Bad(b) => table.bad.push(b),
            Outcome::Shape(b) => table.shape_failures.push(b),
        }
    }
    table
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Genuineness {
    /// A conjugate pair with `a_P^2 != a_Pbar^2`.
    Witnessed { prime: PrimeIdeal, conjugate: PrimeIdeal, a: i64, a_conj: i64 },
    Undecided,
}

pub fn genuineness_test(table: &TraceTable) -> Result<Genuineness> {
    let mut pairs = 0;
    for r in table.records.iter().filter(|r| r.prime.index() == 1) {
        let conj = r.prime.conjugate().expect("split prime has a conjugate");
        let Some(other) = table.record(&conj) else { continue };
        pairs += 1;
        if r.a * r.a != other.a * other.a {
            return Ok(Genuineness::Witnessed { prime: r.prime.clone(), conjugate: conj, a: r.a, a_conj: other.a });
        }
    }
    if pairs == 0 {
        return Err(Error::NoSplitPrimes);
    }
    Ok(Genuineness::Undecided)
}
