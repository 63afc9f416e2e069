//! Genus-2 curves `y^2 = f(x)` over `K` with `deg f in {5, 6}`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::algebra::Ring;
use crate::arith;
use crate::error::{Error, Result};
use crate::invariants::{igusa_clebsch_form, BinaryForm};
use crate::quadfield::{split_prime, PrimeIdeal, QuadElement, QuadField, QuadFrac};

/// `y^2 = m^2 f(x)` with integral coefficients, isomorphic to the source
/// curve via `y -> y/m`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralModel {
    /// Ascending coefficients, length 7.
    pub coeffs: Vec<QuadElement>,
    pub scale: BigInt,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenusTwoCurve {
    field: QuadField,
    /// Ascending coefficients `c0..c6`.
    coeffs: Vec<QuadFrac>,
    model: IntegralModel,
}

/// Smallest `m > 0` with `den | m^2`.
fn square_cover(den: &BigInt) -> BigInt {
    arith::factor_bigint_abs(den)
        .into_iter()
        .fold(BigInt::one(), |acc, (p, e)| acc * BigInt::from(p).pow(e.div_ceil(2)))
}

impl GenusTwoCurve {
    /// From ascending coefficients; missing top coefficients are zero.
    pub fn new(field: QuadField, mut coeffs: Vec<QuadFrac>) -> Result<Self> {
        if coeffs.len() > 7 {
            return Err(Error::Parse("sextic has at most 7 coefficients".into()));
        }
        for c in &coeffs {
            if c.field() != field {
                return Err(Error::FieldMismatch { expected: field.label(), found: c.field().label() });
            }
        }
        while coeffs.len() < 7 {
            coeffs.push(QuadFrac::from_int(field, 0));
        }
        let degree = (0..7).rev().find(|&i| !coeffs[i].is_zero()).unwrap_or(0);
        if degree < 5 {
            return Err(Error::Parse(format!("degree {degree} is not 5 or 6")));
        }
        let lcm = coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let scale = square_cover(&lcm);
        let m2 = &scale * &scale;
        let model_coeffs = coeffs
            .iter()
            .map(|c| {
                let n = c.numer().scale(&(&m2 / c.denom()));
                debug_assert!((&m2 % c.denom()).is_zero());
                n
            })
            .collect();
        let curve = GenusTwoCurve { field, coeffs, model: IntegralModel { coeffs: model_coeffs, scale } };
        if curve.discriminant().is_zero() {
            return Err(Error::SingularCurve);
        }
        Ok(curve)
    }

    pub fn from_descending(field: QuadField, desc: Vec<QuadFrac>) -> Result<Self> {
        let mut c = desc;
        c.reverse();
        GenusTwoCurve::new(field, c)
    }

    pub fn field(&self) -> QuadField {
        self.field
    }

    pub fn coeffs(&self) -> &[QuadFrac] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        if self.coeffs[6].is_zero() {
            5
        } else {
            6
        }
    }

    pub fn integral_model(&self) -> &IntegralModel {
        &self.model
    }

    fn form(&self) -> BinaryForm<QuadFrac> {
        BinaryForm::new(self.coeffs.iter().rev().cloned().collect())
    }

    /// Igusa-Clebsch invariants `[I2, I4, I6, I10]` of this model.
    pub fn igusa_clebsch(&self) -> [QuadFrac; 4] {
        igusa_clebsch_form(&self.form())
    }

    /// Discriminant of the sextic binary form (for a quintic, the form with a
    /// root at infinity).
    pub fn discriminant(&self) -> QuadFrac {
        igusa_clebsch_form(&self.form())[3].clone()
    }

    /// Discriminant of the integral model.
    pub fn model_discriminant(&self) -> QuadElement {
        let form = BinaryForm::new(self.model.coeffs.iter().rev().map(|c| QuadFrac::from(c.clone())).collect());
        let d = igusa_clebsch_form(&form)[3].clone();
        assert!(d.is_integral(), "discriminant of an integral form is integral");
        d.numer().clone()
    }

    /// Primes dividing the discriminant of the integral model, the primes
    /// dividing the `y`-scaling and the primes above 2. A superset of the
    /// conductor support.
    pub fn bad_prime_support(&self) -> Vec<PrimeIdeal> {
        let disc = self.model_discriminant();
        let mut rational: Vec<u64> = arith::factor_bigint_abs(&disc.norm())
            .into_iter()
            .map(|(p, _)| p.to_u64().expect("discriminant prime fits in u64"))
            .collect();
        rational.extend(arith::factor_bigint_abs(&self.model.scale).into_iter().map(|(p, _)| p.to_u64().unwrap()));
        rational.push(2);
        rational.sort();
        rational.dedup();
        let mut out: Vec<PrimeIdeal> = rational
            .into_iter()
            .flat_map(|p| split_prime(self.field, p))
            .filter(|pr| pr.p() == 2 || pr.divides(&disc) || pr.divides(&QuadElement::from_int(self.field, self.model.scale.clone())))
            .collect();
        out.sort();
        out
    }

    /// Curve document: `{"field": label, "coeffs": [[a, b, den], ...]}`,
    /// degree-descending.
    pub fn to_document(&self) -> CurveDocument {
        CurveDocument {
            field: self.field.label(),
            coeffs: self.coeffs.iter().rev().map(frac_to_triple).collect(),
        }
    }

    pub fn from_document(doc: &CurveDocument) -> Result<Self> {
        let field = QuadField::from_label(&doc.field)?;
        if doc.coeffs.len() < 6 || doc.coeffs.len() > 7 {
            return Err(Error::Parse(format!("expected 6 or 7 coefficients, found {}", doc.coeffs.len())));
        }
        let desc = doc.coeffs.iter().map(|t| triple_to_frac(field, t)).collect::<Result<Vec<_>>>()?;
        GenusTwoCurve::from_descending(field, desc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("curve document serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CurveDocument = serde_json::from_str(text)?;
        GenusTwoCurve::from_document(&doc)
    }

    /// SHA-256 of the canonical JSON serialisation, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The quadratic twist `y^2 = u f(x)`.
    pub fn twist(&self, u: &QuadFrac) -> Result<Self> {
        GenusTwoCurve::new(self.field, self.coeffs.iter().map(|c| c.times(u)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveDocument {
    pub field: String,
    pub coeffs: Vec<[Value; 3]>,
}

pub fn bigint_to_json(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(v) => Value::from(v),
        None => Value::from(n.to_string()),
    }
}

pub fn json_to_bigint(v: &Value) -> Result<BigInt> {
    let text = match v {
        Value::Number(n) if n.is_i64() || n.is_u64() => n.to_string(),
        Value::String(s) => s.clone(),
        other => return Err(Error::Parse(format!("expected an integer, found {other}"))),
    };
    text.parse().map_err(|_| Error::Parse(format!("bad integer `{text}`")))
}

pub fn frac_to_triple(c: &QuadFrac) -> [Value; 3] {
    [bigint_to_json(c.numer().a()), bigint_to_json(c.numer().b()), bigint_to_json(c.denom())]
}

pub fn triple_to_frac(field: QuadField, t: &[Value; 3]) -> Result<QuadFrac> {
    let a = json_to_bigint(&t[0])?;
    let b = json_to_bigint(&t[1])?;
    let den = json_to_bigint(&t[2])?;
    if den.is_zero() {
        return Err(Error::Parse("zero denominator".into()));
    }
    let (num, den) = if den.is_negative() {
        (QuadElement::new(field, -a, -b), -den)
    } else {
        (QuadElement::new(field, a, b), den)
    };
    Ok(QuadFrac::new(num, den))
}

/// Resultant of two polynomials over `K` by the Euclidean algorithm;
/// ascending coefficients, both nonzero.
pub fn resultant(f: &[QuadFrac], g: &[QuadFrac]) -> QuadFrac {
    use crate::algebra::Poly;
    let zero = f[0].zero_like();
    let mut a = Poly::new(f.to_vec(), zero.clone());
    let mut b = Poly::new(g.to_vec(), zero.clone());
    let one = zero.one_like();
    let mut acc = one.clone();
    loop {
        let (da, db) = match (a.degree(), b.degree()) {
            (Some(x), Some(y)) => (x, y),
            _ => return zero,
        };
        if db == 0 {
            return acc.times(&b.coeff(0).pow_u(da as u32));
        }
        if da < db {
            if (da * db) % 2 == 1 {
                acc = acc.negate();
            }
            std::mem::swap(&mut a, &mut b);
            continue;
        }
        let (_, r) = a.div_rem(&b);
        let Some(dr) = r.degree() else { return zero };
        // Res(a, b) = (-1)^(da db) lc(b)^(da - dr) Res(b, r)
        if (da * db) % 2 == 1 {
            acc = acc.negate();
        }
        acc = acc.times(&b.leading().unwrap().pow_u((da - dr) as u32));
        a = b;
        b = r;
    }
}
