//! Bianchi newform eigenvalue tables keyed by prime generators, plus an
//! optional LMFDB fetch with an on-disk cache.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::arith;
use crate::error::{Error, Result};
use crate::quadfield::{self, split_prime, PrimeIdeal, QuadElement, QuadField};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewformRecord {
    pub label: String,
    pub field: QuadField,
    pub level_norm: u64,
    /// Prime factorisation of the level, in prime order.
    pub level: Vec<(PrimeIdeal, u32)>,
    pub eigenvalues: BTreeMap<PrimeIdeal, i64>,
    pub genuine: Option<bool>,
    pub base_change: Option<bool>,
}

/// File schema. Generators are `[a, b]` in the basis `{1, w}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewformDocument {
    pub label: String,
    pub field: String,
    pub level_norm: u64,
    pub level: Vec<[i64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genuine: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_change: Option<bool>,
    pub ap: Vec<[i64; 3]>,
}

fn prime_from_pair(field: QuadField, a: i64, b: i64) -> Result<PrimeIdeal> {
    PrimeIdeal::from_generator(&field.elem(a, b))
        .ok_or_else(|| Error::Schema(format!("{} is not a prime of {}", field.elem(a, b), field.label())))
}

fn gen_pair(p: &PrimeIdeal) -> (i64, i64) {
    p.gen().coords_i64().expect("prime generators are small")
}

impl NewformRecord {
    pub fn from_document(doc: &NewformDocument) -> Result<Self> {
        let field = QuadField::from_label(&doc.field)?;
        let mut level: Vec<(PrimeIdeal, u32)> = Vec::new();
        for &[a, b, e] in &doc.level {
            let p = prime_from_pair(field, a, b)?;
            if e < 1 {
                return Err(Error::Schema(format!("exponent {e} at {p} must be positive")));
            }
            if level.iter().any(|(q, _)| q == &p) {
                return Err(Error::DuplicatePrime(p.label()));
            }
            level.push((p, e as u32));
        }
        level.sort();
        let norm = level
            .iter()
            .try_fold(1u64, |acc, (p, e)| p.norm().checked_pow(*e).and_then(|x| acc.checked_mul(x)));
        if norm != Some(doc.level_norm) {
            return Err(Error::Schema(format!(
                "level factorisation has norm {:?}, document says {}",
                norm, doc.level_norm
            )));
        }
        let mut eigenvalues = BTreeMap::new();
        for &[a, b, v] in &doc.ap {
            let p = prime_from_pair(field, a, b)?;
            let good = !level.iter().any(|(q, _)| q == &p);
            if good && (v as i128) * (v as i128) > 4 * p.norm() as i128 {
                return Err(Error::HeckeBoundViolation { prime: p.label(), value: v, norm: p.norm() });
            }
            if eigenvalues.insert(p.clone(), v).is_some() {
                return Err(Error::DuplicatePrime(p.label()));
            }
        }
        Ok(NewformRecord {
            label: doc.label.clone(),
            field,
            level_norm: doc.level_norm,
            level,
            eigenvalues,
            genuine: doc.genuine,
            base_change: doc.base_change,
        })
    }

    /// Canonical document: normalised generators, primes in order.
    pub fn to_document(&self) -> NewformDocument {
        NewformDocument {
            label: self.label.clone(),
            field: self.field.label(),
            level_norm: self.level_norm,
            level: self
                .level
                .iter()
                .map(|(p, e)| {
                    let (a, b) = gen_pair(p);
                    [a, b, *e as i64]
                })
                .collect(),
            genuine: self.genuine,
            base_change: self.base_change,
            ap: self
                .eigenvalues
                .iter()
                .map(|(p, v)| {
                    let (a, b) = gen_pair(p);
                    [a, b, *v]
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("newform document serialises")
    }

    pub fn divides_level(&self, p: &PrimeIdeal) -> bool {
        self.level.iter().any(|(q, _)| q == p)
    }

    /// `a_P`, looked up by generator; conjugates are never identified.
    pub fn eigenvalue(&self, p: &PrimeIdeal) -> Result<Option<i64>> {
        if p.field() != self.field {
            return Err(Error::FieldMismatch { expected: self.field.label(), found: p.field().label() });
        }
        Ok(self.eigenvalues.get(p).copied())
    }

    /// Largest norm up to which every prime has an eigenvalue.
    pub fn complete_up_to(&self) -> u64 {
        let max = self.eigenvalues.keys().map(|p| p.norm()).max().unwrap_or(0);
        let missing = self
            .field
            .primes_up_to_norm(max)
            .into_iter()
            .find(|p| !self.eigenvalues.contains_key(p));
        match missing {
            Some(p) => p.norm() - 1,
            None => max,
        }
    }
}

pub fn parse_newform(text: &str) -> Result<NewformRecord> {
    let doc: NewformDocument = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    NewformRecord::from_document(&doc)
}

pub fn parse_newform_file(path: &Path) -> Result<NewformRecord> {
    parse_newform(&fs::read_to_string(path)?)
}

/// Where raw LMFDB records come from.
pub trait NewformSource {
    /// Raw JSON answer of the `bmf_forms` API for `label`.
    fn fetch_raw(&self, label: &str) -> Result<String>;
}

pub const DEFAULT_ENDPOINT: &str = "https://www.lmfdb.org/api/bmf_forms/";
pub const ENDPOINT_ENV: &str = "QMSURF_LMFDB_ENDPOINT";

pub struct HttpSource {
    pub endpoint: String,
}

impl HttpSource {
    pub fn new(endpoint: impl Into<String>) -> Self {
        HttpSource { endpoint: endpoint.into() }
    }

    /// Endpoint from the environment, else the public API.
    pub fn from_env() -> Self {
        HttpSource::new(std::env::var(ENDPOINT_ENV).unwrap_or_else(|_| DEFAULT_ENDPOINT.to_string()))
    }
}

impl NewformSource for HttpSource {
    fn fetch_raw(&self, label: &str) -> Result<String> {
        let url = format!("{}?label={}&_format=json", self.endpoint, label);
        match ureq::get(&url).call() {
            Ok(mut resp) => resp.body_mut().read_to_string().map_err(|e| Error::Network(e.to_string())),
            Err(ureq::Error::StatusCode(404)) => Err(Error::NotFound(label.to_string())),
            Err(e) => Err(Error::Network(e.to_string())),
        }
    }
}

/// Primes in the order LMFDB lists Hecke eigenvalues: by norm, and among
/// split primes of equal norm by the HNF `[p, c, 1]` of `(p, w - r)`,
/// i.e. by `c = -r mod p` ascending.
pub fn lmfdb_prime_order(field: QuadField, count: usize) -> Vec<PrimeIdeal> {
    let mut bound = 64;
    loop {
        let mut ps = field.primes_up_to_norm(bound);
        if ps.len() >= count {
            ps.sort_by_key(|p| (p.norm(), p.root().map(|r| (p.p() - r) % p.p()).unwrap_or(0)));
            ps.truncate(count);
            return ps;
        }
        bound *= 2;
    }
}

/// Ideal with HNF `[N, c, d]`, i.e. Z-basis `{N/d, c + d w}`.
fn ideal_from_hnf(field: QuadField, hnf: [i64; 3]) -> Result<QuadElement> {
    let [n, c, d] = hnf;
    if n <= 0 || d <= 0 || n % d != 0 {
        return Err(Error::Conversion(format!("malformed ideal [{n},{c},{d}]")));
    }
    let g = quadfield::gcd(&field.elem(n / d, 0), &field.elem(c, d));
    if g.norm() != BigInt::from(n) {
        return Err(Error::Conversion(format!("[{n},{c},{d}] is not an ideal of norm {n}")));
    }
    Ok(g)
}

fn factor_element(field: QuadField, g: &QuadElement) -> Vec<(PrimeIdeal, u32)> {
    let mut out = Vec::new();
    for (p, _) in arith::factor_bigint_abs(&g.norm()) {
        for pr in split_prime(field, p.to_u64().unwrap()) {
            let v = pr.valuation(g);
            if v > 0 {
                out.push((pr, v));
            }
        }
    }
    out.sort();
    out
}

fn parse_int_list(v: &Value) -> Option<Vec<i64>> {
    match v {
        Value::Array(xs) => xs.iter().map(|x| x.as_i64()).collect(),
        Value::String(s) => s
            .trim_matches(|c| c == '[' || c == ']')
            .split(',')
            .map(|t| t.trim().parse().ok())
            .collect(),
        _ => None,
    }
}

/// Convert an LMFDB `bmf_forms` answer to a local record.
pub fn convert_lmfdb(label: &str, raw: &str) -> Result<NewformRecord> {
    let v: Value = serde_json::from_str(raw).map_err(|e| Error::Conversion(e.to_string()))?;
    let rec = match v.get("data") {
        Some(Value::Array(items)) => items.iter().find(|r| r.get("label").and_then(Value::as_str) == Some(label)),
        _ => Some(&v).filter(|r| r.get("label").and_then(Value::as_str) == Some(label)),
    }
    .ok_or_else(|| Error::NotFound(label.to_string()))?;
    let field_label = rec
        .get("field_label")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Conversion("missing field_label".into()))?;
    let field = QuadField::from_label(field_label)?;
    let level_norm = rec
        .get("level_norm")
        .and_then(|x| x.as_u64().or_else(|| x.as_str().and_then(|s| s.parse().ok())))
        .ok_or_else(|| Error::Conversion("missing level_norm".into()))?;
    let hnf = rec
        .get("level_ideal")
        .and_then(parse_int_list)
        .filter(|l| l.len() == 3)
        .ok_or_else(|| Error::Conversion("missing or malformed level_ideal".into()))?;
    let level_gen = ideal_from_hnf(field, [hnf[0], hnf[1], hnf[2]])?;
    let level = factor_element(field, &level_gen);
    let eigs: Vec<i64> = match rec.get("hecke_eigs") {
        Some(Value::Array(xs)) => xs
            .iter()
            .map(|x| {
                x.as_i64()
                    .or_else(|| x.as_str().and_then(|s| s.trim().parse().ok()))
                    .ok_or_else(|| Error::Conversion(format!("non-integral eigenvalue {x}")))
            })
            .collect::<Result<_>>()?,
        _ => return Err(Error::Conversion("missing hecke_eigs".into())),
    };
    let primes = lmfdb_prime_order(field, eigs.len());
    let ap = primes
        .iter()
        .zip(&eigs)
        .map(|(p, &a)| {
            let (x, y) = gen_pair(p);
            [x, y, a]
        })
        .collect();
    let base_change = rec.get("bc").and_then(Value::as_i64).map(|b| b != 0);
    let doc = NewformDocument {
        label: label.to_string(),
        field: field.label(),
        level_norm,
        level: level
            .iter()
            .map(|(p, e)| {
                let (a, b) = gen_pair(p);
                [a, b, *e as i64]
            })
            .collect(),
        genuine: None,
        base_change,
        ap,
    };
    NewformRecord::from_document(&doc).map_err(|e| match e {
        Error::Schema(s) => Error::Conversion(s),
        other => other,
    })
}

static CACHE_WRITER: Mutex<()> = Mutex::new(());

pub fn cache_path(cache_dir: &Path, label: &str) -> PathBuf {
    let field = label.split('-').next().unwrap_or(label);
    cache_dir.join(field).join(format!("{label}.json"))
}

/// Cached record if present; otherwise fetch, convert and cache, unless offline.
pub fn fetch_lmfdb(label: &str, source: &dyn NewformSource, cache_dir: &Path, offline: bool) -> Result<NewformRecord> {
    let path = cache_path(cache_dir, label);
    if path.exists() {
        return parse_newform_file(&path);
    }
    if offline {
        return Err(Error::NotFound(format!("{label} (offline, not cached)")));
    }
    let record = convert_lmfdb(label, &source.fetch_raw(label)?)?;
    let _guard = CACHE_WRITER.lock().unwrap_or_else(|e| e.into_inner());
    fs::create_dir_all(path.parent().unwrap())?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, record.to_json())?;
    fs::rename(&tmp, &path)?;
    Ok(record)
}
