//! Ray class groups of class-number-one imaginary quadratic fields,
//! quadratic and cubic characters on them, deciding sets, and trace
//! comparison between two Galois-representation data sources.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::counting::TraceTable;
use crate::error::{Error, Result};
use crate::newform::NewformRecord;
use crate::quadfield::{self, split_prime, PrimeIdeal, QuadElement, QuadField};

/// Largest `N(m)` for which `(O/m)^×` is enumerated.
pub const MAX_MODULUS_NORM: u64 = 1_000_000;
pub const DEFAULT_BOUND: u64 = 3000;
/// Largest norm in the deciding sets the trace bound has to dominate.
pub const DEFAULT_DECIDING_NORM: u64 = 2917;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Modulus {
    field: QuadField,
    factors: Vec<(PrimeIdeal, u32)>,
}

impl Modulus {
    pub fn new(field: QuadField, mut factors: Vec<(PrimeIdeal, u32)>) -> Result<Self> {
        for (p, e) in &factors {
            if p.field() != field {
                return Err(Error::FieldMismatch { expected: field.label(), found: p.field().label() });
            }
            if *e == 0 {
                return Err(Error::InvalidConfig(format!("exponent of {p} must be at least 1")));
            }
        }
        factors.sort();
        if factors.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidConfig("modulus repeats a prime".into()));
        }
        Ok(Modulus { field, factors })
    }

    pub fn trivial(field: QuadField) -> Self {
        Modulus { field, factors: Vec::new() }
    }

    /// Parse `gen^e,gen^e,...`, e.g. `2^3,3+w,-5+2*w`. An empty string is the unit ideal.
    pub fn parse(field: QuadField, text: &str) -> Result<Self> {
        let mut factors = Vec::new();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (gen, exp) = match part.rsplit_once('^') {
                Some((g, e)) => {
                    let e: u32 = e.trim().parse().map_err(|_| Error::Parse(format!("bad exponent in `{part}`")))?;
                    (g.trim(), e)
                }
                None => (part, 1),
            };
            let gen = gen.trim_start_matches('(').trim_end_matches(')');
            let x = quadfield::parse_element(field, gen)?;
            if !x.is_integral() {
                return Err(Error::Parse(format!("`{gen}` is not integral")));
            }
            let p = PrimeIdeal::from_generator(x.numer())
                .ok_or_else(|| Error::Parse(format!("`{gen}` does not generate a prime ideal")))?;
            factors.push((p, exp));
        }
        Modulus::new(field, factors)
    }

    pub fn field(&self) -> QuadField {
        self.field
    }

    pub fn factors(&self) -> &[(PrimeIdeal, u32)] {
        &self.factors
    }

    pub fn norm(&self) -> Option<u64> {
        self.factors
            .iter()
            .try_fold(1u64, |acc, (p, e)| p.norm().checked_pow(*e).and_then(|x| acc.checked_mul(x)))
    }

    pub fn generator(&self) -> QuadElement {
        self.factors.iter().fold(self.field.one(), |acc, (p, e)| &acc * &p.gen().pow(*e))
    }

    pub fn is_divisible_by(&self, p: &PrimeIdeal) -> bool {
        self.factors.iter().any(|(q, _)| q == p)
    }

    pub fn label(&self) -> String {
        if self.factors.is_empty() {
            return "(1)".into();
        }
        self.factors
            .iter()
            .map(|(p, e)| if *e == 1 { p.label() } else { format!("{}^{e}", p.label()) })
            .collect::<Vec<_>>()
            .join("*")
    }
}

/// `O/m` as `Z^2` modulo the lattice with Hermite basis `(A, 0), (B, C)`.
#[derive(Clone, Copy, Debug)]
struct ResidueRing {
    a: i64,
    b: i64,
    c: i64,
    trace: i64,
    norm: i64,
}

impl ResidueRing {
    fn new(field: QuadField, g: &QuadElement) -> Self {
        let (g0, g1) = g.coords_i64().expect("modulus generator fits in i64");
        let (t, n) = (field.omega_trace(), field.omega_norm());
        // g * w
        let (h0, h1) = (-g1 * n, g0 + g1 * t);
        // column two: gcd(g1, h1) = s g1 + u h1
        let (c, row_b) = if g1 == 0 && h1 == 0 {
            unreachable!("nonzero generator")
        } else {
            let e = g1.extended_gcd(&h1);
            let row = (e.x * g0 + e.y * h0, e.gcd);
            (e.gcd, row)
        };
        let det = (g0 * h1 - g1 * h0).abs();
        let a = det / c;
        let (mut b, c) = if c < 0 { (-row_b.0, -c) } else { (row_b.0, c) };
        b = b.rem_euclid(a);
        ResidueRing { a, b, c, trace: t, norm: n }
    }

    fn size(&self) -> u64 {
        (self.a * self.c) as u64
    }

    fn reduce(&self, x: i128, y: i128) -> (i64, i64) {
        let q = y.div_euclid(self.c as i128);
        let y = y - q * self.c as i128;
        let x = (x - q * self.b as i128).rem_euclid(self.a as i128);
        (x as i64, y as i64)
    }

    fn reduce_big(&self, x: &QuadElement) -> (i64, i64) {
        let c = BigInt::from(self.c);
        let q = x.b().div_floor(&c);
        let y = x.b() - &q * &c;
        let xa = (x.a() - &q * BigInt::from(self.b)).mod_floor(&BigInt::from(self.a));
        (xa.to_i64().unwrap(), y.to_i64().unwrap())
    }

    fn index(&self, r: (i64, i64)) -> usize {
        (r.1 * self.a + r.0) as usize
    }

    fn element(&self, i: usize) -> (i64, i64) {
        let i = i as i64;
        (i % self.a, i / self.a)
    }

    fn mul(&self, x: (i64, i64), y: (i64, i64)) -> (i64, i64) {
        let (a, b, c, d) = (x.0 as i128, x.1 as i128, y.0 as i128, y.1 as i128);
        let bd = b * d;
        self.reduce(a * c - self.norm as i128 * bd, a * d + b * c + self.trace as i128 * bd)
    }
}

/// Whether the residue `(a, b)` lies in `P`.
fn in_prime(p: &PrimeIdeal, x: (i64, i64)) -> bool {
    let q = p.p() as i128;
    let (a, b) = (x.0 as i128, x.1 as i128);
    if let Some(r) = p.root() {
        (a + b * r as i128).rem_euclid(q) == 0
    } else if p.is_inert() {
        a.rem_euclid(q) == 0 && b.rem_euclid(q) == 0
    } else {
        let f = p.field();
        let n = a * a + f.omega_trace() as i128 * a * b + f.omega_norm() as i128 * b * b;
        n.rem_euclid(q) == 0
    }
}

/// `Cl(O, m) = (O/m)^× / image of the roots of unity`.
#[derive(Debug)]
pub struct RayClassGroup {
    modulus: Modulus,
    ring: ResidueRing,
    unit_residues: u64,
    unit_image: u64,
    invariants: Vec<u64>,
    generators: Vec<QuadElement>,
    class_of: Vec<u32>,
    /// Row-major, `invariants.len()` entries per class.
    dlogs: Vec<u32>,
}

const NOT_A_UNIT: u32 = u32::MAX;

pub fn ray_class_group(modulus: &Modulus) -> Result<RayClassGroup> {
    let size = modulus.norm().filter(|&n| n <= MAX_MODULUS_NORM).ok_or_else(|| {
        Error::BudgetExceeded(format!("N({}) exceeds {MAX_MODULUS_NORM}", modulus.label()))
    })?;
    let field = modulus.field;
    let ring = ResidueRing::new(field, &modulus.generator());
    debug_assert_eq!(ring.size(), size);
    let size = size as usize;

    let units: Vec<(i64, i64)> = field.unit_group().iter().map(|u| ring.reduce_big(u)).collect();
    let mut unit_image: Vec<(i64, i64)> = units.clone();
    unit_image.sort();
    unit_image.dedup();

    // orbits of the unit image are the classes
    let mut class_of = vec![NOT_A_UNIT; size];
    let mut reps: Vec<(i64, i64)> = Vec::new();
    let mut unit_residues = 0u64;
    for i in 0..size {
        let x = ring.element(i);
        if class_of[i] != NOT_A_UNIT || modulus.factors.iter().any(|(p, _)| in_prime(p, x)) {
            continue;
        }
        let id = reps.len() as u32;
        for u in &unit_image {
            let j = ring.index(ring.mul(*u, x));
            if class_of[j] == NOT_A_UNIT {
                unit_residues += 1;
            }
            class_of[j] = id;
        }
        reps.push(x);
    }
    let order = reps.len();
    let class_mul = |x: u32, y: u32| class_of[ring.index(ring.mul(reps[x as usize], reps[y as usize]))];

    // grow a subgroup one cyclic factor at a time, recording coordinates and relations
    let identity = class_of[ring.index(ring.reduce(1, 0))];
    let mut coords: Vec<Option<Vec<i64>>> = vec![None; order];
    coords[identity as usize] = Some(Vec::new());
    let mut members = vec![identity];
    let mut gens: Vec<u32> = Vec::new();
    let mut relations: Vec<Vec<i64>> = Vec::new();
    for x in 0..order as u32 {
        if coords[x as usize].is_some() {
            continue;
        }
        let k = gens.len();
        let mut y = x;
        let mut r = 1i64;
        let mut powers = vec![identity, x];
        while coords[y as usize].is_none() {
            y = class_mul(y, x);
            powers.push(y);
            r += 1;
        }
        let mut rel: Vec<i64> = coords[y as usize].clone().unwrap().iter().map(|v| -v).collect();
        rel.resize(k, 0);
        rel.push(r);
        relations.push(rel);
        gens.push(x);
        let base = members.clone();
        for (i, &xi) in powers.iter().enumerate().take(r as usize).skip(1) {
            for &h in &base {
                let z = class_mul(xi, h);
                let mut v = coords[h as usize].clone().unwrap();
                v.resize(k, 0);
                v.push(i as i64);
                coords[z as usize] = Some(v);
                members.push(z);
            }
        }
    }
    debug_assert_eq!(members.len(), order);

    let k = gens.len();
    let mut rel_matrix: Vec<Vec<i128>> = relations
        .iter()
        .map(|r| {
            let mut r: Vec<i128> = r.iter().map(|&v| v as i128).collect();
            r.resize(k, 0);
            r
        })
        .collect();
    let (diag, v, vinv) = smith_normal_form(&mut rel_matrix);
    let keep: Vec<usize> = (0..k).filter(|&i| diag[i] != 1).collect();
    let invariants: Vec<u64> = keep.iter().map(|&i| diag[i] as u64).collect();

    let mut dlogs = vec![0u32; order * keep.len()];
    for (cls, c) in coords.iter().enumerate() {
        let mut c = c.clone().unwrap();
        c.resize(k, 0);
        for (slot, &col) in keep.iter().enumerate() {
            let s: i128 = (0..k).map(|j| c[j] as i128 * v[j][col]).sum();
            dlogs[cls * keep.len() + slot] = s.rem_euclid(diag[col]) as u32;
        }
    }

    let pow_class = |x: u32, e: i128| {
        let (mut acc, mut base, mut e) = (identity, x, e.rem_euclid(order as i128));
        while e > 0 {
            if e & 1 == 1 {
                acc = class_mul(acc, base);
            }
            base = class_mul(base, base);
            e >>= 1;
        }
        acc
    };
    let generators: Vec<QuadElement> = keep
        .iter()
        .map(|&row| {
            let cls = (0..k).fold(identity, |acc, j| class_mul(acc, pow_class(gens[j], vinv[row][j])));
            let (a, b) = reps[cls as usize];
            field.elem(a, b)
        })
        .collect();

    Ok(RayClassGroup {
        modulus: modulus.clone(),
        ring,
        unit_residues,
        unit_image: unit_image.len() as u64,
        invariants,
        generators,
        class_of,
        dlogs,
    })
}

/// Smith form of a square nonsingular matrix by column and row operations.
/// Returns the diagonal, the column transform `V` and its inverse.
#[allow(clippy::type_complexity)]
fn smith_normal_form(m: &mut [Vec<i128>]) -> (Vec<i128>, Vec<Vec<i128>>, Vec<Vec<i128>>) {
    let n = m.len();
    let mut v: Vec<Vec<i128>> = (0..n).map(|i| (0..n).map(|j| (i == j) as i128).collect()).collect();
    let mut vinv = v.clone();
    let col_add = |m: &mut [Vec<i128>], v: &mut [Vec<i128>], vinv: &mut [Vec<i128>], dst: usize, src: usize, c: i128| {
        for row in m.iter_mut() {
            row[dst] += c * row[src];
        }
        for row in v.iter_mut() {
            row[dst] += c * row[src];
        }
        // inverse: row_src -= c row_dst
        let dst_row = vinv[dst].clone();
        for (j, x) in dst_row.iter().enumerate() {
            vinv[src][j] -= c * x;
        }
    };
    let col_swap = |m: &mut [Vec<i128>], v: &mut [Vec<i128>], vinv: &mut [Vec<i128>], i: usize, j: usize| {
        for row in m.iter_mut() {
            row.swap(i, j);
        }
        for row in v.iter_mut() {
            row.swap(i, j);
        }
        vinv.swap(i, j);
    };
    for t in 0..n {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for (i, row) in m.iter().enumerate().skip(t) {
                for (j, &x) in row.iter().enumerate().skip(t) {
                    if x != 0 && best.is_none_or(|(bi, bj)| x.abs() < m[bi][bj].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else { break };
            m.swap(t, bi);
            if bj != t {
                col_swap(m, &mut v, &mut vinv, t, bj);
            }
            let pivot = m[t][t];
            let mut clean = true;
            for i in t + 1..n {
                let q = m[i][t].div_euclid(pivot);
                if q != 0 {
                    let pr = m[t].clone();
                    for (x, y) in m[i].iter_mut().zip(pr) {
                        *x -= q * y;
                    }
                }
                clean &= m[i][t] == 0;
            }
            for j in t + 1..n {
                let q = m[t][j].div_euclid(pivot);
                if q != 0 {
                    col_add(m, &mut v, &mut vinv, j, t, -q);
                }
                clean &= m[t][j] == 0;
            }
            if !clean {
                continue;
            }
            let bad = (t + 1..n).find(|&i| (t + 1..n).any(|j| m[i][j] % pivot != 0));
            match bad {
                Some(i) => {
                    let ri = m[i].clone();
                    for (x, y) in m[t].iter_mut().zip(ri) {
                        *x += y;
                    }
                }
                None => break,
            }
        }
        if m[t][t] < 0 {
            m[t][t] = -m[t][t];
            for row in m.iter_mut().skip(t + 1) {
                row[t] = -row[t];
            }
            for row in v.iter_mut() {
                row[t] = -row[t];
            }
            for x in vinv[t].iter_mut() {
                *x = -*x;
            }
        }
    }
    ((0..n).map(|i| m[i][i]).collect(), v, vinv)
}

impl RayClassGroup {
    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn field(&self) -> QuadField {
        self.modulus.field
    }

    /// Elementary divisors `d_1 | d_2 | ...`, all greater than one.
    pub fn invariants(&self) -> &[u64] {
        &self.invariants
    }

    pub fn order(&self) -> u64 {
        self.invariants.iter().product()
    }

    /// `|(O/m)^×|`.
    pub fn residue_unit_count(&self) -> u64 {
        self.unit_residues
    }

    /// Size of the image of the roots of unity in `(O/m)^×`.
    pub fn unit_image_order(&self) -> u64 {
        self.unit_image
    }

    /// Elements of `O` whose classes generate the invariant factors.
    pub fn generators(&self) -> &[QuadElement] {
        &self.generators
    }

    /// Coordinates of the class of `x` along the invariant factors.
    pub fn dlog(&self, x: &QuadElement) -> Result<Vec<u64>> {
        let r = self.ring.reduce_big(x);
        let cls = self.class_of[self.ring.index(r)];
        if cls == NOT_A_UNIT {
            let p = self.modulus.factors.iter().find(|(p, _)| in_prime(p, r)).map(|(p, _)| p.label());
            return Err(Error::PrimeDividesModulus(p.unwrap_or_else(|| x.to_string())));
        }
        let k = self.invariants.len();
        Ok(self.dlogs[cls as usize * k..(cls as usize + 1) * k].iter().map(|&v| v as u64).collect())
    }

    pub fn dlog_prime(&self, p: &PrimeIdeal) -> Result<Vec<u64>> {
        if p.field() != self.field() {
            return Err(Error::FieldMismatch { expected: self.field().label(), found: p.field().label() });
        }
        if self.modulus.is_divisible_by(p) {
            return Err(Error::PrimeDividesModulus(p.label()));
        }
        self.dlog(p.gen())
    }
}

/// A homomorphism `Cl(O, m) -> Z/n`, by its values on the invariant generators.
#[derive(Clone, Debug)]
pub struct Character {
    group: Arc<RayClassGroup>,
    order: u64,
    values: Vec<u64>,
}

impl PartialEq for Character {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.group, &other.group) && self.order == other.order && self.values == other.values
    }
}

impl Character {
    pub fn new(group: &Arc<RayClassGroup>, order: u64, values: Vec<u64>) -> Result<Self> {
        if order != 2 && order != 3 {
            return Err(Error::InvalidConfig(format!("character order {order} is not 2 or 3")));
        }
        if values.len() != group.invariants.len() {
            return Err(Error::InvalidConfig("one value per invariant factor".into()));
        }
        for (v, d) in values.iter().zip(&group.invariants) {
            if *v >= order || (d % order != 0 && *v != 0) {
                return Err(Error::InvalidConfig(format!("value {v} on a factor of order {d}")));
            }
        }
        Ok(Character { group: group.clone(), order, values })
    }

    pub fn group(&self) -> &Arc<RayClassGroup> {
        &self.group
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn is_trivial(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    fn eval_coords(&self, x: &[u64]) -> u64 {
        self.values.iter().zip(x).map(|(c, x)| c * (x % self.order)).sum::<u64>() % self.order
    }

    pub fn eval_element(&self, x: &QuadElement) -> Result<u64> {
        Ok(self.eval_coords(&self.group.dlog(x)?))
    }

    pub fn eval(&self, p: &PrimeIdeal) -> Result<u64> {
        Ok(self.eval_coords(&self.group.dlog_prime(p)?))
    }

    fn scaled(&self, k: u64) -> Character {
        let values = self.values.iter().map(|v| v * k % self.order).collect();
        Character { group: self.group.clone(), order: self.order, values }
    }

    fn plus(&self, other: &Character) -> Character {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| (a + b) % self.order).collect();
        Character { group: self.group.clone(), order: self.order, values }
    }
}

/// A basis of `Hom(G, Z/n)`, one character per elementary divisor divisible by `n`.
pub fn character_basis(group: &Arc<RayClassGroup>, n: u64) -> Result<Vec<Character>> {
    let k = group.invariants.len();
    (0..k)
        .filter(|&i| group.invariants[i].is_multiple_of(n))
        .map(|i| {
            let mut v = vec![0; k];
            v[i] = 1;
            Character::new(group, n, v)
        })
        .collect()
}

/// Every character of order dividing `n`, zero first, coordinates in lexicographic order.
fn all_characters(group: &Arc<RayClassGroup>, n: u64) -> Vec<Character> {
    let basis = character_basis(group, n).expect("valid order");
    let mut out = vec![Character::new(group, n, vec![0; group.invariants.len()]).unwrap()];
    for b in basis.iter().rev() {
        let prev = out.clone();
        out = (0..n).flat_map(|c| prev.iter().map(move |x| x.plus(&b.scaled(c)))).collect();
    }
    out
}

/// Rank of a matrix over `F_n`, `n` prime.
pub fn rank_mod(rows: &[Vec<u64>], n: u64) -> usize {
    let mut m: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|x| x % n).collect()).collect();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(rank, p);
        let inv = (1..n).find(|x| x * m[rank][c] % n == 1).unwrap();
        for x in m[rank].iter_mut() {
            *x = *x * inv % n;
        }
        for i in 0..m.len() {
            if i != rank && m[i][c] != 0 {
                let f = m[i][c];
                let pr = m[rank].clone();
                for (x, y) in m[i].iter_mut().zip(pr) {
                    *x = (*x + n * n - f * y % n) % n;
                }
            }
        }
        rank += 1;
    }
    rank
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpanReport {
    pub spans: bool,
    pub rank: usize,
    pub dimension: usize,
    pub primes: Vec<String>,
    /// Row per prime, column per basis character.
    pub matrix: Vec<Vec<u64>>,
}

fn evaluation_matrix(basis: &[Character], primes: &[PrimeIdeal]) -> Result<Vec<Vec<u64>>> {
    primes.iter().map(|p| basis.iter().map(|c| c.eval(p)).collect()).collect()
}

/// Whether the evaluation vectors of `basis` at `primes` span the dual space.
pub fn spanning_check(basis: &[Character], primes: &[PrimeIdeal]) -> Result<SpanReport> {
    let matrix = evaluation_matrix(basis, primes)?;
    let n = basis.first().map_or(2, |c| c.order);
    let rank = rank_mod(&matrix, n);
    Ok(SpanReport {
        spans: rank == basis.len() && !primes.is_empty(),
        rank,
        dimension: basis.len(),
        primes: primes.iter().map(|p| p.label()).collect(),
        matrix,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverReport {
    pub covered: bool,
    pub dimension: usize,
    /// Nonzero vector to the first entry realising it.
    pub certificate: BTreeMap<Vec<u64>, String>,
    pub uncovered: Vec<Vec<u64>>,
}

fn nonzero_vectors(n: u64, dim: usize) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out.into_iter().flat_map(|v| (0..n).map(move |c| [v.clone(), vec![c]].concat())).collect();
    }
    out.retain(|v| v.iter().any(|&c| c != 0));
    out
}

/// Cover check on abstract evaluation vectors, e.g. a character table over
/// an extension field supplied by the caller as `(tag, vector)` pairs.
pub fn cover_check_vectors(n: u64, dim: usize, entries: &[(String, Vec<u64>)]) -> Result<CoverReport> {
    if dim > 16 {
        return Err(Error::BudgetExceeded(format!("{n}^{dim} vectors")));
    }
    let mut certificate = BTreeMap::new();
    for (tag, v) in entries {
        if v.len() != dim {
            return Err(Error::InvalidConfig(format!("vector for {tag} has length {}, expected {dim}", v.len())));
        }
        let v: Vec<u64> = v.iter().map(|x| x % n).collect();
        if v.iter().any(|&c| c != 0) {
            certificate.entry(v).or_insert_with(|| tag.clone());
        }
    }
    let uncovered: Vec<Vec<u64>> = nonzero_vectors(n, dim).into_iter().filter(|v| !certificate.contains_key(v)).collect();
    Ok(CoverReport { covered: uncovered.is_empty(), dimension: dim, certificate, uncovered })
}

/// Whether the evaluation vectors at `primes` hit every nonzero vector of the dual space.
pub fn deciding_cover_check(basis: &[Character], primes: &[PrimeIdeal]) -> Result<CoverReport> {
    let matrix = evaluation_matrix(basis, primes)?;
    let n = basis.first().map_or(2, |c| c.order);
    let entries: Vec<(String, Vec<u64>)> = primes.iter().map(|p| p.label()).zip(matrix).collect();
    cover_check_vectors(n, basis.len(), &entries)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecidingSet {
    pub primes: Vec<String>,
    pub norms: Vec<u64>,
    pub max_norm: u64,
    pub cover: CoverReport,
}

/// Primes of `field` up to `max_norm`, by norm and then generator.
pub fn prime_stream(field: QuadField, max_norm: u64) -> Vec<PrimeIdeal> {
    field.primes_up_to_norm(max_norm)
}

/// Greedy deciding set: take each prime of the stream whose evaluation
/// vector is not yet covered. Primes dividing the modulus are skipped;
/// `budget` caps how many stream entries are examined.
pub fn find_deciding_set(
    basis: &[Character],
    stream: impl IntoIterator<Item = PrimeIdeal>,
    budget: usize,
) -> Result<DecidingSet> {
    let n = basis.first().map_or(2, |c| c.order);
    let target = nonzero_vectors(n, basis.len()).len();
    let mut chosen: Vec<PrimeIdeal> = Vec::new();
    let mut seen: BTreeSet<Vec<u64>> = BTreeSet::new();
    let mut stream = stream.into_iter();
    let mut examined = 0;
    while seen.len() < target {
        if examined == budget {
            return Err(Error::BudgetExceeded(format!("{} of {target} vectors covered after {budget} primes", seen.len())));
        }
        let Some(p) = stream.next() else {
            return Err(Error::BudgetExceeded(format!("stream ended with {} of {target} vectors covered", seen.len())));
        };
        examined += 1;
        if basis[0].group.modulus.is_divisible_by(&p) {
            continue;
        }
        let v: Vec<u64> = basis.iter().map(|c| c.eval(&p)).collect::<Result<_>>()?;
        if v.iter().any(|&c| c != 0) && seen.insert(v) {
            chosen.push(p);
        }
    }
    let cover = deciding_cover_check(basis, &chosen)?;
    Ok(DecidingSet {
        norms: chosen.iter().map(|p| p.norm()).collect(),
        max_norm: chosen.iter().map(|p| p.norm()).max().unwrap_or(0),
        primes: chosen.iter().map(|p| p.label()).collect(),
        cover,
    })
}

/// Anything that assigns Frobenius traces to primes of `K`.
pub trait TraceSource {
    fn source_name(&self) -> String;
    fn field(&self) -> Option<QuadField>;
    fn trace_at(&self, p: &PrimeIdeal) -> Option<i64>;
    fn is_bad_at(&self, p: &PrimeIdeal) -> bool;
    /// Primes with a recorded trace.
    fn known_primes(&self) -> Vec<PrimeIdeal>;
}

impl TraceSource for TraceTable {
    fn source_name(&self) -> String {
        format!("curve {}", self.curve)
    }

    fn field(&self) -> Option<QuadField> {
        self.records
            .first()
            .map(|r| r.prime.field())
            .or_else(|| self.bad.first().map(|b| b.prime.field()))
    }

    fn trace_at(&self, p: &PrimeIdeal) -> Option<i64> {
        self.trace(p)
    }

    fn is_bad_at(&self, p: &PrimeIdeal) -> bool {
        self.is_bad(p) || self.shape_failures.iter().any(|b| &b.prime == p)
    }

    fn known_primes(&self) -> Vec<PrimeIdeal> {
        self.records.iter().map(|r| r.prime.clone()).collect()
    }
}

impl TraceSource for NewformRecord {
    fn source_name(&self) -> String {
        format!("newform {}", self.label)
    }

    fn field(&self) -> Option<QuadField> {
        Some(self.field)
    }

    fn trace_at(&self, p: &PrimeIdeal) -> Option<i64> {
        self.eigenvalues.get(p).copied()
    }

    fn is_bad_at(&self, p: &PrimeIdeal) -> bool {
        self.divides_level(p)
    }

    fn known_primes(&self) -> Vec<PrimeIdeal> {
        self.eigenvalues.keys().cloned().collect()
    }
}

/// Traces held in a map, for hand-built or derived data.
#[derive(Clone, Debug, Default)]
pub struct TraceMap {
    pub name: String,
    pub traces: BTreeMap<PrimeIdeal, i64>,
    pub bad: BTreeSet<PrimeIdeal>,
}

impl TraceSource for TraceMap {
    fn source_name(&self) -> String {
        self.name.clone()
    }

    fn field(&self) -> Option<QuadField> {
        self.traces.keys().next().or(self.bad.iter().next()).map(|p| p.field())
    }

    fn trace_at(&self, p: &PrimeIdeal) -> Option<i64> {
        self.traces.get(p).copied()
    }

    fn is_bad_at(&self, p: &PrimeIdeal) -> bool {
        self.bad.contains(p)
    }

    fn known_primes(&self) -> Vec<PrimeIdeal> {
        self.traces.keys().cloned().collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FrobeniusClass {
    Trivial,
    OrderThree,
}

/// Residual image inside `F_4^× ⊂ GL_2(F_2)`: the identity has trace 0 and
/// the elements of order 3 have trace 1.
pub fn parity_oracle(source: &dyn TraceSource) -> impl Fn(&PrimeIdeal) -> Option<FrobeniusClass> + '_ {
    move |p| {
        if source.is_bad_at(p) {
            return None;
        }
        source.trace_at(p).map(|a| if a.rem_euclid(2) == 0 { FrobeniusClass::Trivial } else { FrobeniusClass::OrderThree })
    }
}

#[derive(Clone, Debug)]
pub struct CubicIdentification {
    /// Normalised so the first nonzero value is 1.
    pub character: Character,
    pub probes_used: usize,
}

/// The cubic character, up to inverse, vanishing exactly where the oracle
/// reports a trivial Frobenius.
pub fn identify_cubic_character(
    group: &Arc<RayClassGroup>,
    oracle: impl Fn(&PrimeIdeal) -> Option<FrobeniusClass>,
    probes: &[PrimeIdeal],
) -> Result<CubicIdentification> {
    let observed: Vec<(PrimeIdeal, FrobeniusClass)> = probes
        .iter()
        .filter(|p| !group.modulus.is_divisible_by(p))
        .filter_map(|p| oracle(p).map(|c| (p.clone(), c)))
        .collect();
    let mut matches = Vec::new();
    for chi in all_characters(group, 3).into_iter().skip(1) {
        // one representative per {chi, chi^2}
        if chi.values.iter().find(|&&v| v != 0) != Some(&1) {
            continue;
        }
        let consistent = observed.iter().try_fold(true, |ok, (p, c)| {
            Ok::<_, Error>(ok && ((chi.eval(p)? == 0) == (*c == FrobeniusClass::Trivial)))
        })?;
        if consistent {
            matches.push(chi);
        }
    }
    match matches.len() {
        1 => Ok(CubicIdentification { character: matches.pop().unwrap(), probes_used: observed.len() }),
        0 => Err(Error::Inconsistent(format!("no order-3 character fits {} probes", observed.len()))),
        k => Err(Error::Inconsistent(format!("{k} order-3 characters fit {} probes", observed.len()))),
    }
}

/// A cubic character independent of `psi` and nonzero at `separating`:
/// the first such in the enumeration of `Hom(G, Z/3)`.
pub fn complete_cubic_basis(psi: &Character, separating: &PrimeIdeal) -> Result<Character> {
    for chi in all_characters(&psi.group, 3).into_iter().skip(1) {
        let pair = vec![psi.values.clone(), chi.values.clone()];
        if rank_mod(&pair, 3) == 2 && chi.eval(separating)? != 0 {
            return Ok(chi);
        }
    }
    Err(Error::Inconsistent(format!("no cubic character independent of psi is nonzero at {separating}")))
}

/// Cubic characters completing `psi` to a basis of `Hom(G, Z/3)`, taken
/// from the standard basis in order.
pub fn cubic_complement(psi: &Character) -> Vec<Character> {
    let mut rows = vec![psi.values.clone()];
    let mut out = Vec::new();
    for chi in character_basis(&psi.group, 3).expect("valid order") {
        rows.push(chi.values.clone());
        if rank_mod(&rows, 3) == rows.len() {
            out.push(chi);
        } else {
            rows.pop();
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResidualReport {
    pub verdict: String,
    pub invariants: Vec<u64>,
    pub span: SpanReport,
    pub span_traces: Vec<(String, i64, i64)>,
    pub cubic_character: Vec<u64>,
    pub complement: Vec<Vec<u64>>,
    /// Per separating prime: label, complement values, both traces.
    pub separating: Vec<(String, Vec<u64>, i64, i64)>,
    pub probes_used: usize,
}

/// Residual isomorphism with image `C_3` between the mod-2 representations
/// of two trace sources.
///
/// Odd traces on `span_set` (which spans the quadratic characters of the
/// ray class group) exclude a quadratic subextension on either side. The
/// cubic character `psi` of `left` is identified from its trace parities.
/// At the `separating` primes `psi` vanishes while the complementary cubic
/// characters span their dual; equal parities there on both sides pin the
/// cubic character of `right` to `psi` up to inverse.
pub fn residual_isomorphism_check(
    left: &dyn TraceSource,
    right: &dyn TraceSource,
    group: &Arc<RayClassGroup>,
    span_set: &[PrimeIdeal],
    separating: &[PrimeIdeal],
) -> Result<ResidualReport> {
    let mut failures = Vec::new();
    let quadratic = character_basis(group, 2)?;
    let span = spanning_check(&quadratic, span_set)?;
    if !span.spans {
        failures.push(format!("probe set has rank {} < {}", span.rank, span.dimension));
    }
    let mut span_traces = Vec::new();
    for p in span_set {
        let (a, b) = (left.trace_at(p), right.trace_at(p));
        for (src, t) in [(left, a), (right, b)] {
            match t {
                None => failures.push(format!("{} has no trace at {p}", src.source_name())),
                Some(t) if t.rem_euclid(2) == 0 => failures.push(format!("{} has even trace {t} at {p}", src.source_name())),
                _ => {}
            }
        }
        span_traces.push((p.label(), a.unwrap_or(0), b.unwrap_or(0)));
    }

    let mut cubic = Vec::new();
    let mut complement_values = Vec::new();
    let mut sep_rows = Vec::new();
    let mut probes_used = 0;
    match identify_cubic_character(group, parity_oracle(left), &left.known_primes()) {
        Ok(id) => {
            probes_used = id.probes_used;
            cubic = id.character.values.clone();
            let complement = cubic_complement(&id.character);
            complement_values = complement.iter().map(|c| c.values.clone()).collect();
            let mut matrix = Vec::new();
            for p in separating {
                if id.character.eval(p)? != 0 {
                    failures.push(format!("cubic character is nonzero at {p}"));
                }
                let row: Vec<u64> = complement.iter().map(|c| c.eval(p)).collect::<Result<_>>()?;
                matrix.push(row.clone());
                let (a, b) = (left.trace_at(p), right.trace_at(p));
                match (a, b) {
                    (Some(a), Some(b)) if (a - b).rem_euclid(2) != 0 => {
                        failures.push(format!("trace parities differ at {p}: {a} vs {b}"))
                    }
                    (Some(_), Some(_)) => {}
                    _ => failures.push(format!("missing trace at separating prime {p}")),
                }
                sep_rows.push((p.label(), row, a.unwrap_or(0), b.unwrap_or(0)));
            }
            let rank = rank_mod(&matrix, 3);
            if rank < complement.len() {
                failures.push(format!("separating primes reach rank {rank} < {} on the complement", complement.len()));
            }
        }
        Err(e) => failures.push(format!("{}: {e}", left.source_name())),
    }

    if !failures.is_empty() {
        return Err(Error::ProbeFailure(failures));
    }
    Ok(ResidualReport {
        verdict: "isomorphic-C3".into(),
        invariants: group.invariants.clone(),
        span,
        span_traces,
        cubic_character: cubic,
        complement: complement_values,
        separating: sep_rows,
        probes_used,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LivneConfig {
    pub bound: u64,
    pub deciding_norm: u64,
    pub twist_prime: Option<PrimeIdeal>,
}

impl LivneConfig {
    /// Default bounds; the twist prime is the prime above 5 when it is inert.
    pub fn for_field(field: QuadField) -> Self {
        let above5 = split_prime(field, 5);
        let twist_prime = (field.d() == 3).then(|| above5[0].clone());
        LivneConfig { bound: DEFAULT_BOUND, deciding_norm: DEFAULT_DECIDING_NORM, twist_prime }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceComparison {
    pub prime: String,
    pub norm: u64,
    pub left: i64,
    pub right: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LivneReport {
    pub verdict: String,
    pub left: String,
    pub right: String,
    pub bound: u64,
    pub compared: usize,
    pub skipped_bad: Vec<String>,
    pub twist_prime: String,
    pub twist_traces: (i64, i64),
    /// Residual triviality after restriction to the cubic field is taken from the residual check.
    pub restriction: String,
    pub comparisons: Vec<TraceComparison>,
}

/// `a_P(left) = a_P(right)` at every prime of norm at most `config.bound`
/// that is good for both sources, then agreement at the twist prime.
/// Mismatches take precedence over missing data.
pub fn livne_verify(left: &dyn TraceSource, right: &dyn TraceSource, config: &LivneConfig) -> Result<LivneReport> {
    let field = match (left.field(), right.field()) {
        (Some(a), Some(b)) if a != b => return Err(Error::FieldMismatch { expected: a.label(), found: b.label() }),
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(Error::InvalidConfig("neither source determines a field".into())),
    };
    if config.bound <= config.deciding_norm {
        return Err(Error::InvalidConfig(format!(
            "bound {} does not exceed the deciding norm {}",
            config.bound, config.deciding_norm
        )));
    }
    let twist = config
        .twist_prime
        .clone()
        .ok_or_else(|| Error::InvalidConfig(format!("a twist prime is required over {}", field.label())))?;
    if twist.field() != field {
        return Err(Error::FieldMismatch { expected: field.label(), found: twist.field().label() });
    }

    let mut comparisons = Vec::new();
    let mut skipped_bad = Vec::new();
    let mut mismatch = None;
    let mut missing = None;
    for p in prime_stream(field, config.bound) {
        if left.is_bad_at(&p) || right.is_bad_at(&p) {
            skipped_bad.push(p.label());
            continue;
        }
        match (left.trace_at(&p), right.trace_at(&p)) {
            (Some(a), Some(b)) => {
                if a != b && mismatch.is_none() {
                    mismatch = Some(Error::TraceMismatch { prime: p.label(), curve: a, form: b });
                }
                comparisons.push(TraceComparison { prime: p.label(), norm: p.norm(), left: a, right: b });
            }
            (a, _) => {
                if missing.is_none() {
                    let src = if a.is_none() { left } else { right };
                    missing = Some(Error::MissingEigenvalue(format!("{p} ({})", src.source_name())));
                }
            }
        }
    }
    if let Some(e) = mismatch.or(missing) {
        return Err(e);
    }

    if left.is_bad_at(&twist) || right.is_bad_at(&twist) {
        return Err(Error::InvalidConfig(format!("twist prime {twist} is bad")));
    }
    let ta = left.trace_at(&twist).ok_or_else(|| Error::MissingEigenvalue(format!("{twist} ({})", left.source_name())))?;
    let tb = right.trace_at(&twist).ok_or_else(|| Error::MissingEigenvalue(format!("{twist} ({})", right.source_name())))?;
    if ta != tb {
        return Err(Error::TraceMismatch { prime: twist.label(), curve: ta, form: tb });
    }

    Ok(LivneReport {
        verdict: "verified-up-to-semisimplification".into(),
        left: left.source_name(),
        right: right.source_name(),
        bound: config.bound,
        compared: comparisons.len(),
        skipped_bad,
        twist_prime: twist.label(),
        twist_traces: (ta, tb),
        restriction: "trivial mod-2 image over the cubic field cut out by the residual character".into(),
        comparisons,
    })
}
