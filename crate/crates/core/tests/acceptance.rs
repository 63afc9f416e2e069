//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

use qmsurf::algebra::Ring;
use qmsurf::counting::{genuineness_test, trace_table, trace_table_with, Genuineness, TraceTable};
use qmsurf::curve::GenusTwoCurve;
use qmsurf::galois::verify_ses;
use qmsurf::livne::{
    character_basis, complete_cubic_basis, identify_cubic_character, livne_verify, parity_oracle, ray_class_group,
    residual_isomorphism_check, spanning_check, Character, LivneConfig, Modulus, RayClassGroup, TraceSource,
};
use qmsurf::newform::{parse_newform, parse_newform_file, NewformRecord};
use qmsurf::quadfield::{parse_element, split_prime, PrimeIdeal, QuadField, QuadFrac};
use qmsurf::shimura::{
    baba_granath_curve, family_point, family_point_residual, hilbert_symbol, potentially_bad_primes, relevant_places,
    splits_quaternion, splits_quaternion_hilbert, stable_bad_support,
};

type Outcome = Result<String, String>;

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

fn field(d: u32) -> QuadField {
    QuadField::new(d).unwrap()
}

fn curve(name: &str) -> GenusTwoCurve {
    GenusTwoCurve::from_json(&std::fs::read_to_string(fixture(&format!("curves/{name}.json"))).unwrap()).unwrap()
}

fn newform(label: &str) -> NewformRecord {
    parse_newform_file(&fixture(&format!("newforms/{label}.json"))).unwrap()
}

const PAIRS: [(&str, &str); 4] = [
    ("c1", "2.0.4.1-34225.3-a"),
    ("c2", "2.0.3.1-61009.1-a"),
    ("c3", "2.0.3.1-67081.3-a"),
    ("c4", "2.0.3.1-123201.1-b"),
];

/// `p_{N,i}` in the published indexing: split primes in decreasing order
/// of the root `c` with `w = c mod P`; inert and ramified primes have index 1.
fn published_prime(k: QuadField, norm: u64, index: usize) -> PrimeIdeal {
    let p = (2..=norm).find(|p| norm.is_multiple_of(*p)).unwrap();
    let mut ps: Vec<PrimeIdeal> = split_prime(k, p).into_iter().filter(|q| q.norm() == norm).collect();
    let root = |q: &PrimeIdeal| {
        let c = (0..p).find(|c| q.divides(&(&k.omega() - &k.elem(*c as i64, 0)))).unwrap();
        if q.is_split() {
            assert_eq!(q.root(), Some(c));
        }
        c
    };
    ps.sort_by_key(|q| std::cmp::Reverse(root(q)));
    ps.swap_remove(index - 1)
}

fn c1() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    for _ in 0..100 {
        let (a, b) = (rng.random_range(-1000i64..=1000), rng.random_range(1i64..=1000));
        let j = BigRational::new(BigInt::from(a), BigInt::from(b));
        if !family_point_residual(&j).is_zero_elem() {
            return Err(format!("j = {j} over Q"));
        }
        let k = field([1, 2, 3, 7, 11][rng.random_range(0..5)]);
        let jk = QuadFrac::from_parts(k, rng.random_range(-500..=500), rng.random_range(-500..=500), rng.random_range(1..=300));
        // the three squares separately: 16, 27 j, -27 j - 16
        let [x, y, z] = family_point(&jk);
        let sq = |t: &qmsurf::algebra::RelQuad<qmsurf::algebra::RelQuad<QuadFrac>>| {
            t.times(t).as_base().and_then(|u| u.as_base().cloned())
        };
        let want = [
            QuadFrac::from_int(k, 16),
            jk.scale_int(27),
            jk.scale_int(-27).minus(&QuadFrac::from_int(k, 16)),
        ];
        let got = [sq(&x), sq(&y).map(|v| v.scale_int(3)), sq(&z)];
        for (g, w) in got.iter().zip(&want) {
            if g.as_ref() != Some(w) {
                return Err(format!("square mismatch for j = {jk}"));
            }
        }
        if !family_point_residual(&jk).is_zero_elem() {
            return Err(format!("j = {jk} over {}", k.label()));
        }
    }
    Ok("100 rational and 100 quadratic j".into())
}

fn c2() -> Outcome {
    let mut splitting = Vec::new();
    for d in [1u32, 2, 3, 7, 11] {
        let k = field(d);
        let disc = k.disc();
        // Kronecker symbol oracle: 2 splits iff disc = 1 mod 8, 3 splits iff disc = 1 mod 3
        let two_splits = disc.rem_euclid(8) == 1;
        let three_splits = disc.rem_euclid(3) == 1;
        if two_splits != (split_prime(k, 2).len() == 2) || three_splits != (split_prime(k, 3).len() == 2) {
            return Err(format!("splitting of 2, 3 in {}", k.label()));
        }
        let expected = !two_splits && !three_splits;
        let s = splits_quaternion(k, 6).map_err(|e| e.to_string())?;
        let h = splits_quaternion_hilbert(k, 6).map_err(|e| e.to_string())?;
        if s != expected || h != expected {
            return Err(format!("{}: criterion {s}, hilbert {h}, expected {expected}", k.label()));
        }
        if s {
            splitting.push(d);
        }
    }
    Ok(format!("split for d in {splitting:?}"))
}

fn c3() -> Outcome {
    let k = field(3);
    let mut rng = StdRng::seed_from_u64(3);
    let mut checked = 0;
    let mut primes = 0;
    while checked < 20 {
        let j = QuadFrac::from_parts(k, rng.random_range(-60..=60), rng.random_range(-60..=60), rng.random_range(1..=40));
        let Ok(fam) = baba_granath_curve(&j) else { continue };
        let support = stable_bad_support(&fam.igusa_clebsch());
        for p in &support {
            if p.valuation_frac(&j) == 0 {
                return Err(format!("j = {j}: {} in the support with v(j) = 0", p.label()));
            }
        }
        // and conversely every P with v_P(j) != 0 is in the support
        let from_j: BTreeSet<_> = potentially_bad_primes(&j).into_iter().collect();
        if from_j != support.iter().cloned().collect() {
            return Err(format!("j = {j}: support {support:?} vs valuations {from_j:?}"));
        }
        primes += support.len();
        checked += 1;
    }
    Ok(format!("20 j, {primes} bad primes"))
}

fn c4() -> Outcome {
    let mut n = 0;
    for (name, _) in PAIRS {
        let t = trace_table(&curve(name), 500, 500);
        if let Some(b) = t.shape_failures.first() {
            return Err(format!("{name}: {} {}", b.prime.label(), b.reason));
        }
        for r in t.records.iter().filter(|r| r.good) {
            let q = r.q as i64;
            let n2 = r.n2.ok_or_else(|| format!("{name}: no n2 at {}", r.prime.label()))? as i64;
            // L-polynomial from the two point counts
            let s1 = r.n1 as i64 - q - 1;
            let s2 = n2 - q * q - 1;
            let c2 = (s1 * s1 + s2) / 2;
            let from_counts = [1, s1, c2, q * s1, q * q];
            if Some(from_counts) != r.lpoly() || r.a * r.a > 4 * q {
                return Err(format!("{name} at {}: {from_counts:?} vs a = {}", r.prime.label(), r.a));
            }
            n += 1;
        }
    }
    Ok(format!("{n} Euler factors"))
}

fn c5() -> Outcome {
    let published: [(&str, QuadField, [(u64, usize); 2]); 4] = [
        ("c1", field(1), [(5, 1), (37, 2)]),
        ("c2", field(3), [(13, 1), (19, 1)]),
        ("c3", field(3), [(7, 1), (37, 2)]),
        ("c4", field(3), [(3, 1), (13, 1)]),
    ];
    let mut parts = Vec::new();
    for ((name, k, ps), (_, label)) in published.iter().zip(PAIRS) {
        let support = curve(name).bad_prime_support();
        let level: BTreeSet<PrimeIdeal> = newform(label).level.iter().map(|(p, _)| p.clone()).collect();
        for &(n, i) in ps {
            let p = published_prime(*k, n, i);
            if !support.contains(&p) {
                return Err(format!("{name}: {} not in bad support", p.label()));
            }
            if !level.contains(&p) {
                return Err(format!("{name}: {} not in the fixture level", p.label()));
            }
        }
        parts.push(format!("{name} {}", support.len()));
    }
    Ok(format!("support sizes: {}", parts.join(", ")))
}

fn c2_modulus() -> Modulus {
    let k = field(3);
    Modulus::new(k, vec![(published_prime(k, 4, 1), 3), (published_prime(k, 13, 1), 1), (published_prime(k, 19, 1), 1)]).unwrap()
}

fn c6() -> Outcome {
    let m = c2_modulus();
    let g = ray_class_group(&m).map_err(|e| e.to_string())?;
    // |(O/m)^x| = prod N(P)^(e-1) (N(P) - 1)
    let phi: u64 = m.factors().iter().map(|(p, e)| p.norm().pow(e - 1) * (p.norm() - 1)).product();
    if g.residue_unit_count() != phi || g.order() != phi / g.unit_image_order() as u64 {
        return Err(format!("order {} from {} units", g.order(), g.residue_unit_count()));
    }
    if g.invariants() != [2, 2, 12, 36] {
        return Err(format!("invariants {:?}", g.invariants()));
    }
    Ok(format!("{} = Z/2 + Z/2 + Z/12 + Z/36", m.label()))
}

fn span_primes() -> Vec<PrimeIdeal> {
    let k = field(3);
    vec![
        published_prime(k, 7, 1),
        published_prime(k, 7, 2),
        published_prime(k, 13, 2),
        published_prime(k, 19, 2),
        published_prime(k, 25, 1),
    ]
}

fn c2_group() -> Arc<RayClassGroup> {
    Arc::new(ray_class_group(&c2_modulus()).unwrap())
}

fn c7() -> Outcome {
    let g = c2_group();
    let basis = character_basis(&g, 2).map_err(|e| e.to_string())?;
    let s = span_primes();
    let rows: Vec<Vec<u64>> = s.iter().map(|p| basis.iter().map(|c| c.eval(p).unwrap()).collect()).collect();
    // every nonzero quadratic character is nonzero somewhere on S
    for mask in 1u32..1 << basis.len() {
        if rows.iter().all(|r| r.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, v)| v).sum::<u64>() % 2 == 0) {
            return Err(format!("character {mask:04b} vanishes on S"));
        }
    }
    let report = spanning_check(&basis, &s).map_err(|e| e.to_string())?;
    if !report.spans || report.dimension != 4 {
        return Err(format!("rank {} of {}", report.rank, report.dimension));
    }
    Ok(format!("rank 4 on {}", s.iter().map(|p| p.label()).collect::<Vec<_>>().join(" ")))
}

fn c8() -> Outcome {
    let k = field(3);
    let table = trace_table(&curve("c2"), 1000, 0);
    let s = span_primes();
    let p37 = published_prime(k, 37, 1);
    for p in &s {
        let a = table.trace(p).ok_or_else(|| format!("no trace at {}", p.label()))?;
        if a % 2 == 0 {
            return Err(format!("even trace {a} at {}", p.label()));
        }
    }
    let a37 = table.trace(&p37).ok_or("no trace at p37,1")?;
    if a37 % 2 != 0 {
        return Err(format!("odd trace {a37} at {}", p37.label()));
    }
    let g = c2_group();
    let id = identify_cubic_character(&g, parity_oracle(&table), &table.known_primes()).map_err(|e| e.to_string())?;
    let psi: &Character = &id.character;
    if psi.eval(&p37).unwrap() != 0 {
        return Err("psi(p37,1) != 0".into());
    }
    let chi1 = complete_cubic_basis(psi, &p37).map_err(|e| e.to_string())?;
    if chi1.eval(&p37).unwrap() == 0 {
        return Err("chi1(p37,1) = 0".into());
    }
    let r = residual_isomorphism_check(&table, &newform(PAIRS[1].1), &g, &s, &[p37]).map_err(|e| e.to_string())?;
    if r.verdict != "isomorphic-C3" {
        return Err(r.verdict);
    }
    Ok(format!("psi = {:?}, chi1 = {:?}, a(p37,1) = {a37}, {} probes", psi.values(), chi1.values(), id.probes_used))
}

fn c9() -> Outcome {
    let bound = 3000;
    let mut lines = Vec::new();
    let mut failed = false;
    for (name, label) in PAIRS {
        let form = newform(label);
        let table = trace_table_with(&curve(name), bound, 0, true);
        let mut cfg = LivneConfig::for_field(form.field);
        cfg.bound = bound;
        if form.field.d() == 1 {
            cfg.twist_prime = Some(published_prime(form.field, 9, 1));
        }
        let (agree, missing, mismatched) = tally(&table, &form, bound);
        match livne_verify(&table, &form, &cfg) {
            Ok(r) => lines.push(format!("{name}: {} primes agree", r.compared)),
            Err(e) => {
                failed = true;
                lines.push(format!("{name}: {e} [{agree} agree, {mismatched} mismatch, {missing} good primes without eigenvalue]"));
            }
        }
    }
    if failed {
        Err(lines.join("; "))
    } else {
        Ok(lines.join("; "))
    }
}

/// Agreements, missing form values and mismatches at good primes up to `bound`.
fn tally(table: &TraceTable, form: &NewformRecord, bound: u64) -> (usize, usize, usize) {
    let mut out = (0, 0, 0);
    for r in table.records.iter().filter(|r| r.q <= bound && !table.is_bad(&r.prime) && !form.divides_level(&r.prime)) {
        match form.eigenvalues.get(&r.prime) {
            Some(a) if *a == r.a => out.0 += 1,
            Some(_) => out.2 += 1,
            None => out.1 += 1,
        }
    }
    out
}

fn c10() -> Outcome {
    let mut parts = Vec::new();
    for (name, _) in PAIRS {
        let t = trace_table(&curve(name), 1000, 0);
        match genuineness_test(&t).map_err(|e| e.to_string())? {
            Genuineness::Witnessed { prime, conjugate, a, a_conj } => {
                let (x, y) = (t.trace(&prime), t.trace(&conjugate));
                if prime.conjugate() != Some(conjugate.clone()) || x != Some(a) || y != Some(a_conj) || a * a == a_conj * a_conj {
                    return Err(format!("{name}: bad witness at {}", prime.label()));
                }
                parts.push(format!("{name} {} ({a}, {a_conj})", prime.label()));
            }
            Genuineness::Undecided => return Err(format!("{name} undecided")),
        }
    }
    Ok(parts.join(", "))
}

fn c11() -> Outcome {
    for ell in [2u64, 3, 5] {
        let r = verify_ses(ell).map_err(|e| e.to_string())?;
        let l2 = (ell * ell) as usize;
        let ok = r.group_order == (l2 - 1) * l2
            && r.kernel_order == l2
            && r.kernel_abelian
            && r.kernel_exponent == ell
            && r.quotient_order == l2 - 1
            && r.quotient_cyclic
            && r.holds();
        if !ok {
            return Err(format!("ell = {ell}: {r:?}"));
        }
    }
    Ok("ell = 2, 3, 5".into())
}

fn c12() -> Outcome {
    let mut rng = StdRng::seed_from_u64(12);
    let nonzero = |rng: &mut StdRng| loop {
        let x = rng.random_range(-3000i64..3000);
        if x != 0 {
            break BigRational::new(BigInt::from(x), BigInt::from(rng.random_range(1i64..60)));
        }
    };
    for _ in 0..100 {
        let (a, b) = (nonzero(&mut rng), nonzero(&mut rng));
        let prod: i32 = relevant_places(&a, &b).into_iter().map(|v| hilbert_symbol(&a, &b, v)).product();
        if prod != 1 {
            return Err(format!("reciprocity fails for ({a}, {b})"));
        }
    }

    let fields = [1u32, 2, 3, 7, 11].map(field);
    let random_curve = |rng: &mut StdRng| loop {
        let k = fields[rng.random_range(0..5)];
        let c: Vec<QuadFrac> = (0..7).map(|_| QuadFrac::from_parts(k, rng.random_range(-9..=9), rng.random_range(-9..=9), rng.random_range(1..=3))).collect();
        if let Ok(f) = GenusTwoCurve::new(k, c) {
            break f;
        }
    };
    for _ in 0..20 {
        let f = random_curve(&mut rng);
        let k = f.field();
        let lam = QuadFrac::from_parts(k, rng.random_range(1..=7), rng.random_range(-7..=7), 1);
        let ic = f.igusa_clebsch();
        let tw = f.twist(&lam).unwrap().igusa_clebsch();
        for (i, w) in [2u32, 4, 6, 10].iter().enumerate() {
            if tw[i] != ic[i].times(&lam.pow_u(*w)) {
                return Err(format!("I{w} weight under scaling"));
            }
        }
        if GenusTwoCurve::from_json(&f.to_json()).unwrap() != f {
            return Err("curve round trip".into());
        }
        for c in f.coeffs() {
            if parse_element(k, &c.to_string()).unwrap() != *c {
                return Err(format!("element round trip {c}"));
            }
        }
    }

    let g = c2_group();
    let chars: Vec<Character> = character_basis(&g, 2).unwrap().into_iter().chain(character_basis(&g, 3).unwrap()).collect();
    let k = field(3);
    let mut tested = 0;
    while tested < 100 {
        let x = k.elem(rng.random_range(-500..500), rng.random_range(-500..500));
        if g.dlog(&x).is_err() {
            continue;
        }
        for u in k.unit_group() {
            let y = &x * &u;
            if chars.iter().any(|c| c.eval_element(&x).unwrap() != c.eval_element(&y).unwrap()) {
                return Err(format!("character differs on {x} and a unit multiple"));
            }
        }
        tested += 1;
    }

    for (_, label) in PAIRS {
        let form = newform(label);
        if parse_newform(&form.to_json()).unwrap() != form {
            return Err(format!("{label} round trip"));
        }
    }

    for _ in 0..3 {
        let f = random_curve(&mut rng);
        let a = trace_table_with(&f, 300, 100, false);
        let b = trace_table_with(&f, 300, 100, true);
        if a != b || serde_json::to_string(&a.to_document()).unwrap() != serde_json::to_string(&b.to_document()).unwrap() {
            return Err("parallel trace table differs".into());
        }
    }
    Ok("reciprocity 100, covariance 20, characters 100, round trips, parallel tables".into())
}

fn c13() -> Outcome {
    let t = trace_table(&curve("c2"), 3000, 0);
    let good: Vec<i64> = t.records.iter().filter(|r| r.good && !t.is_bad(&r.prime)).map(|r| r.a).collect();
    let odd = good.iter().filter(|a| *a % 2 != 0).count();
    let f = odd as f64 / good.len() as f64;
    if (f - 2.0 / 3.0).abs() > 0.1 {
        return Err(format!("{odd}/{} = {f:.4}", good.len()));
    }
    Ok(format!("{odd}/{} = {f:.4}", good.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 13] = [
        ("conic identities", c1, Duration::from_secs(1)),
        ("splitting criterion", c2, Duration::from_secs(1)),
        ("good-reduction proposition", c3, Duration::from_secs(30)),
        ("QM Euler shape", c4, Duration::from_secs(300)),
        ("conductor support", c5, Duration::from_secs(60)),
        ("ray class group", c6, Duration::from_secs(30)),
        ("spanning set", c7, Duration::from_secs(5)),
        ("residual C3 pipeline", c8, Duration::from_secs(60)),
        ("Livne verification", c9, Duration::from_secs(600)),
        ("genuineness", c10, Duration::from_secs(60)),
        ("group theory", c11, Duration::from_secs(5)),
        ("property suites", c12, Duration::from_secs(60)),
        ("odd-trace density", c13, Duration::from_secs(120)),
    ];
    let mut failures = 0;
    for (i, (name, check, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match result {
            Ok(_) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            r => r,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failures += result.is_err() as usize;
        println!("{tag} {:>2} {name} ({elapsed:.2?}): {detail}", i + 1);
    }
    println!("acceptance: {} passed, {failures} failed", 13 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
