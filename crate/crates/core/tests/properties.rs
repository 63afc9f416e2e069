use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use qmsurf::algebra::Ring;
use qmsurf::counting::trace_table_with;
use qmsurf::curve::GenusTwoCurve;
use qmsurf::livne::{character_basis, ray_class_group, Character, Modulus, RayClassGroup};
use qmsurf::newform::{parse_newform, parse_newform_file};
use qmsurf::quadfield::{parse_element, QuadElement, QuadField, QuadFrac};
use qmsurf::shimura::{hilbert_symbol, relevant_places};

fn field(d: u32) -> QuadField {
    QuadField::new(d).unwrap()
}

fn any_field() -> impl Strategy<Value = QuadField> {
    prop::sample::select(vec![1u32, 2, 3, 7, 11]).prop_map(field)
}

fn frac(k: QuadField, (a, b, den): (i64, i64, i64)) -> QuadFrac {
    QuadFrac::from_parts(k, a, b, den)
}

fn coeff() -> impl Strategy<Value = (i64, i64, i64)> {
    (-9i64..=9, -9i64..=9, 1i64..=4)
}

fn sextic() -> impl Strategy<Value = Vec<(i64, i64, i64)>> {
    prop::collection::vec(coeff(), 7)
}

fn curve(k: QuadField, c: &[(i64, i64, i64)]) -> Option<GenusTwoCurve> {
    GenusTwoCurve::new(k, c.iter().map(|&t| frac(k, t)).collect()).ok()
}

fn pow(x: &QuadFrac, e: u32) -> QuadFrac {
    (0..e).fold(QuadFrac::from_int(x.field(), 1), |acc, _| acc.times(x))
}

/// Ascending coefficients of `f(x + t)`.
fn shift(c: &[QuadFrac], t: &QuadFrac) -> Vec<QuadFrac> {
    let k = t.field();
    let mut out = vec![QuadFrac::from_int(k, 0); c.len()];
    for (i, ci) in c.iter().enumerate() {
        let mut binom = 1i64;
        for j in 0..=i {
            // C(i, j) x^j t^(i-j)
            out[j] = out[j].plus(&ci.times(&pow(t, (i - j) as u32)).scale_int(binom));
            binom = binom * (i - j) as i64 / (j + 1) as i64;
        }
    }
    out
}

const WEIGHTS: [u32; 4] = [1, 2, 3, 5];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn hilbert_reciprocity(a in (-2000i64..2000).prop_filter("nonzero", |x| *x != 0),
                           b in (-2000i64..2000).prop_filter("nonzero", |x| *x != 0),
                           da in 1i64..50, db in 1i64..50) {
        let a = BigRational::new(BigInt::from(a), BigInt::from(da));
        let b = BigRational::new(BigInt::from(b), BigInt::from(db));
        let product: i32 = relevant_places(&a, &b).into_iter().map(|v| hilbert_symbol(&a, &b, v)).product();
        prop_assert_eq!(product, 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn igusa_clebsch_covariance(k in any_field(), c in sextic(), lam in coeff(), mu in coeff(), t in coeff()) {
        let Some(f) = curve(k, &c) else { return Ok(()) };
        let (lam, mu, t) = (frac(k, lam), frac(k, mu), frac(k, t));
        prop_assume!(!lam.is_zero() && !mu.is_zero());
        let ic = f.igusa_clebsch();

        // the invariants are homogeneous of degree 2, 4, 6, 10 in the coefficients
        let scaled = f.twist(&lam).unwrap().igusa_clebsch();
        for i in 0..4 {
            prop_assert_eq!(scaled[i].clone(), ic[i].times(&pow(&lam, 2 * WEIGHTS[i])));
        }

        // x -> mu x has determinant mu and weight 3 per degree
        let sub: Vec<QuadFrac> = f.coeffs().iter().enumerate().map(|(i, ci)| ci.times(&pow(&mu, i as u32))).collect();
        let sub = GenusTwoCurve::new(k, sub).unwrap().igusa_clebsch();
        for i in 0..4 {
            prop_assert_eq!(sub[i].clone(), ic[i].times(&pow(&mu, 6 * WEIGHTS[i])));
        }

        // translations act with determinant one
        let moved = GenusTwoCurve::new(k, shift(f.coeffs(), &t)).unwrap().igusa_clebsch();
        prop_assert_eq!(moved, ic);
    }
}

fn c2_group() -> &'static Arc<RayClassGroup> {
    static G: OnceLock<Arc<RayClassGroup>> = OnceLock::new();
    G.get_or_init(|| Arc::new(ray_class_group(&Modulus::parse(field(3), "2^3,3+w,-5+2*w").unwrap()).unwrap()))
}

fn c2_characters() -> &'static (Vec<Character>, Vec<Character>) {
    static B: OnceLock<(Vec<Character>, Vec<Character>)> = OnceLock::new();
    B.get_or_init(|| (character_basis(c2_group(), 2).unwrap(), character_basis(c2_group(), 3).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn characters_are_well_defined_on_ideals(a in -400i64..400, b in -400i64..400) {
        let k = field(3);
        let x = k.elem(a, b);
        let g = c2_group();
        prop_assume!(g.dlog(&x).is_ok());
        let (quad, cubic) = c2_characters();
        for u in k.unit_group() {
            let y = &x * &u;
            for chi in quad.iter().chain(cubic) {
                prop_assert_eq!(chi.eval_element(&x).unwrap(), chi.eval_element(&y).unwrap());
            }
        }
    }

    #[test]
    fn dlog_is_multiplicative(a in -200i64..200, b in -200i64..200, c in -200i64..200, d in -200i64..200) {
        let k = field(3);
        let g = c2_group();
        let (x, y) = (k.elem(a, b), k.elem(c, d));
        let (Ok(lx), Ok(ly)) = (g.dlog(&x), g.dlog(&y)) else { return Ok(()) };
        let lxy = g.dlog(&(&x * &y)).unwrap();
        for (i, n) in g.invariants().iter().enumerate() {
            prop_assert_eq!(lxy[i], (lx[i] + ly[i]) % n);
        }
    }

    #[test]
    fn elements_round_trip_through_text(k in any_field(), t in coeff()) {
        let x = frac(k, t);
        prop_assert_eq!(parse_element(k, &x.to_string()).unwrap(), x);
    }

    #[test]
    fn curves_round_trip_through_json(k in any_field(), c in sextic()) {
        let Some(f) = curve(k, &c) else { return Ok(()) };
        let back = GenusTwoCurve::from_json(&f.to_json()).unwrap();
        prop_assert_eq!(back.hash(), f.hash());
        prop_assert_eq!(back, f);
    }
}

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn newforms_round_trip_through_json(seed in prop::collection::vec(-1i64..=1, 15)) {
        let mut form = parse_newform_file(&fixture("newforms/2.0.3.1-61009.1-a.json")).unwrap();
        // perturb within the Hecke bound
        for ((p, a), s) in form.eigenvalues.iter_mut().zip(&seed) {
            let cap = (2.0 * (p.norm() as f64).sqrt()).floor() as i64;
            *a = (*a + s).clamp(-cap, cap);
        }
        let back = parse_newform(&form.to_json()).unwrap();
        prop_assert_eq!(back, form);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn parallel_trace_tables_are_deterministic(k in any_field(), c in sextic()) {
        let Some(f) = curve(k, &c) else { return Ok(()) };
        let serial = trace_table_with(&f, 150, 60, false);
        let parallel = trace_table_with(&f, 150, 60, true);
        prop_assert_eq!(
            serde_json::to_string(&serial.to_document()).unwrap(),
            serde_json::to_string(&parallel.to_document()).unwrap()
        );
        prop_assert_eq!(parallel, serial);
    }
}

#[test]
fn element_multiplication_is_the_field_product() {
    // spot check the operator used above against the Ring product
    let k = field(3);
    let (x, y) = (k.elem(3, -2), k.elem(-1, 5));
    let prod: QuadElement = &x * &y;
    assert_eq!(QuadFrac::from(prod), QuadFrac::from(x).times(&QuadFrac::from(y)));
}
