use nonlocal_korn::constants::{c_p, f_of_v};
use nonlocal_korn::field::{field_library, half_space_library, scale_field};
use nonlocal_korn::quad::QuadConfig;
use nonlocal_korn::spectral::spectral_constants;
use nonlocal_korn::verify::{
    basic_gap, default_eps_sequence, ground_state_limit_check, hardy_check, hardy_remainder_check, hardy_split_check,
    job_seed, korn_band_check, phi_direct, phi_reduced, pointwise_inequalities, refined_gap, scaling_check, sweep,
    VerificationReport, SUMMARY_CSV_HEADER,
};
use nonlocal_korn::{DomainTag, Error, FieldSpec, FracParams};
use proptest::prelude::*;

fn lib(d: usize, id: &str) -> FieldSpec {
    field_library(d).into_iter().find(|f| f.id() == id).unwrap()
}

fn detail(r: &VerificationReport, key: &str) -> f64 {
    r.details[key].as_f64().unwrap()
}

#[test]
fn ground_state_one_dimensional_limit_is_minus_sigma() {
    let params = FracParams::new(1, 2.0, 0.75).unwrap();
    let r = ground_state_limit_check(&params, &[1.0], &[1.0], &default_eps_sequence()).unwrap();
    assert!(r.passed, "{}", r.to_json_line().unwrap());
    let fv = f_of_v(&params, &[1.0]).unwrap().value;
    let limit = detail(&r, "limit");
    assert!((limit / fv + 0.20735251809737326953628521314).abs() < 1e-12, "{limit}");
    assert_eq!(r.details["monotone_tail"], serde_json::json!(true));
}

#[test]
fn ground_state_limit_scales_with_height() {
    for (d, p, s) in [(2, 2.0, 0.25), (2, 1.5, 0.4), (3, 3.0, 0.75), (1, 1.0, 0.25)] {
        let params = FracParams::new(d, p, s).unwrap();
        let mut x = vec![0.3; d];
        let mut v = vec![0.0; d];
        v[0] = 0.6;
        v[d - 1] = 0.8;
        if d == 1 {
            v[0] = 1.0;
        }
        x[d - 1] = 0.5;
        let a = ground_state_limit_check(&params, &x, &v, &default_eps_sequence()).unwrap();
        x[d - 1] = 1.0;
        let b = ground_state_limit_check(&params, &x, &v, &default_eps_sequence()).unwrap();
        assert!(a.passed && b.passed);
        let (la, lb) = (detail(&a, "limit"), detail(&b, "limit"));
        assert!(la < 0.0 && lb < 0.0);
        let want = 2f64.powf(params.ps() - params.alpha() * (p - 1.0));
        assert!((la / lb - want).abs() < 1e-12 * want, "d={d} p={p} s={s}: {} vs {want}", la / lb);
    }
}

#[test]
fn ground_state_rejects_bad_input() {
    let params = FracParams::new(2, 2.0, 0.25).unwrap();
    let eps = default_eps_sequence();
    assert!(ground_state_limit_check(&params, &[0.0, -1.0], &[0.0, 1.0], &eps).is_err());
    assert!(ground_state_limit_check(&params, &[0.0, 1.0], &[1.0], &eps).is_err());
    assert!(ground_state_limit_check(&params, &[0.0, 1.0], &[0.0, 1.0], &[0.1, 0.2]).is_err());
    let excluded = FracParams::new(2, 2.0, 0.5).unwrap();
    assert!(ground_state_limit_check(&excluded, &[0.0, 1.0], &[0.0, 1.0], &eps).is_err());
}

#[test]
fn short_eps_sequence_is_not_converged_at_large_s() {
    let params = FracParams::new(1, 2.0, 0.75).unwrap();
    let eps: Vec<f64> = (1..=12).map(|k| 2f64.powi(-k)).collect();
    let r = ground_state_limit_check(&params, &[1.0], &[1.0], &eps).unwrap();
    assert!(!r.passed);
    assert!(detail(&r, "distance_relative") > 1e-4);
}

#[test]
fn scalar_inequalities_have_their_equality_cases() {
    for p in [1.0, 1.5, 2.0, 2.5, 3.0] {
        for t in [0.0, 0.1, 0.5, 0.9, 1.0] {
            assert!(basic_gap(1.0, t, p).0.abs() < 1e-14, "a = 1, t = {t}, p = {p}");
        }
        for a in [-3.0, -0.5, 0.0, 0.7, 4.0] {
            assert!(basic_gap(a, 0.0, p).0.abs() < 1e-12, "t = 0, a = {a}, p = {p}");
        }
        if p >= 2.0 {
            let cp = c_p(p).unwrap().value;
            assert!(refined_gap(1.0, 0.4, p, cp).0.abs() < 1e-14);
        }
    }
}

#[test]
fn pointwise_scan_finds_no_violations() {
    for p in [1.0, 1.5, 2.0, 3.0] {
        let r = pointwise_inequalities(p, 20_000, 7).unwrap();
        assert!(r.passed, "{}", r.to_json_line().unwrap());
        assert_eq!(r.lhs.value, 0.0);
        assert!(r.params.is_none());
        assert_eq!(r.details["refined"].is_null(), p < 2.0);
    }
    assert!(pointwise_inequalities(0.5, 10, 0).is_err());
}

#[test]
fn hardy_accepts_zero_and_scalar_embedded_fields() {
    let zero = FieldSpec::bump("zero", vec![0.0, 1.0], vec![0.5, 0.5], vec![0.0, 0.0], DomainTag::HalfSpace).unwrap();
    let cfg = QuadConfig::default().with_samples(50_000);
    for (p, s) in [(1.0, 0.25), (2.0, 0.6), (3.0, 0.75)] {
        let params = FracParams::new(2, p, s).unwrap();
        let r = hardy_check(&zero, &params, &cfg).unwrap();
        assert!(r.passed);
        assert_eq!((r.lhs.value, r.rhs.value), (0.0, 0.0));

        // φ(x)e₁
        let u = lib(2, "separable_tangential");
        let r = hardy_check(&u, &params, &cfg).unwrap();
        assert!(r.passed && r.margin > 0.0, "{}", r.to_json_line().unwrap());
        let r = hardy_split_check(&u, &params, &cfg).unwrap();
        assert!(r.passed, "{}", r.to_json_line().unwrap());
    }
}

#[test]
fn remainder_needs_p_at_least_two() {
    let u = lib(2, "bump_far");
    let params = FracParams::new(2, 1.5, 0.4).unwrap();
    let r = hardy_remainder_check(&u, &params, &QuadConfig::default().with_samples(1000), None);
    assert!(matches!(r, Err(Error::ExcludedParameter(_))));
}

#[test]
fn korn_band_brackets_the_ratio() {
    let sc = spectral_constants(&FracParams::new(2, 2.0, 0.4).unwrap()).unwrap();
    let u = lib(2, "gaussian_iso");
    let rs = korn_band_check(&u, &sc, &QuadConfig::default().with_samples(200_000)).unwrap();
    assert_eq!(rs.len(), 2);
    for r in &rs {
        assert!(r.passed, "{}", r.to_json_line().unwrap());
    }
    let ratio = detail(&rs[0], "ratio");
    assert!(detail(&rs[0], "band_lower") <= ratio && ratio <= detail(&rs[0], "band_upper"));
}

#[test]
fn scaling_is_exact_at_lambda_one_and_holds_elsewhere() {
    let u = lib(2, "bump_mid_modulated");
    let params = FracParams::new(2, 2.0, 0.25).unwrap();
    let cfg = QuadConfig::default().with_samples(100_000);
    let r = scaling_check(&u, 1.0, &params, &cfg).unwrap();
    assert_eq!(r.lhs, r.rhs);
    assert!(r.passed);
    for lam in [2.0, 3.0] {
        assert!(scaling_check(&u, lam, &params, &cfg).unwrap().passed);
    }
    assert!(scale_field(&u, 0.0).is_err());
}

#[test]
fn reports_are_byte_reproducible() {
    let u = lib(3, "bump_near_boundary");
    let params = FracParams::new(3, 2.0, 0.6).unwrap();
    let cfg = QuadConfig::default().with_samples(40_000).with_seed(job_seed("hardy", u.id(), 42));
    let a = hardy_check(&u, &params, &cfg).unwrap().to_json_line().unwrap();
    let b = hardy_check(&u, &params, &cfg).unwrap().to_json_line().unwrap();
    assert_eq!(a, b);
    let back: VerificationReport = serde_json::from_str(&a).unwrap();
    assert_eq!(back.to_json_line().unwrap(), a);
    let p1 = pointwise_inequalities(2.0, 500, 3).unwrap().to_json_line().unwrap();
    let p2 = pointwise_inequalities(2.0, 500, 3).unwrap().to_json_line().unwrap();
    assert_eq!(p1, p2);
}

#[test]
fn csv_rows_match_the_header() {
    let params = FracParams::new(1, 2.0, 0.25).unwrap();
    let u = &half_space_library(1)[0];
    let r = hardy_check(u, &params, &QuadConfig::default().with_samples(5000)).unwrap();
    let cols = SUMMARY_CSV_HEADER.split(',').count();
    assert_eq!(r.csv_row().split(',').count(), cols);
    let pw = pointwise_inequalities(3.0, 10, 0).unwrap();
    assert_eq!(pw.csv_row().split(',').count(), cols);
    assert!(pw.csv_row().starts_with("pointwise,,,3"));
}

#[test]
fn named_sweeps() {
    assert_eq!(sweep("default").unwrap().len(), 36);
    assert_eq!(sweep("korn").unwrap().len(), 24);
    assert!(sweep("korn").unwrap().iter().all(|fp| fp.p() == 2.0));
    assert!(!sweep("quick").unwrap().is_empty());
    assert!(matches!(sweep("nope"), Err(Error::InvalidParameter(_))));
}

#[test]
fn margin_sign_follows_pass() {
    let u = lib(2, "bump_far");
    let cfg = QuadConfig::default().with_samples(30_000);
    for fp in sweep("quick").unwrap().into_iter().filter(|fp| fp.d() == 2) {
        let r = hardy_check(&u, &fp, &cfg).unwrap();
        assert_eq!(r.passed, r.margin >= -3.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn basic_gap_is_nonnegative(a in -10.0f64..10.0, t in 0.0f64..=1.0, p in 1.0f64..4.0) {
        let (g, scale) = basic_gap(a, t, p);
        prop_assert!(g >= -1e-12 * scale.max(1.0), "a={} t={} p={} gap={}", a, t, p, g);
    }

    #[test]
    fn refined_gap_is_nonnegative(a in -10.0f64..10.0, t in 0.0f64..=1.0, p in 2.0f64..4.0) {
        let cp = c_p(p).unwrap().value;
        let (g, scale) = refined_gap(a, t, p, cp);
        prop_assert!(g >= -1e-12 * scale.max(1.0), "a={} t={} p={} gap={}", a, t, p, g);
    }

    #[test]
    fn phi_reduction_agrees_with_definition(
        ux in prop::array::uniform2(-2.0f64..2.0), uy in prop::array::uniform2(-2.0f64..2.0),
        x in prop::array::uniform2(0.05f64..2.0), y in prop::array::uniform2(0.05f64..2.0),
        s in 0.1f64..0.9, p in 1.0f64..3.0
    ) {
        prop_assume!(((p * s) - 1.0).abs() > 1e-3);
        let alpha = (p * s - 1.0) / p;
        let (g, scale) = phi_direct(&ux, &uy, &x, &y, alpha, p);
        prop_assert!(g >= -1e-12 * scale.max(1.0));
        if let Some(r) = phi_reduced(&ux, &uy, &x, &y, alpha, p) {
            prop_assert!((r - g).abs() <= 1e-9 * scale.max(1.0), "{} vs {}", r, g);
        }
    }
}
