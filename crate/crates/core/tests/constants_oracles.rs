use approx::assert_relative_eq;
use nonlocal_korn::constants::*;
use nonlocal_korn::special::gamma;
use nonlocal_korn::{Error, FracParams};
use proptest::prelude::*;

// mpmath, 30 digits; sigma does not depend on d
const SIGMA_ORACLES: [(f64, f64, f64); 7] = [
    (2.0, 0.75, 0.20735251809737326953628521314),
    (1.0, 0.5, 2.0),
    (3.0, 0.25, 0.00678337195682133079278181736541),
    (1.0, 0.25, 4.0),
    (3.0, 0.75, 0.202162196685466678096611668642),
    (2.0, 0.25, 0.396280469471184404897559229756),
    (1.5, 0.4, 0.515245577242073084222007402166),
];

fn sweep() -> Vec<FracParams> {
    let mut out = Vec::new();
    for d in 1..=3 {
        for p in [1.0, 2.0, 3.0] {
            for s in [0.25, 0.4, 0.6, 0.75] {
                let fp = FracParams::new(d, p, s).unwrap();
                if !fp.ps_is_one() {
                    out.push(fp);
                }
            }
        }
    }
    out
}

#[test]
fn sigma_frozen_values() {
    for (p, s, want) in SIGMA_ORACLES {
        for d in [1, 3] {
            let c = sigma(&FracParams::new(d, p, s).unwrap()).unwrap();
            assert!((c.value - want).abs() <= 1e-9 * want.max(1.0), "p={p} s={s}: {} vs {want}", c.value);
            assert!(c.abs_error <= 1e-8, "abs_error {}", c.abs_error);
            assert!((c.value - want).abs() <= c.abs_error + 1e-12);
        }
    }
}

#[test]
fn sigma_ps_one_is_excluded() {
    let fp = FracParams::new(2, 2.0, 0.5).unwrap();
    match sigma(&fp) {
        Err(Error::ExcludedParameter(m)) => assert!(m.contains("ps = 1")),
        other => panic!("expected exclusion, got {other:?}"),
    }
}

#[test]
fn positivity_and_range_over_sweep() {
    for fp in sweep() {
        for c in constant_table(&fp).unwrap() {
            assert!(c.value.is_finite() && c.abs_error >= 0.0, "{fp} {:?}", c.name);
            match c.name {
                ConstantName::Cp => assert!(c.value > 0.0 && c.value <= 1.0 + 1e-12),
                _ => assert!(c.value > 0.0, "{fp} {:?} = {}", c.name, c.value),
            }
        }
    }
}

#[test]
fn closed_forms_agree_with_quadrature_over_sweep() {
    for fp in sweep() {
        let (e1, e2) = eta_constants(&fp);
        let (q1, q2) = eta_by_quadrature(&fp).unwrap();
        assert!((e1.value - q1.value).abs() <= e1.abs_error + q1.abs_error + 1e-12 * e1.value, "{fp} eta1");
        assert!((e2.value - q2.value).abs() <= e2.abs_error + q2.abs_error + 1e-12 * e2.value, "{fp} eta2");
        let (g1, g2, g) = gamma_constants(&fp);
        let q = gamma2_by_quadrature(&fp);
        assert!((g2.value - q.value).abs() <= g2.abs_error + q.abs_error + 1e-12 * g2.value, "{fp} gamma2");
        let q = gamma1_by_quadrature(&fp).unwrap();
        assert!((g1.value - q.value).abs() <= g1.abs_error + q.abs_error + 1e-12 * g1.value, "{fp} gamma1");
        assert_relative_eq!(g.value, g1.value * g2.value, max_relative = 1e-15);
    }
}

#[test]
fn one_dimensional_conventions() {
    let fp = FracParams::new(1, 2.0, 0.4).unwrap();
    let (e1, e2) = eta_constants(&fp);
    assert_eq!((e1.value, e2.value), (1.0, 1.0));
    assert_eq!(gamma_constants(&fp).0.value, 1.0);
    assert_eq!(f_of_v(&fp, &[-1.5]).unwrap().value, 1.5f64.powi(2));
}

#[test]
fn gamma2_is_sixteen_over_105() {
    let fp = FracParams::new(2, 2.0, 0.75).unwrap();
    let (_, g2, _) = gamma_constants(&fp);
    assert!((g2.value - 16.0 / 105.0).abs() <= 1e-10 * 16.0 / 105.0);
    let q = gamma2_by_quadrature(&fp);
    assert!((q.value - 16.0 / 105.0).abs() <= 1e-8 * 16.0 / 105.0);
}

#[test]
fn eta2_and_f_of_e1_match_beta_identity() {
    let fp = FracParams::new(2, 2.0, 0.25).unwrap();
    let want = gamma(1.5) * gamma(0.75) / gamma(2.25);
    let (e1, e2) = eta_constants(&fp);
    assert_relative_eq!(e2.value, want, max_relative = 1e-12);
    assert_relative_eq!(f_of_v(&fp, &[1.0, 0.0]).unwrap().value, want, max_relative = 1e-9);
    assert_relative_eq!(f_of_v(&fp, &[0.0, 1.0]).unwrap().value, e1.value, max_relative = 1e-12);
}

#[test]
fn f_of_v_with_small_tangential_part_is_near_the_normal_limit() {
    // the first-order term in |v′| is odd, so the gap is O(|v′|²)
    let fp = FracParams::new(2, 3.0, 0.4).unwrap();
    let (e1, _) = eta_constants(&fp);
    for (t, n) in [(-0.000559605924800309, -1.9845701141167937), (1e-6, 2.5), (3e-4, -0.7)] {
        let f = f_of_v(&fp, &[t, n]).unwrap().value;
        let limit = n.abs().powf(3.0) * e1.value;
        assert_relative_eq!(f, limit, max_relative = 1e-5);
    }
}

#[test]
fn j_kernel_closed_form_and_quadrature() {
    let fp = FracParams::new(2, 2.0, 0.25).unwrap();
    let (_, _, g) = gamma_constants(&fp);
    assert_relative_eq!(j_kernel(&fp, 1.0).unwrap().value, g.value, max_relative = 1e-15);
    let q = j_kernel_by_quadrature(&fp, 1.0).unwrap();
    assert!((q - g.value).abs() < 1e-4 * g.value, "{q} vs {}", g.value);
    for y in [0.3, 1.0, 4.0] {
        let r = j_kernel(&fp, 2.0 * y).unwrap().value / j_kernel(&fp, y).unwrap().value;
        assert_relative_eq!(r, 2f64.powf(-fp.ps()), max_relative = 1e-13);
    }
    assert!(matches!(j_kernel(&fp, 0.0), Err(Error::InvalidParameter(_))));
}

#[test]
fn c_p_values_and_stationarity() {
    let (_, c2) = c_p_minimizer(2.0).unwrap();
    assert!((c2 - 1.0).abs() < 1e-9);
    let (tau, c3) = c_p_minimizer(3.0).unwrap();
    assert!((c3 - (2.0 - 2f64.sqrt())).abs() < 1e-6, "{c3}");
    // g'(τ) = −p(1−τ)^{p−1} − pτ^{p−1} + p(p−1)τ^{p−2} vanishes at τ = 1 − 1/√2
    let ts = 1.0 - 0.5f64.sqrt();
    let dg = -3.0 * (1.0 - ts).powi(2) - 3.0 * ts * ts + 6.0 * ts;
    assert!(dg.abs() < 1e-14);
    assert!((tau - ts).abs() < 1e-6);
    let c = c_p(2.5).unwrap().value;
    assert!(c > 0.0 && c <= 1.0);
    assert!(matches!(c_p(1.5), Err(Error::ExcludedParameter(_))));
}

fn any_params() -> impl Strategy<Value = FracParams> {
    (2usize..=3, prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0)], prop_oneof![Just(0.25), Just(0.4), Just(0.6), Just(0.75)])
        .prop_map(|(d, p, s)| FracParams::new(d, p, s).unwrap())
        .prop_filter("ps = 1", |fp| !fp.ps_is_one())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn f_of_v_corollary_lower_bound(fp in any_params(), v in prop::collection::vec(-3.0f64..3.0, 3)) {
        let d = fp.d();
        let v = &v[..d];
        let (e1, e2) = eta_constants(&fp);
        let p = fp.p();
        let tan = v[..d - 1].iter().map(|x| x * x).sum::<f64>().sqrt();
        let f = f_of_v(&fp, v).unwrap();
        let lower = 0.5 * e1.value * v[d - 1].abs().powf(p) + 0.5 * e2.value * tan.powf(p);
        prop_assert!(f.value + f.abs_error >= lower * (1.0 - 1e-12), "{} < {}", f.value, lower);
    }

    #[test]
    fn f_of_v_is_even_and_homogeneous(fp in any_params(), v in prop::collection::vec(-3.0f64..3.0, 3), lam in 0.1f64..4.0) {
        let v = &v[..fp.d()];
        let f = f_of_v(&fp, v).unwrap().value;
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let scaled: Vec<f64> = v.iter().map(|x| lam * x).collect();
        let tol = 1e-8 * f.max(1e-8);
        prop_assert!((f_of_v(&fp, &neg).unwrap().value - f).abs() <= tol);
        prop_assert!((f_of_v(&fp, &scaled).unwrap().value - lam.powf(fp.p()) * f).abs() <= tol * lam.powf(fp.p()).max(1.0));
    }

    #[test]
    fn f_of_v_rotation_invariant_in_tangential_part(v in prop::collection::vec(-3.0f64..3.0, 3), theta in 0.0f64..6.3) {
        let fp = FracParams::new(3, 2.0, 0.4).unwrap();
        let (c, s) = (theta.cos(), theta.sin());
        let r = [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]];
        let a = f_of_v(&fp, &v).unwrap().value;
        let b = f_of_v(&fp, &r).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-9));
    }
}
