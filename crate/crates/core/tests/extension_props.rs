use std::sync::Arc;

use nonlocal_korn::extension::{
    boundedness_parts, cross_boundary_lipschitz, decompose_seminorm, extend, one_sided_normal_derivatives,
    trace_continuity_constants, trace_mismatch,
};
use nonlocal_korn::field::{field_library, half_space_library, CustomField, Smoothness, SupportBox};
use nonlocal_korn::quad::{seminorm_s, QuadConfig};
use nonlocal_korn::{DomainTag, Error, FieldSpec, FracParams, VectorField};
use proptest::prelude::*;

/// `u(x) = cos(x₁)(b + c·x_d)`: trace and one-sided normal derivatives are known exactly.
fn linear_trace_field(b: [f64; 2], c: [f64; 2]) -> FieldSpec {
    FieldSpec::custom(
        "linear_trace",
        2,
        CustomField {
            eval: Arc::new(move |x, o| {
                let w = (x[0]).cos();
                o[0] = w * (b[0] + c[0] * x[1]);
                o[1] = w * (b[1] + c[1] * x[1]);
            }),
            gradient: None,
            support: Some(SupportBox::new(vec![-1.0, 0.0], vec![1.0, 1.0])),
            smoothness: Smoothness::Lipschitz,
        },
        DomainTag::HalfSpace,
    )
    .unwrap()
}

#[test]
fn library_traces_match() {
    for d in 1..=3 {
        for u in half_space_library(d) {
            let e = extend(&u).unwrap();
            assert!(trace_mismatch(&e, 10_000, 1) <= 1e-12, "{}", u.id());
        }
    }
}

#[test]
fn nonzero_trace_is_continuous() {
    let u = linear_trace_field([0.7, -1.3], [2.0, 0.5]);
    let e = extend(&u).unwrap();
    assert!(trace_mismatch(&e, 10_000, 2) <= 1e-12);
    // |U(x′, −h) − U(x′, h)|/h stays bounded as h → 0
    let hs = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
    let ks = trace_continuity_constants(&e, &hs, 200, 3);
    assert!(ks.iter().all(|k| k.is_finite() && *k < 20.0), "{ks:?}");
    let spread = ks.iter().cloned().fold(0.0, f64::max) / ks.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 1.5, "{ks:?}");
}

#[test]
fn tangential_derivative_continues_and_normal_flips_by_minus_seven() {
    let (c1, c2) = (2.0, 0.5);
    let u = linear_trace_field([0.7, -1.3], [c1, c2]);
    let e = extend(&u).unwrap();
    for xp in [-0.6, 0.0, 0.4] {
        let w = f64::cos(xp);
        let (below, above) = one_sided_normal_derivatives(&e, &[xp], 1e-6);
        assert!((above[0] - w * c1).abs() < 1e-6);
        assert!((above[1] - w * c2).abs() < 1e-6);
        assert!((below[0] - w * c1).abs() < 1e-6, "{below:?}");
        assert!((below[1] + 7.0 * w * c2).abs() < 1e-6, "{below:?}");
    }
}

#[test]
fn extension_is_lipschitz_across_the_boundary() {
    for d in 1..=3 {
        for u in half_space_library(d) {
            let lip = cross_boundary_lipschitz(&extend(&u).unwrap(), 5000, 4);
            assert!(lip.is_finite(), "{}", u.id());
            if let Some(l) = u.lipschitz_bound() {
                // the normal component picks up 2 + 3·3 from the chain rule
                assert!(lip <= 12.0 * l, "{}: {lip} vs {l}", u.id());
            }
        }
    }
}

#[test]
fn decomposition_adds_up() {
    let u = field_library(2).into_iter().find(|f| f.id() == "bump_near_boundary").unwrap();
    let params = FracParams::new(2, 2.0, 0.4).unwrap();
    let cfg = QuadConfig::default().with_samples(200_000).with_seed(9);
    let e = extend(&u).unwrap();
    let parts = decompose_seminorm(&e, &params, &cfg).unwrap();
    let whole = seminorm_s(&e, &DomainTag::WholeSpace, &params, &cfg).unwrap();
    let total = parts.total();
    let se = total.std_error.hypot(whole.std_error);
    assert!((total.value - whole.value).abs() <= 3.0 * se, "{} vs {} (se {se})", total.value, whole.value);

    // on the upper half E u is u
    let half = seminorm_s(&u, &DomainTag::HalfSpace, &params, &cfg).unwrap();
    let se = parts.plus.std_error.hypot(half.std_error);
    assert!((parts.plus.value - half.value).abs() <= 3.0 * se);
    assert!(parts.minus.value > 0.0 && parts.mixed.value > 0.0);
}

#[test]
fn extension_enlarges_the_seminorm() {
    let params = FracParams::new(2, 2.0, 0.6).unwrap();
    let cfg = QuadConfig::default().with_samples(100_000).with_seed(10);
    for u in half_space_library(2) {
        let (num, den) = boundedness_parts(&u, &params, &cfg).unwrap();
        let r = num.value / den.value;
        assert!(r > 1.0 && r.is_finite(), "{}: {r}", u.id());
    }
}

#[test]
fn unsupported_inputs_are_rejected() {
    let lib = field_library(2);
    let g = lib.iter().find(|f| f.id() == "gaussian_iso").unwrap();
    assert!(matches!(extend(g), Err(Error::DomainError(_))));
    let sk = lib.iter().find(|f| f.id() == "skew_affine").unwrap();
    assert!(extend(sk).is_err());
    let params = FracParams::new(2, 2.0, 0.5).unwrap();
    let u = &half_space_library(2)[0];
    assert!(boundedness_parts(u, &params, &QuadConfig::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reflection_commutes_with_tangential_shifts(shift in -1.0f64..1.0, xt in -2.0f64..2.0, xd in -2.0f64..2.0) {
        let u = field_library(2).into_iter().find(|f| f.id() == "bump_mid_modulated").unwrap();
        let moved = u.translated(&[shift, 0.0]).unwrap();
        let (a, b) = (extend(&u).unwrap(), extend(&moved).unwrap());
        let va = a.eval(&[xt - shift, xd]);
        let vb = b.eval(&[xt, xd]);
        for i in 0..2 {
            prop_assert!((va[i] - vb[i]).abs() <= 1e-12 * (1.0 + va[i].abs()));
        }
    }

    #[test]
    fn extension_is_linear_in_the_trace_data(
        b in prop::array::uniform2(-2.0f64..2.0), c in prop::array::uniform2(-2.0f64..2.0),
        k in -3.0f64..3.0, xt in -1.0f64..1.0, t in 0.0f64..0.3
    ) {
        let e1 = extend(&linear_trace_field(b, c)).unwrap();
        let ek = extend(&linear_trace_field([k * b[0], k * b[1]], [k * c[0], k * c[1]])).unwrap();
        let x = [xt, -t];
        let (v1, vk) = (e1.eval(&x), ek.eval(&x));
        for i in 0..2 {
            prop_assert!((k * v1[i] - vk[i]).abs() <= 1e-12 * (1.0 + vk[i].abs()));
        }
    }
}
