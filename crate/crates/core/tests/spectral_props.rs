use nalgebra::{DMatrix, SymmetricEigen};
use nonlocal_korn::field::whole_space_library;
use nonlocal_korn::quad::{seminorm_s, seminorm_w, QuadConfig};
use nonlocal_korn::spectral::*;
use nonlocal_korn::{DomainTag, FracParams};
use proptest::prelude::*;

fn sc(d: usize, s: f64) -> SpectralConstants {
    spectral_constants(&FracParams::new(d, 2.0, s).unwrap()).unwrap()
}

#[test]
fn longitudinal_plus_transverse_is_kappa() {
    for d in 1..=3 {
        for s in [0.25, 0.5, 0.75] {
            let c = sc(d, s);
            let m = (d - 1) as f64;
            let lhs = c.l1.value + m * c.l2.as_ref().map_or(0.0, |l| l.value);
            let err = c.l1.abs_error + m * c.l2.as_ref().map_or(0.0, |l| l.abs_error) + c.kappa.abs_error;
            assert!((lhs - c.kappa.value).abs() <= 3.0 * err, "d={d} s={s}: {lhs} vs {}", c.kappa.value);
            let kc = kappa_closed_form(d, s);
            assert!((c.kappa.value - kc).abs() <= 1e-9 * kc, "d={d} s={s}");
        }
    }
}

#[test]
fn kappa_stays_finite_near_the_endpoints() {
    for d in 1..=3 {
        for s in [0.01, 0.05, 0.93, 0.95, 0.99] {
            let c = sc(d, s);
            let kc = kappa_closed_form(d, s);
            assert!(c.kappa.value.is_finite() && c.l1.value.is_finite(), "d={d} s={s}");
            assert!((c.kappa.value - kc).abs() <= 1e-8 * kc, "d={d} s={s}: {} vs {kc}", c.kappa.value);
        }
    }
}

#[test]
fn band_closed_form() {
    for d in 1..=3 {
        for s in [0.1, 0.25, 0.75, 0.9] {
            let (lo, hi) = korn_bounds(&sc(d, s)).unwrap();
            let df = d as f64;
            // κ/l₁ = (d+2s)/(1+2s), κ/l₂ = d+2s; no transverse direction when d = 1
            let (a, b) = if d == 1 { (1.0, 1.0) } else { ((df + 2.0 * s) / (1.0 + 2.0 * s), df + 2.0 * s) };
            assert!((lo - a.min(b)).abs() < 1e-9 * b && (hi - a.max(b)).abs() < 1e-9 * b, "d={d} s={s}: [{lo}, {hi}]");
        }
    }
}

#[test]
fn one_dimensional_parseval_constant() {
    // |u|²_W = 2κ∫(2π|ξ|)^{2s}|û|²; for s = 1/2 the prefactor 2κ(1, 1/2) is 2π
    assert!((2.0 * kappa_closed_form(1, 0.5) - 2.0 * std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn symbol_eigenvalues_match_nalgebra() {
    let c = sc(3, 0.3);
    let m = symbol(&c, &[0.4, -1.1, 0.7]).unwrap();
    let a = DMatrix::from_fn(3, 3, |i, j| m.matrix[i][j]);
    let mut got: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    got.sort_by(f64::total_cmp);
    let (want, v) = m.eigen();
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-12 * w.abs().max(1.0));
    }
    assert!((m.quadratic_form(&v) - m.longitudinal).abs() < 1e-12 * m.longitudinal);
}

#[test]
fn symbol_monte_carlo_diagnostic() {
    let fp = FracParams::new(2, 2.0, 0.4).unwrap();
    let xi = [0.3, 0.5];
    let m = symbol(&spectral_constants(&fp).unwrap(), &xi).unwrap();
    let mc = symbol_monte_carlo(&fp, &xi, 400_000, 11).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let z = (mc.mean[i][j] - m.matrix[i][j]) / mc.std_error[i][j];
            assert!(z.abs() < 4.0, "entry ({i},{j}): {} vs {} (z = {z})", mc.mean[i][j], m.matrix[i][j]);
        }
    }
}

#[test]
fn gaussian_monte_carlo_matches_parseval() {
    let cfg = QuadConfig::default();
    for s in [0.25, 0.75] {
        let c = sc(2, s);
        for u in whole_space_library(2).iter().filter(|u| u.id().starts_with("gaussian")) {
            let fc = FreqConfig::default();
            let (ps, pw) = (parseval_seminorm_s(u, &c, &fc).unwrap(), parseval_seminorm_w(u, &c, &fc).unwrap());
            let ms = seminorm_s(u, &DomainTag::WholeSpace, &c.params, &cfg).unwrap();
            let mw = seminorm_w(u, &DomainTag::WholeSpace, &c.params, &cfg).unwrap();
            assert!((ms.value - ps.value).abs() <= 3.0 * ms.std_error, "S s={s} {}: {} vs {}", u.id(), ms.value, ps.value);
            assert!((mw.value - pw.value).abs() <= 3.0 * mw.std_error, "W s={s} {}: {} vs {}", u.id(), mw.value, pw.value);
        }
    }
}

#[test]
fn parseval_rejects_compact_fields() {
    let c = sc(2, 0.25);
    let bump = whole_space_library(2).into_iter().find(|u| u.id() == "bump_whole_aniso").unwrap();
    assert!(parseval_seminorm_s(&bump, &c, &FreqConfig::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symbol_is_homogeneous(x in -2.0f64..2.0, y in 0.1f64..2.0, t in 0.1f64..5.0, s in 0.05f64..0.95) {
        let c = sc(2, s);
        let a = symbol(&c, &[x, y]).unwrap();
        let b = symbol(&c, &[t * x, t * y]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = t.powf(2.0 * s) * a.matrix[i][j];
                prop_assert!((b.matrix[i][j] - want).abs() <= 1e-12 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn symbol_is_rotation_covariant(x in -2.0f64..2.0, y in 0.1f64..2.0, th in 0.0f64..6.3) {
        let c = sc(2, 0.35);
        let (co, si) = (th.cos(), th.sin());
        let r = [[co, -si], [si, co]];
        let a = symbol(&c, &[x, y]).unwrap();
        let b = symbol(&c, &[co * x - si * y, si * x + co * y]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut want = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        want += r[i][k] * a.matrix[k][l] * r[j][l];
                    }
                }
                prop_assert!((b.matrix[i][j] - want).abs() <= 1e-12 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn symbol_is_positive_definite(x in -2.0f64..2.0, y in 0.1f64..2.0, v in prop::collection::vec(-1.0f64..1.0, 2)) {
        let m = symbol(&sc(2, 0.6), &[x, y]).unwrap();
        let (vals, _) = m.eigen();
        let q = m.quadratic_form(&v);
        let n2 = v[0] * v[0] + v[1] * v[1];
        prop_assert!(q >= vals[0] * n2 * (1.0 - 1e-12) && q <= vals[1] * n2 * (1.0 + 1e-12));
    }
}
