//! Generalized reflection across `x_d = 0`:
//! `U_i(x′, x_d) = 2u_i(x′, −x_d) − u_i(x′, −3x_d)` for `i < d` and
//! `U_d(x′, x_d) = −2u_d(x′, −x_d) + 3u_d(x′, −3x_d)` when `x_d < 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{DomainTag, FieldSpec, NullKind, Smoothness, SupportBox, VectorField};
use crate::params::FracParams;
use crate::quad::{seminorm_over, seminorm_s, Estimate, QuadConfig, Region, SeminormKind, MAX_DIM};

/// `E u`, evaluated lazily from the half-space field.
#[derive(Debug, Clone)]
pub struct ExtendedField {
    original: FieldSpec,
    support: Option<SupportBox>,
}

impl ExtendedField {
    pub fn original(&self) -> &FieldSpec {
        &self.original
    }
}

/// Builds `E u` for a half-space field.
pub fn extend(u: &FieldSpec) -> Result<ExtendedField> {
    if u.domain_tag() != DomainTag::HalfSpace {
        return Err(Error::DomainError(format!("`{}` is not a half-space field", u.id())));
    }
    if matches!(u.smoothness(), Smoothness::Schwartz | Smoothness::Affine) {
        return Err(Error::UnsupportedField("extension needs a compactly supported field".into()));
    }
    let d = u.dim();
    let support = u.support().map(|b| {
        let mut e = b.clone();
        e.lo[d - 1] = -b.hi[d - 1];
        e.hi[d - 1] = b.hi[d - 1];
        e
    });
    Ok(ExtendedField { original: u.clone(), support })
}

impl VectorField for ExtendedField {
    fn dim(&self) -> usize {
        self.original.dim()
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        if x[d - 1] >= 0.0 {
            self.original.eval_into(x, out);
            return;
        }
        let t = -x[d - 1];
        let mut z = [0.0; MAX_DIM];
        let mut a = [0.0; MAX_DIM];
        z[..d].copy_from_slice(x);
        z[d - 1] = t;
        self.original.eval_into(&z[..d], &mut a[..d]);
        z[d - 1] = 3.0 * t;
        self.original.eval_into(&z[..d], out);
        for i in 0..d - 1 {
            out[i] = 2.0 * a[i] - out[i];
        }
        out[d - 1] = -2.0 * a[d - 1] + 3.0 * out[d - 1];
    }

    fn support(&self) -> Option<SupportBox> {
        self.support.clone()
    }

    fn domain_tag(&self) -> DomainTag {
        DomainTag::WholeSpace
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::Lipschitz
    }

    fn null_kind(&self) -> NullKind {
        match self.original.null_kind() {
            NullKind::Zero => NullKind::Zero,
            _ => NullKind::None,
        }
    }

    fn label(&self) -> String {
        format!("ext({})", self.original.id())
    }
}

/// The three pieces of `|U|^p_S(ℝᵈ) = I⁺ + I⁻ + 2I^±`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// `ℝᵈ₊ × ℝᵈ₊`.
    pub plus: Estimate,
    /// `ℝᵈ₋ × ℝᵈ₋`.
    pub minus: Estimate,
    /// `ℝᵈ₋ × ℝᵈ₊`.
    pub mixed: Estimate,
}

impl Decomposition {
    /// `I⁺ + I⁻ + 2I^±`.
    pub fn total(&self) -> Estimate {
        self.plus.plus(&self.minus).plus(&self.mixed.scaled(2.0))
    }
}

pub fn decompose_seminorm(ext: &ExtendedField, params: &FracParams, cfg: &QuadConfig) -> Result<Decomposition> {
    params.require_ps_not_one()?;
    let k = SeminormKind::Projected;
    Ok(Decomposition {
        plus: seminorm_over(ext, k, &Region::Upper, &Region::Upper, params, cfg)?,
        minus: seminorm_over(ext, k, &Region::Lower, &Region::Lower, params, cfg)?,
        mixed: seminorm_over(ext, k, &Region::Lower, &Region::Upper, params, cfg)?,
    })
}

/// `|E u|^p_S(ℝᵈ)` and `|u|^p_S(ℝᵈ₊)`.
pub fn boundedness_parts(u: &FieldSpec, params: &FracParams, cfg: &QuadConfig) -> Result<(Estimate, Estimate)> {
    params.require_ps_not_one()?;
    if matches!(u.null_kind(), NullKind::Zero | NullKind::Rigid) {
        return Err(Error::NullSeminorm);
    }
    let ext = extend(u)?;
    let den = seminorm_s(u, &DomainTag::HalfSpace, params, cfg)?;
    if den.value == 0.0 {
        return Err(Error::NullSeminorm);
    }
    let num = seminorm_s(&ext, &DomainTag::WholeSpace, params, cfg)?;
    Ok((num, den))
}

/// `|E u|^p_S(ℝᵈ) / |u|^p_S(ℝᵈ₊)` (ratio of p-th powers).
pub fn boundedness_ratio(u: &FieldSpec, params: &FracParams, cfg: &QuadConfig) -> Result<f64> {
    let (num, den) = boundedness_parts(u, params, cfg)?;
    Ok(num.value / den.value)
}

/// `max |E u(x′, 0⁻) − u(x′, 0⁺)|` over `n` tangential points drawn from the
/// support, evaluating the reflection formula at `x_d = −0.0` and at `x_d = 0`.
pub fn trace_mismatch(ext: &ExtendedField, n: usize, seed: u64) -> f64 {
    let d = ext.dim();
    let b = ext.support().unwrap_or_else(|| SupportBox::new(vec![-1.0; d], vec![1.0; d]));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut x = vec![0.0; d];
    for _ in 0..n {
        for i in 0..d - 1 {
            x[i] = b.lo[i] + rng.random::<f64>() * (b.hi[i] - b.lo[i]);
        }
        x[d - 1] = 0.0;
        let up = ext.original.eval(&x);
        let below = reflect(&ext.original, &x);
        worst = worst.max(up.iter().zip(&below).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    worst
}

/// The lower-half formula evaluated at any point (used at `x_d = 0`).
fn reflect(u: &FieldSpec, x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let t = -x[d - 1];
    let mut z = x.to_vec();
    z[d - 1] = -t;
    let a = u.eval(&z);
    z[d - 1] = -3.0 * t;
    let b = u.eval(&z);
    let mut out: Vec<f64> = (0..d - 1).map(|i| 2.0 * a[i] - b[i]).collect();
    out.push(-2.0 * a[d - 1] + 3.0 * b[d - 1]);
    out
}

/// `max_h |U(x′, −h) − U(x′, h)|/h` over sampled `x′` for each `h`.
pub fn trace_continuity_constants(ext: &ExtendedField, hs: &[f64], n: usize, seed: u64) -> Vec<f64> {
    let d = ext.dim();
    let b = ext.support().unwrap_or_else(|| SupportBox::new(vec![-1.0; d], vec![1.0; d]));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d - 1).map(|i| b.lo[i] + rng.random::<f64>() * (b.hi[i] - b.lo[i])).collect())
        .collect();
    hs.iter()
        .map(|&h| {
            pts.iter()
                .map(|xp| {
                    let mut x = xp.clone();
                    x.push(h);
                    let up = ext.eval(&x);
                    x[d - 1] = -h;
                    let down = ext.eval(&x);
                    up.iter().zip(&down).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / h
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Largest difference quotient `|U(y) − U(x)|/|y − x|` over `n` pairs
/// straddling `x_d = 0`, with log-spaced normal offsets in `[1e−6, 1]·S`.
pub fn cross_boundary_lipschitz(ext: &ExtendedField, n: usize, seed: u64) -> f64 {
    let d = ext.dim();
    let b = ext.support().unwrap_or_else(|| SupportBox::new(vec![-1.0; d], vec![1.0; d]));
    let scale = b.hi[d - 1].max(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut x = vec![0.0; d];
    let mut y = vec![0.0; d];
    for _ in 0..n {
        for i in 0..d - 1 {
            x[i] = b.lo[i] + rng.random::<f64>() * (b.hi[i] - b.lo[i]);
            y[i] = x[i] + scale * 1e-2 * (rng.random::<f64>() - 0.5);
        }
        x[d - 1] = scale * 10f64.powf(-6.0 * rng.random::<f64>());
        y[d - 1] = -scale * 10f64.powf(-6.0 * rng.random::<f64>());
        let (ux, uy) = (ext.eval(&x), ext.eval(&y));
        let num = ux.iter().zip(&uy).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let den = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        worst = worst.max(num / den);
    }
    worst
}

/// One-sided normal derivatives `(∂_d U(x′, 0⁻), ∂_d u(x′, 0⁺))` by first
/// differences at step `h`.
pub fn one_sided_normal_derivatives(ext: &ExtendedField, xp: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let d = ext.dim();
    let mut x0 = xp.to_vec();
    x0.push(0.0);
    let mut xm = x0.clone();
    xm[d - 1] = -h;
    let mut xpl = x0.clone();
    xpl[d - 1] = h;
    let u0 = ext.original.eval(&x0);
    let below = reflect(&ext.original, &x0);
    let um = ext.eval(&xm);
    let upl = ext.eval(&xpl);
    (
        (0..d).map(|i| (below[i] - um[i]) / h).collect(),
        (0..d).map(|i| (upl[i] - u0[i]) / h).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{field_library, CustomField};
    use std::sync::Arc;

    fn smooth_trace_field() -> FieldSpec {
        FieldSpec::custom(
            "trace",
            2,
            CustomField {
                eval: Arc::new(|x, o| {
                    o[0] = (x[0]).sin() + 0.5 * x[1] + x[1] * x[1];
                    o[1] = (x[0]).cos() * (1.0 + 2.0 * x[1]) - 0.3 * x[1] * x[1];
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
    fn identity_on_half_space() {
        for u in field_library(2).into_iter().filter(|f| f.domain_tag() == DomainTag::HalfSpace) {
            let e = extend(&u).unwrap();
            for k in 0..200 {
                let x = [-1.5 + 3.0 * (k as f64 / 199.0), 0.01 + 2.5 * ((k * 37) % 200) as f64 / 199.0];
                assert_eq!(e.eval(&x), u.eval(&x));
            }
        }
    }

    #[test]
    fn reflection_formula() {
        let u = smooth_trace_field();
        let e = extend(&u).unwrap();
        let (a, b) = (u.eval(&[0.3, 1.0]), u.eval(&[0.3, 3.0]));
        let got = e.eval(&[0.3, -1.0]);
        assert_eq!(got, vec![2.0 * a[0] - b[0], -2.0 * a[1] + 3.0 * b[1]]);
    }

    #[test]
    fn normal_derivative_jump() {
        let e = extend(&smooth_trace_field()).unwrap();
        let (below, above) = one_sided_normal_derivatives(&e, &[0.4], 1e-5);
        assert!((below[0] - above[0]).abs() < 1e-3 * above[0].abs().max(1.0));
        assert!((below[1] / above[1] + 7.0).abs() < 1e-3 * 7.0);
    }

    #[test]
    fn whole_space_input_rejected() {
        let g = field_library(2).into_iter().find(|f| f.id() == "gaussian_iso").unwrap();
        assert!(matches!(extend(&g), Err(Error::DomainError(_))));
    }
}
