//! Fourier side for `p = 2`: the constants `κ(d,s)`, `l₁`, `l₂`, the symbol
//! `M(ξ)`, Parseval evaluation of the seminorms for Gaussian fields and the
//! whole-space Korn band.
//!
//! Convention: `ℱu(ξ) = ∫ u(x) e^{−2πi x·ξ} dx`. With it
//! `|u|²_S = 2∫⟨M(ξ)û, û⟩ dξ`, `|u|²_W = 2κ∫(2π|ξ|)^{2s}|û|² dξ` and
//! `M(ξ) = (2π|ξ|)^{2s} ((l₁ − l₂) ξ̂ξ̂ᵀ + l₂ I)`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constants::{ConstantName, ConstantValue, Method};
use crate::error::{Error, Result};
use crate::field::{dot, Family, FieldSpec, Gaussian};
use crate::integrate::{adaptive, adaptive_upper, gauss_legendre, Tolerance};
use crate::params::FracParams;
use crate::quad::{Estimate, EstimateMethod};
use crate::special::sphere_area;

/// Number of `2π` periods integrated before the asymptotic tail.
const PERIODS: usize = 160;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralConstants {
    pub params: FracParams,
    pub l1: ConstantValue,
    /// Absent when `d = 1`.
    pub l2: Option<ConstantValue>,
    pub kappa: ConstantValue,
}

impl SpectralConstants {
    /// `l₂`, or `l₁` in one dimension where there is no transverse direction.
    pub fn l2_or_l1(&self) -> f64 {
        self.l2.as_ref().map_or(self.l1.value, |c| c.value)
    }

    pub fn l_min(&self) -> f64 {
        self.l1.value.min(self.l2_or_l1())
    }

    pub fn l_max(&self) -> f64 {
        self.l1.value.max(self.l2_or_l1())
    }
}

/// `K(s) = ∫_ℝ (1 − cos z)/|z|^{1+2s} dz` with its error estimate.
///
/// `[0, 1]` and the first [`PERIODS`] periods are integrated adaptively;
/// beyond `Z = 2πN` the tail `∫_Z^∞ (1 − cos z) z^{−b} dz`, `b = 1 + 2s`, is
/// summed from its integration-by-parts expansion.
pub fn one_dimensional_kappa(s: f64) -> (f64, f64) {
    let b = 1.0 + 2.0 * s;
    let f = |z: f64| 2.0 * (0.5 * z).sin().powi(2) * z.powf(-b);
    let tol = Tolerance { abs: 1e-15, rel: 1e-13, max_intervals: 2000 };
    // on [0, 1]: f = ½(sinc²(z/2) − 1)z^{1−2s} + ½z^{1−2s}, the last part exactly
    let near = |z: f64| {
        let w = 0.5 * z;
        let sinc = if w == 0.0 { 1.0 } else { w.sin() / w };
        0.5 * (sinc - 1.0) * (sinc + 1.0) * z.powf(1.0 - 2.0 * s)
    };
    let mut total = adaptive(near, 0.0, 1.0, tol);
    total.value += 0.5 / (2.0 - 2.0 * s);
    let two_pi = 2.0 * PI;
    total = total + adaptive(f, 1.0, two_pi, tol);
    for k in 1..PERIODS {
        total = total + adaptive(f, two_pi * k as f64, two_pi * (k + 1) as f64, tol);
    }
    let z = two_pi * PERIODS as f64;
    let cos_tail = b * z.powf(-b - 1.0) - b * (b + 1.0) * (b + 2.0) * z.powf(-b - 3.0);
    let tail = z.powf(1.0 - b) / (b - 1.0) - cos_tail;
    let tail_err = b * (b + 1.0) * (b + 2.0) * (b + 3.0) * (b + 4.0) * z.powf(-b - 5.0);
    (2.0 * (total.value + tail), 2.0 * (total.abs_error + tail_err))
}

/// `∫_{ℝ^m} |v₁|^{2k} (1 + |v|²)^{−a} dv` for `k ∈ {0, 1}` by radial quadrature.
fn transverse_integral(m: usize, a: f64, second_moment: bool) -> (f64, f64) {
    if m == 0 {
        return (1.0, 0.0);
    }
    let extra = if second_moment { 2.0 } else { 0.0 };
    let mf = m as f64;
    let g = |r: f64| r.powf(mf - 1.0 + extra) * (1.0 + r * r).powf(-a);
    let tol = Tolerance { abs: 1e-15, rel: 1e-13, max_intervals: 4000 };
    let r = adaptive(g, 0.0, 1.0, tol) + adaptive_upper(g, 1.0, tol);
    // ∫_{S^{m−1}} ω₁² dω = |S^{m−1}|/m
    let ang = sphere_area(m) / if second_moment { mf } else { 1.0 };
    (ang * r.value, ang * r.abs_error)
}

/// `κ(d,s)`, `l₁`, `l₂` via the factorization `∫ F(z₁) G(z⊥)`: the transverse
/// integral is radial and the remaining one-dimensional oscillatory integral
/// is shared by all three constants.
pub fn spectral_constants(params: &FracParams) -> Result<SpectralConstants> {
    params.require_p2()?;
    let (d, s) = (params.d(), params.s());
    let (k1, k1_err) = one_dimensional_kappa(s);
    let m = d - 1;
    let df = d as f64;
    let (c0, e0) = transverse_integral(m, (df + 2.0 * s) / 2.0, false);
    let (c1, e1) = transverse_integral(m, (df + 2.0 + 2.0 * s) / 2.0, false);
    let (c2, e2) = transverse_integral(m, (df + 2.0 + 2.0 * s) / 2.0, true);
    let mk = |name, c: f64, e: f64| ConstantValue {
        name,
        params: Some(*params),
        p: 2.0,
        v: None,
        value: c * k1,
        abs_error: c * k1_err + e * k1 + 1e-15 * c * k1,
        method: Method::AdaptiveQuadrature,
    };
    Ok(SpectralConstants {
        params: *params,
        l1: mk(ConstantName::L1, c1, e1),
        l2: if d > 1 { Some(mk(ConstantName::L2, c2, e2)) } else { None },
        kappa: mk(ConstantName::Kappa, c0, e0),
    })
}

/// Closed form `κ(d,s) = π^{d/2}Γ(1−s)/(s·4^s·Γ(d/2+s))`.
pub fn kappa_closed_form(d: usize, s: f64) -> f64 {
    use crate::special::gamma;
    let h = d as f64 / 2.0;
    PI.powf(h) * gamma(1.0 - s) / (s * 4f64.powf(s) * gamma(h + s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolMatrix {
    pub xi: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
    pub params: FracParams,
    /// `(2π|ξ|)^{2s} l₁`, eigenvector `ξ/|ξ|`.
    pub longitudinal: f64,
    /// `(2π|ξ|)^{2s} l₂`, multiplicity `d − 1`.
    pub transverse: f64,
}

impl SymbolMatrix {
    /// `⟨M v, v⟩`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.matrix.iter().zip(v).map(|(row, vi)| vi * dot(row, v)).sum()
    }

    /// Eigenvalues in ascending order with the unit eigenvector `ξ/|ξ|` of
    /// the longitudinal one.
    pub fn eigen(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.xi.len();
        let n = dot(&self.xi, &self.xi).sqrt();
        let mut vals = vec![self.transverse; d - 1];
        vals.push(self.longitudinal);
        vals.sort_by(f64::total_cmp);
        (vals, self.xi.iter().map(|x| x / n).collect())
    }
}

/// `M(ξ)` from the closed form.
pub fn symbol(sc: &SpectralConstants, xi: &[f64]) -> Result<SymbolMatrix> {
    let params = sc.params;
    let d = params.d();
    if xi.len() != d {
        return Err(Error::InvalidParameter(format!("xi has length {} but d = {d}", xi.len())));
    }
    let n2 = dot(xi, xi);
    if n2 == 0.0 || !n2.is_finite() {
        return Err(Error::InvalidParameter("symbol needs xi != 0".into()));
    }
    let scale = (2.0 * PI * n2.sqrt()).powf(2.0 * params.s());
    let (l1, l2) = (sc.l1.value, sc.l2_or_l1());
    let mut matrix = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            let delta = if i == j { l2 } else { 0.0 };
            matrix[i][j] = scale * ((l1 - l2) * xi[i] * xi[j] / n2 + delta);
        }
    }
    Ok(SymbolMatrix { xi: xi.to_vec(), matrix, params, longitudinal: scale * l1, transverse: scale * l2 })
}

/// Entrywise Monte Carlo estimate of `∫(1 − cos 2πξ·h) h⊗h /|h|^{d+2+2s} dh`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolMonteCarlo {
    pub mean: Vec<Vec<f64>>,
    pub std_error: Vec<Vec<f64>>,
    pub n_samples: usize,
}

/// Polar sampling `h = rω`: `ω` uniform, `r` from the mixture
/// `½(2−2s) r^{1−2s}` on `(0,1)` and `½·2s·r^{−1−2s}` on `(1,∞)`.
pub fn symbol_monte_carlo(params: &FracParams, xi: &[f64], n: usize, seed: u64) -> Result<SymbolMonteCarlo> {
    use rand::SeedableRng;
    params.require_p2()?;
    let d = params.d();
    if xi.len() != d || dot(xi, xi) == 0.0 {
        return Err(Error::InvalidParameter("symbol needs a nonzero xi of length d".into()));
    }
    let s = params.s();
    let area = sphere_area(d);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut sum = vec![vec![0.0; d]; d];
    let mut sum2 = vec![vec![0.0; d]; d];
    let mut om = vec![0.0; d];
    for _ in 0..n {
        if d == 1 {
            om[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        } else {
            loop {
                let mut n2 = 0.0;
                for o in om.iter_mut() {
                    *o = rng.sample::<f64, _>(rand_distr::StandardNormal);
                    n2 += *o * *o;
                }
                if n2 > 1e-300 {
                    om.iter_mut().for_each(|o| *o /= n2.sqrt());
                    break;
                }
            }
        }
        let u: f64 = 1.0 - rng.random::<f64>();
        let (r, q) = if rng.random::<bool>() {
            let r = u.powf(1.0 / (2.0 - 2.0 * s));
            (r, 0.5 * (2.0 - 2.0 * s) * r.powf(1.0 - 2.0 * s))
        } else {
            let r = u.powf(-1.0 / (2.0 * s));
            (r, 0.5 * 2.0 * s * r.powf(-1.0 - 2.0 * s))
        };
        let phase = 2.0 * PI * r * dot(xi, &om);
        let f = 2.0 * (0.5 * phase).sin().powi(2) * r.powf(-1.0 - 2.0 * s);
        let w = area * f / q;
        for i in 0..d {
            for j in 0..d {
                let v = w * om[i] * om[j];
                sum[i][j] += v;
                sum2[i][j] += v * v;
            }
        }
    }
    let nf = n as f64;
    let mean: Vec<Vec<f64>> = sum.iter().map(|row| row.iter().map(|v| v / nf).collect()).collect();
    let std_error = (0..d)
        .map(|i| (0..d).map(|j| ((sum2[i][j] / nf - mean[i][j] * mean[i][j]).max(0.0) / (nf - 1.0)).sqrt()).collect())
        .collect();
    Ok(SymbolMonteCarlo { mean, std_error, n_samples: n })
}

/// Frequency-side quadrature controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqConfig {
    /// Angular nodes per direction.
    pub angular_nodes: usize,
    /// The radial integral stops where the Gaussian factor drops below this.
    pub gauss_cutoff: f64,
}

impl Default for FreqConfig {
    fn default() -> Self {
        FreqConfig { angular_nodes: 256, gauss_cutoff: 1e-16 }
    }
}

fn gaussian_of(u: &FieldSpec) -> Result<&Gaussian> {
    match u.family() {
        Family::Gaussian(g) => Ok(g),
        _ => Err(Error::UnsupportedField(format!("`{}` has no closed-form Fourier transform", u.id()))),
    }
}

/// `∫_{S^{d−1}} h(θ) dθ` by a fixed product rule.
fn sphere_rule<H: Fn(&[f64]) -> f64>(d: usize, n: usize, h: H) -> Result<f64> {
    match d {
        1 => Ok(h(&[1.0]) + h(&[-1.0])),
        2 => {
            let dphi = 2.0 * PI / n as f64;
            Ok((0..n).map(|k| {
                let phi = k as f64 * dphi;
                h(&[phi.cos(), phi.sin()])
            })
            .sum::<f64>()
                * dphi)
        }
        3 => {
            let (gx, gw) = gauss_legendre(n / 2);
            let dphi = 2.0 * PI / n as f64;
            let mut total = 0.0;
            for (c, w) in gx.iter().zip(&gw) {
                let sn = (1.0 - c * c).sqrt();
                for k in 0..n {
                    let phi = k as f64 * dphi;
                    total += w * dphi * h(&[sn * phi.cos(), sn * phi.sin(), *c]);
                }
            }
            Ok(total)
        }
        _ => Err(Error::InvalidParameter("frequency quadrature supports d <= 3".into())),
    }
}

/// `∫_0^∞ t^{2s+d−1} e^{−2πt²} dt`, truncated at the Gaussian cutoff.
fn radial_moment(s: f64, d: usize, cutoff: f64) -> f64 {
    let t_max = (-cutoff.ln() / (2.0 * PI)).sqrt();
    let e = 2.0 * s + d as f64 - 1.0;
    adaptive(|t: f64| t.powf(e) * (-2.0 * PI * t * t).exp(), 0.0, t_max, Tolerance::new(1e-16, 1e-13)).value
}

/// `2∫ (2π|ξ|)^{2s} ⟨B(ξ̂) a, a⟩ |ĝ(ξ)|² dξ` for a Gaussian `u = a·g`.
fn parseval_quadratic<B: Fn(&[f64], &[f64]) -> f64>(
    g: &Gaussian,
    params: &FracParams,
    cfg: &FreqConfig,
    form: B,
) -> Result<f64> {
    let (d, s) = (params.d(), params.s());
    if g.center.len() != d {
        return Err(Error::InvalidParameter("field dimension does not match d".into()));
    }
    let w: f64 = g.widths.iter().product();
    let radial = radial_moment(s, d, cfg.gauss_cutoff);
    let expo = (2.0 * s + d as f64) / 2.0;
    let ang = sphere_rule(d, cfg.angular_nodes, |th| {
        let q: f64 = g.widths.iter().zip(th).map(|(w, t)| (w * t).powi(2)).sum();
        form(th, &g.amplitude) * q.powf(-expo)
    })?;
    Ok(2.0 * (2.0 * PI).powf(2.0 * s) * w * w * radial * ang)
}

/// `|u|²_S = 2∫⟨M(ξ)û(ξ), û(ξ)⟩ dξ` for Gaussian fields.
pub fn parseval_seminorm_s(u: &FieldSpec, sc: &SpectralConstants, cfg: &FreqConfig) -> Result<Estimate> {
    sc.params.require_p2()?;
    let g = gaussian_of(u)?;
    let (l1, l2) = (sc.l1.value, sc.l2_or_l1());
    let v = parseval_quadratic(g, &sc.params, cfg, |th, a| {
        let c = dot(th, a);
        (l1 - l2) * c * c + l2 * dot(a, a)
    })?;
    Ok(Estimate { value: v, std_error: 0.0, n_samples: 0, method: EstimateMethod::Deterministic, seed: 0 })
}

/// `|u|²_W = 2κ∫(2π|ξ|)^{2s}|û(ξ)|² dξ` for Gaussian fields.
pub fn parseval_seminorm_w(u: &FieldSpec, sc: &SpectralConstants, cfg: &FreqConfig) -> Result<Estimate> {
    sc.params.require_p2()?;
    let g = gaussian_of(u)?;
    let kappa = sc.kappa.value;
    let v = parseval_quadratic(g, &sc.params, cfg, |_, a| kappa * dot(a, a))?;
    Ok(Estimate { value: v, std_error: 0.0, n_samples: 0, method: EstimateMethod::Deterministic, seed: 0 })
}

/// Band `[κ/max(l₁,l₂), κ/min(l₁,l₂)]` containing `|u|²_W/|u|²_S` on `ℝᵈ`.
pub fn korn_bounds(sc: &SpectralConstants) -> Result<(f64, f64)> {
    sc.params.require_p2()?;
    Ok((sc.kappa.value / sc.l_max(), sc.kappa.value / sc.l_min()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_kappa_matches_closed_form() {
        for s in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let (k, e) = one_dimensional_kappa(s);
            let want = kappa_closed_form(1, s);
            assert!((k - want).abs() < 1e-9 * want, "s={s}: {k} vs {want} (err {e})");
            assert!((k - want).abs() <= 3.0 * e + 1e-12 * want);
        }
    }

    #[test]
    fn rejects_p_not_two() {
        assert!(matches!(spectral_constants(&FracParams::new(2, 3.0, 0.4).unwrap()), Err(Error::ExcludedParameter(_))));
    }

    #[test]
    fn d1_band_is_one() {
        let sc = spectral_constants(&FracParams::new(1, 2.0, 0.3).unwrap()).unwrap();
        assert!(sc.l2.is_none());
        assert_eq!(sc.l1.value, sc.kappa.value);
        assert_eq!(korn_bounds(&sc).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn symbol_rejects_zero() {
        let sc = spectral_constants(&FracParams::new(2, 2.0, 0.3).unwrap()).unwrap();
        assert!(symbol(&sc, &[0.0, 0.0]).is_err());
    }
}
