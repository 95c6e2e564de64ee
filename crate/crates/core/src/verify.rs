//! Verification harness: each check evaluates both sides of an inequality
//! and reports whether `lhs ≤ c·rhs` holds within three combined standard
//! errors.
//!
//! Two-sided identities (Parseval, the `I⁺ + I⁻ + 2I^±` split, the mixed
//! integral routes) are reported as `|a − b| ≤ 1·0` so that the same rule
//! reads `|a − b| ≤ 3σ`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::constants::{c_p, eta_constants, f_of_v, sigma};
use crate::error::{Error, Result};
use crate::extension::{cross_boundary_lipschitz, decompose_seminorm, extend, trace_mismatch};
use crate::field::{half_space_library, scale_field, DomainTag, FieldSpec, NullKind, SupportBox, VectorField};
use crate::integrate::{adaptive, adaptive_upper, Tolerance};
use crate::params::FracParams;
use crate::quad::{
    box_quadrature, hardy_norm, mixed_by_j_route, mixed_halfspace_integral, remainder_integral, seminorm_s,
    seminorm_w, weighted_half_space_integral, Estimate, EstimateMethod, QuadConfig,
};
use crate::spectral::{korn_bounds, parseval_seminorm_s, FreqConfig, SpectralConstants};

/// Number of standard errors allowed by every statistical comparison.
pub const SIGMA_LEVEL: f64 = 3.0;

/// Relative tolerance for the ground-state limit.
pub const GROUND_STATE_TOL: f64 = 1e-4;

/// Relative slack for pointwise inequalities, scaled by the size of the terms.
pub const POINTWISE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    /// Absent for the pointwise scan, which depends on `p` only.
    pub params: Option<FracParams>,
    pub field_id: Option<String>,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub constant_used: f64,
    /// `(c·rhs − lhs)/σ`; the raw difference when both sides are exact.
    pub margin: f64,
    pub passed: bool,
    pub details: BTreeMap<String, Value>,
}

impl VerificationReport {
    pub fn new(
        check_name: &str,
        params: Option<FracParams>,
        field_id: Option<&str>,
        lhs: Estimate,
        rhs: Estimate,
        constant_used: f64,
    ) -> Self {
        let se = lhs.std_error.hypot(constant_used.abs() * rhs.std_error);
        let gap = constant_used * rhs.value - lhs.value;
        let margin = if se > 0.0 { gap / se } else { gap };
        let passed = lhs.value <= constant_used * rhs.value + SIGMA_LEVEL * se;
        VerificationReport {
            check_name: check_name.to_string(),
            params,
            field_id: field_id.map(str::to_string),
            lhs,
            rhs,
            constant_used,
            margin,
            passed,
            details: BTreeMap::new(),
        }
    }

    /// `|a − b|` against zero with the combined error of `a` and `b`.
    pub fn equality(check_name: &str, params: Option<FracParams>, field_id: Option<&str>, a: &Estimate, b: &Estimate) -> Self {
        let diff = Estimate {
            value: (a.value - b.value).abs(),
            std_error: a.std_error.hypot(b.std_error),
            n_samples: a.n_samples + b.n_samples,
            method: a.method,
            seed: a.seed,
        };
        let mut r = Self::new(check_name, params, field_id, diff, Estimate::exact(0.0, a.seed), 1.0);
        r.details.insert("a".into(), json!(a.value));
        r.details.insert("b".into(), json!(b.value));
        r
    }

    pub fn with(mut self, key: &str, value: Value) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn csv_row(&self) -> String {
        let (d, p, s) = match &self.params {
            Some(fp) => (fp.d().to_string(), fp.p().to_string(), fp.s().to_string()),
            None => (String::new(), self.details.get("p").map_or(String::new(), |v| v.to_string()), String::new()),
        };
        format!(
            "{},{},{},{},{},{},{}",
            self.check_name,
            self.field_id.as_deref().unwrap_or(""),
            d,
            p,
            s,
            self.passed,
            self.margin
        )
    }
}

pub const SUMMARY_CSV_HEADER: &str = "check,field,d,p,s,passed,margin";

/// Seed of the job `(check, field, seed)`: independent streams per job,
/// identical across runs.
pub fn job_seed(check: &str, field_id: &str, seed: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in check.bytes().chain([0u8]).chain(field_id.bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Named parameter sweeps.
pub fn sweep(name: &str) -> Result<Vec<FracParams>> {
    let grid = |ds: &[usize], ps: &[f64], ss: &[f64]| -> Result<Vec<FracParams>> {
        let mut out = Vec::new();
        for &d in ds {
            for &p in ps {
                for &s in ss {
                    let fp = FracParams::new(d, p, s)?;
                    if !fp.ps_is_one() {
                        out.push(fp);
                    }
                }
            }
        }
        Ok(out)
    };
    match name {
        "default" => grid(&[1, 2, 3], &[1.0, 2.0, 3.0], &[0.25, 0.4, 0.6, 0.75]),
        "korn" => grid(&[1, 2, 3], &[2.0], &[0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9]),
        "quick" => grid(&[1, 2], &[2.0], &[0.25, 0.75]),
        _ => Err(Error::InvalidParameter(format!("unknown sweep `{name}` (expected default, korn or quick)"))),
    }
}

fn c_norm(p: f64) -> f64 {
    2f64.powf(p / 2.0 - 1.0).max(1.0)
}

fn tangential_norm(ux: &[f64]) -> f64 {
    let d = ux.len();
    ux[..d - 1].iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `∫|u|^p x_d^{−ps} ≤ κ|u|^p_S` with `κ = c_p'/(σ·min(η₁, η₂))`, where
/// `c_p' = max(1, 2^{p/2−1})` bounds `|u|^p` by `|u_d|^p + |u′|^p`.
pub fn hardy_check(u: &FieldSpec, params: &FracParams, cfg: &QuadConfig) -> Result<VerificationReport> {
    params.require_ps_not_one()?;
    let sig = sigma(params)?;
    let (e1, e2) = eta_constants(params);
    let eta_min = e1.value.min(e2.value);
    let cn = c_norm(params.p());
    let kappa = cn / (sig.value * eta_min);
    let (lhs, rhs) = if u.null_kind() == NullKind::Zero {
        (Estimate::exact(0.0, cfg.seed), Estimate::exact(0.0, cfg.seed))
    } else {
        (hardy_norm(u, params, cfg)?, seminorm_s(u, &DomainTag::HalfSpace, params, cfg)?)
    };
    Ok(VerificationReport::new("hardy", Some(*params), Some(u.id()), lhs, rhs, kappa)
        .with("sigma", json!(sig.value))
        .with("eta1", json!(e1.value))
        .with("eta2", json!(e2.value))
        .with("norm_constant", json!(cn))
        .with("kappa_hardy", json!(kappa))
        .with("sources", json!({"sigma": "constants", "eta": "constants", "lhs": "quad", "rhs": "quad"})))
}

/// `∫ x_d^{−ps}(η₁|u_d|^p + η₂|u′|^p) ≤ (1/σ)|u|^p_S`.
pub fn hardy_split_check(u: &FieldSpec, params: &FracParams, cfg: &QuadConfig) -> Result<VerificationReport> {
    params.require_ps_not_one()?;
    let sig = sigma(params)?;
    let (e1, e2) = eta_constants(params);
    let p = params.p();
    let (lhs, rhs) = if u.null_kind() == NullKind::Zero {
        (Estimate::exact(0.0, cfg.seed), Estimate::exact(0.0, cfg.seed))
    } else {
        let (a, b) = (e1.value, e2.value);
        let v = weighted_half_space_integral(u, params, |_, ux| {
            let d = ux.len();
            let t = if d > 1 { b * tangential_norm(ux).powf(p) } else { 0.0 };
            a * ux[d - 1].abs().powf(p) + t
        })?;
        (Estimate::exact(v, cfg.seed), seminorm_s(u, &DomainTag::HalfSpace, params, cfg)?)
    };
    Ok(VerificationReport::new("hardy_split", Some(*params), Some(u.id()), lhs, rhs, 1.0 / sig.value)
        .with("sigma", json!(sig.value))
        .with("eta1", json!(e1.value))
        .with("eta2", json!(e2.value))
        .with("sources", json!({"sigma": "constants", "eta": "constants", "lhs": "quad", "rhs": "quad"})))
}

/// Default remainder constant: `σ·min(η₁, η₂)/c_p'`, the reciprocal of the
/// Hardy constant used by [`hardy_check`].
pub fn default_kappa_rem(params: &FracParams) -> Result<f64> {
    let sig = sigma(params)?;
    let (e1, e2) = eta_constants(params);
    Ok(sig.value * e1.value.min(e2.value) / c_norm(params.p()))
}

/// `κ_rem·∫|u|^p x_d^{−ps} + c_p·R[u] ≤ |u|^p_S` for `p ≥ 2`.
///
/// The margins obtained with the other readings of `κ_rem` (the Hardy
/// constant itself and `2σ·min η`) are recorded in the details.
pub fn hardy_remainder_check(
    u: &FieldSpec,
    params: &FracParams,
    cfg: &QuadConfig,
    kappa_rem: Option<f64>,
) -> Result<VerificationReport> {
    params.require_ps_not_one()?;
    if params.p() < 2.0 {
        return Err(Error::ExcludedParameter(format!("remainder form needs p >= 2, got p = {}", params.p())));
    }
    let sig = sigma(params)?;
    let (e1, e2) = eta_constants(params);
    let eta_min = e1.value.min(e2.value);
    let cp = c_p(params.p())?.value;
    let default_rem = default_kappa_rem(params)?;
    let k_rem = kappa_rem.unwrap_or(default_rem);
    let (h, r, s) = if u.null_kind() == NullKind::Zero {
        let z = Estimate::exact(0.0, cfg.seed);
        (z, z, z)
    } else {
        (
            hardy_norm(u, params, cfg)?,
            remainder_integral(u, params, cfg)?,
            seminorm_s(u, &DomainTag::HalfSpace, params, cfg)?,
        )
    };
    let lhs_for = |k: f64| h.scaled(k).plus(&r.scaled(cp));
    let reading = |k: f64| {
        let rep = VerificationReport::new("", None, None, lhs_for(k), s, 1.0);
        json!({"kappa_rem": k, "margin": rep.margin, "passed": rep.passed})
    };
    let kappa_hardy = 1.0 / default_rem;
    Ok(VerificationReport::new("hardy_remainder", Some(*params), Some(u.id()), lhs_for(k_rem), s, 1.0)
        .with("c_p", json!(cp))
        .with("kappa_rem", json!(k_rem))
        .with("hardy_norm", json!(h.value))
        .with("remainder", json!(r.value))
        .with("reading_reciprocal", reading(default_rem))
        .with("reading_kappa", reading(kappa_hardy))
        .with("reading_two_sigma_eta", reading(2.0 * sig.value * eta_min))
        .with("sources", json!({"c_p": "constants", "sigma": "constants", "remainder": "quad"})))
}

/// `|u|²_S ≤ |u|²_W` on the half-space, with the ratio `W/S` recorded.
pub fn korn_halfspace_check(u: &FieldSpec, params: &FracParams, cfg: &QuadConfig) -> Result<VerificationReport> {
    params.require_korn()?;
    let dom = DomainTag::HalfSpace;
    let s = seminorm_s(u, &dom, params, cfg)?;
    let w = seminorm_w(u, &dom, params, cfg)?;
    let ratio = if s.value > 0.0 { Some(w.value / s.value) } else { None };
    Ok(VerificationReport::new("korn_halfspace", Some(*params), Some(u.id()), s, w, 1.0)
        .with("ratio", json!(ratio))
        .with("ratio_finite", json!(ratio.is_some_and(f64::is_finite))))
}

/// Whole-space band `κ/max l ≤ W/S ≤ κ/min l`, as the two reports
/// `W ≤ hi·S` and `lo·S ≤ W`.
pub fn korn_band_check(
    u: &FieldSpec,
    sc: &SpectralConstants,
    cfg: &QuadConfig,
) -> Result<Vec<VerificationReport>> {
    let params = &sc.params;
    params.require_korn()?;
    let (lo, hi) = korn_bounds(sc)?;
    let dom = DomainTag::WholeSpace;
    let s = seminorm_s(u, &dom, params, cfg)?;
    let w = seminorm_w(u, &dom, params, cfg)?;
    let ratio = if s.value > 0.0 { Some(w.value / s.value) } else { None };
    let tag = |r: VerificationReport| {
        r.with("ratio", json!(ratio))
            .with("band_lower", json!(lo))
            .with("band_upper", json!(hi))
            .with("sources", json!({"band": "spectral", "ratio": "quad"}))
    };
    Ok(vec![
        tag(VerificationReport::new("korn_band_upper", Some(*params), Some(u.id()), w, s, hi)),
        tag(VerificationReport::new("korn_band_lower", Some(*params), Some(u.id()), s.scaled(lo), w, 1.0)),
    ])
}

/// Monte Carlo `|u|²_S` against the frequency-side value for Gaussian fields.
pub fn parseval_check(u: &FieldSpec, sc: &SpectralConstants, cfg: &QuadConfig) -> Result<VerificationReport> {
    let params = &sc.params;
    params.require_p2()?;
    let spec = parseval_seminorm_s(u, sc, &FreqConfig::default())?;
    let mc = seminorm_s(u, &DomainTag::WholeSpace, params, cfg)?;
    Ok(VerificationReport::equality("parseval", Some(*params), Some(u.id()), &mc, &spec)
        .with("sources", json!({"a": "quad", "b": "spectral"})))
}

/// `|F_λu|^p_S ≤ λ^{d+ps−2}|u|^p_S`; the ratio `∫|F_λu − u|^p x_d^{−ps} / |u|^p_S`
/// is recorded as the empirical constant of the companion Hardy bound.
pub fn scaling_check(u: &FieldSpec, lambda: f64, params: &FracParams, cfg: &QuadConfig) -> Result<VerificationReport> {
    params.require_ps_not_one()?;
    let fu = scale_field(u, lambda)?;
    let rhs = seminorm_s(u, &DomainTag::HalfSpace, params, cfg)?;
    let lhs = if lambda == 1.0 { rhs } else { seminorm_s(&fu, &DomainTag::HalfSpace, params, cfg)? };
    let c = lambda.powf(params.d() as f64 + params.ps() - 2.0);
    let companion = match (u.support(), fu.support()) {
        (Some(a), Some(b)) => Some(difference_hardy(u, &fu, &a.union(&b), params)),
        _ => None,
    };
    let emp = companion.filter(|_| rhs.value > 0.0).map(|v| v / rhs.value);
    Ok(VerificationReport::new("scaling", Some(*params), Some(u.id()), lhs, rhs, c)
        .with("lambda", json!(lambda))
        .with("difference_hardy", json!(companion))
        .with("difference_hardy_constant", json!(emp)))
}

fn difference_hardy(u: &FieldSpec, v: &FieldSpec, b: &SupportBox, params: &FracParams) -> f64 {
    let (d, p, ps) = (params.d(), params.p(), params.ps());
    box_quadrature(
        |x| {
            let (a, c) = (u.eval(x), v.eval(x));
            let n = a.iter().zip(&c).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
            n.powf(p) * x[d - 1].powf(-ps)
        },
        b,
    )
}

/// `|E u|^p_S(ℝᵈ) ≥ |u|^p_S(ℝᵈ₊)` together with trace diagnostics.
pub fn extension_check(u: &FieldSpec, params: &FracParams, cfg: &QuadConfig) -> Result<VerificationReport> {
    params.require_ps_not_one()?;
    let ext = extend(u)?;
    let half = seminorm_s(u, &DomainTag::HalfSpace, params, cfg)?;
    let whole = seminorm_s(&ext, &DomainTag::WholeSpace, params, cfg)?;
    let ratio = if half.value > 0.0 { Some(whole.value / half.value) } else { None };
    Ok(VerificationReport::new("extension", Some(*params), Some(u.id()), half, whole, 1.0)
        .with("ratio", json!(ratio))
        .with("trace_mismatch", json!(trace_mismatch(&ext, 10_000, cfg.seed)))
        .with("cross_boundary_lipschitz", json!(cross_boundary_lipschitz(&ext, 10_000, cfg.seed))))
}

/// `I⁺ + I⁻ + 2I^± = |E u|^p_S(ℝᵈ)`.
pub fn decomposition_check(u: &FieldSpec, params: &FracParams, cfg: &QuadConfig) -> Result<VerificationReport> {
    let ext = extend(u)?;
    let dec = decompose_seminorm(&ext, params, cfg)?;
    let whole = seminorm_s(&ext, &DomainTag::WholeSpace, params, cfg)?;
    Ok(VerificationReport::equality("decomposition", Some(*params), Some(u.id()), &dec.total(), &whole)
        .with("plus", json!(dec.plus.value))
        .with("minus", json!(dec.minus.value))
        .with("mixed", json!(dec.mixed.value)))
}

/// Mixed half-space integral by Monte Carlo against the `J`-kernel route.
pub fn mixed_integral_check(u: &FieldSpec, params: &FracParams, cfg: &QuadConfig) -> Result<VerificationReport> {
    params.require_ps_not_one()?;
    let mc = mixed_halfspace_integral(u, params, cfg)?;
    let j = Estimate::exact(mixed_by_j_route(u, params)?, cfg.seed);
    let s = seminorm_s(u, &DomainTag::HalfSpace, params, cfg)?;
    let c = if s.value > 0.0 { Some(mc.value / s.value) } else { None };
    Ok(VerificationReport::equality("mixed_integral", Some(*params), Some(u.id()), &mc, &j)
        .with("bound_constant", json!(c))
        .with("sources", json!({"a": "quad", "b": "constants+quad"})))
}

/// `ψ(e) = e|e|^{p−2}`, with `ψ(0) = 0`.
fn psi(e: f64, p: f64) -> f64 {
    if e == 0.0 { 0.0 } else { e.signum() * e.abs().powf(p - 1.0) }
}

/// `ψ(E(u)) + ψ(E(−u))` for `0 < u < 1`, `E(u) = (1+u)^α − 1`, evaluated
/// without cancellation: `E(u) + E(−u) = 2(expm1(m)cosh h + 2sinh²(h/2))`
/// with `m = α·ln(1−u²)/2`, `h = α·atanh u`.
fn symmetric_pair(u: f64, alpha: f64, p: f64) -> f64 {
    let a = (alpha * u.ln_1p()).exp_m1();
    let b = (alpha * (-u).ln_1p()).exp_m1();
    let m = 0.5 * alpha * (-u * u).ln_1p();
    let h = alpha * u.atanh();
    let sum = 2.0 * (m.exp_m1() * h.cosh() + 2.0 * (0.5 * h).sinh().powi(2));
    if a == 0.0 || b == 0.0 {
        return psi(a, p) + psi(b, p);
    }
    // |a|^{p−1} − |b|^{p−1} = |b|^{p−1}·expm1((p−1)·ln1p(sum/(−b)))
    a.signum() * b.abs().powf(p - 1.0) * ((p - 1.0) * (sum / -b).ln_1p()).exp_m1()
}

/// Normalized excised integral increments: `N(δ) = ∫_{|t|>δ, t>−1} ψ((1+t)^α − 1)|t|^{−1−ps} dt`.
struct GroundState {
    alpha: f64,
    p: f64,
    ps: f64,
    tol: Tolerance,
}

impl GroundState {
    fn right_f(&self) -> impl Fn(f64) -> f64 + '_ {
        move |t: f64| psi((self.alpha * t.ln_1p()).exp_m1(), self.p) * t.powf(-1.0 - self.ps)
    }

    fn right(&self, a: f64, b: f64) -> f64 {
        if a >= b { 0.0 } else { adaptive(self.right_f(), a, b, self.tol).value }
    }

    /// The `t < 0` side, mirrored; may be singular at `t = 1`.
    fn left(&self, a: f64, b: f64) -> f64 {
        if a >= b {
            return 0.0;
        }
        // in v = 1 − t, so that (1 − t)^α stays exact near t = 1
        let f = |v: f64| psi(v.powf(self.alpha) - 1.0, self.p) * (1.0 - v).powf(-1.0 - self.ps);
        adaptive(f, 1.0 - b, 1.0 - a, self.tol).value
    }

    /// Both sides over `[a, b] ⊂ (0, 1)`.
    fn inner(&self, a: f64, b: f64) -> f64 {
        if a >= b {
            return 0.0;
        }
        adaptive(|t: f64| symmetric_pair(t, self.alpha, self.p) * t.powf(-1.0 - self.ps), a, b, self.tol).value
    }

    /// Contribution of `δ ≤ |t| < ∞`.
    fn from(&self, delta: f64) -> f64 {
        let far = 2.0f64.max(delta);
        let tail = adaptive_upper(self.right_f(), far, self.tol).value;
        if delta >= 1.0 {
            return self.right(delta, far) + tail;
        }
        let mid = delta.max(0.5);
        self.inner(delta, mid) + self.left(mid, 1.0) + self.right(mid, far) + tail
    }

    /// Contribution of `lo ≤ |t| < hi`.
    fn increment(&self, lo: f64, hi: f64) -> f64 {
        let cut = hi.min(0.5).max(lo);
        self.inner(lo, cut) + self.right(cut, hi) + self.left(cut, hi.min(1.0))
    }
}

/// Default excision radii `2^{−k}`, `k = 1..40`.
pub fn default_eps_sequence() -> Vec<f64> {
    (1..=40).map(|k| 2f64.powi(-k)).collect()
}

/// Five `(x, v)` probe configurations spanning `d = 1, 2, 3`, heights below
/// and above 1, and tangential as well as normal directions.
pub fn ground_state_configurations() -> Vec<(Vec<f64>, Vec<f64>)> {
    vec![
        (vec![1.0], vec![1.0]),
        (vec![0.0, 0.5], vec![1.0, 0.0]),
        (vec![0.3, 1.0], vec![0.6, 0.8]),
        (vec![0.0, 0.0, 2.0], vec![0.0, 0.0, 1.0]),
        (vec![0.1, -0.2, 0.7], vec![1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]),
    ]
}

/// Symmetric ε-excision of the ground-state integral at `x` in direction `v`,
/// against its limit `−σ x_d^{−ps} w(x)^{p−1} f(v)`, `w = x_d^α`.
///
/// The transverse integral collapses to `f(v)`, leaving
/// `f(v)·x_d^{α(p−1)−ps}·N(ε/x_d)`. The reported lhs is the larger of the
/// final relative Cauchy difference and the relative distance to the limit.
pub fn ground_state_limit_check(params: &FracParams, x: &[f64], v: &[f64], eps: &[f64]) -> Result<VerificationReport> {
    params.require_ps_not_one()?;
    let d = params.d();
    if x.len() != d || v.len() != d {
        return Err(Error::InvalidParameter(format!("x and v must have length d = {d}")));
    }
    let xd = x[d - 1];
    if !(xd > 0.0 && xd.is_finite()) {
        return Err(Error::DomainError(format!("x_d must be positive, got {xd}")));
    }
    if eps.len() < 2 || eps.windows(2).any(|w| !(w[1] < w[0])) || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidParameter("eps sequence must be positive and strictly decreasing with >= 2 terms".into()));
    }
    let (p, ps, alpha) = (params.p(), params.ps(), params.alpha());
    let fv = f_of_v(params, v)?.value;
    let sig = sigma(params)?.value;
    let pre = fv * xd.powf(alpha * (p - 1.0) - ps);
    let limit = -sig * pre;

    let gs = GroundState { alpha, p, ps, tol: Tolerance { abs: 1e-300, rel: 1e-13, max_intervals: 4000 } };
    let mut n = gs.from(eps[0] / xd);
    let mut values = vec![pre * n];
    let mut diffs = Vec::with_capacity(eps.len() - 1);
    for w in eps.windows(2) {
        let inc = gs.increment(w[1] / xd, w[0] / xd);
        n += inc;
        values.push(pre * n);
        diffs.push((pre * inc).abs());
    }
    let scale = limit.abs().max(f64::MIN_POSITIVE);
    let last = *values.last().unwrap();
    let cauchy = diffs.last().copied().unwrap_or(0.0) / scale;
    let distance = (last - limit).abs() / scale;
    let tail = &diffs[diffs.len().saturating_sub(6)..];
    let monotone = tail.windows(2).all(|w| w[1] <= w[0]);
    let lhs = Estimate::exact(cauchy.max(distance), 0);
    Ok(VerificationReport::new("ground_state", Some(*params), None, lhs, Estimate::exact(GROUND_STATE_TOL, 0), 1.0)
        .with("x", json!(x))
        .with("v", json!(v))
        .with("limit", json!(limit))
        .with("f_of_v", json!(fv))
        .with("sigma", json!(sig))
        .with("values", json!(values))
        .with("cauchy_differences", json!(diffs))
        .with("final_cauchy_relative", json!(cauchy))
        .with("distance_relative", json!(distance))
        .with("monotone_tail", json!(monotone))
        .with("sources", json!({"sigma": "constants", "f_of_v": "constants"})))
}

/// `|a − t|^p − (1 − t)^{p−1}(|a|^p − t)` and the size of its terms.
pub fn basic_gap(a: f64, t: f64, p: f64) -> (f64, f64) {
    let l = (a - t).abs().powf(p);
    let r = (1.0 - t).powf(p - 1.0) * (a.abs().powf(p) - t);
    (l - r, l + (1.0 - t).powf(p - 1.0) * (a.abs().powf(p) + t))
}

/// Basic gap minus `c_p t^{p/2}|a − 1|^p`.
pub fn refined_gap(a: f64, t: f64, p: f64, cp: f64) -> (f64, f64) {
    let (g, scale) = basic_gap(a, t, p);
    let extra = cp * t.powf(p / 2.0) * (a - 1.0).abs().powf(p);
    (g - extra, scale + extra)
}

/// `Φ[u](x, y)` from its definition, with the size of its terms.
pub fn phi_direct(ux: &[f64], uy: &[f64], x: &[f64], y: &[f64], alpha: f64, p: f64) -> (f64, f64) {
    let d = x.len();
    let (wx, wy) = (x[d - 1].powf(alpha), y[d - 1].powf(alpha));
    let mut pxy = 0.0;
    let mut pyx = 0.0;
    let mut diff = 0.0;
    for i in 0..d {
        let h = y[i] - x[i];
        pxy += ux[i] * h;
        pyx += uy[i] * h;
        diff += (ux[i] - uy[i]) * h;
    }
    let first = diff.abs().powf(p);
    let ax = pxy.abs().powf(p) / wx.powf(p - 1.0);
    let ay = pyx.abs().powf(p) / wy.powf(p - 1.0);
    let ps = psi(wx - wy, p);
    (first - (ax - ay) * ps, first + (ax + ay) * ps.abs())
}

/// The reduced form `|w(x)π(y,x)|^p(|a − t|^p − (|a|^p − t)(1 − t)^{p−1})`
/// after swapping so that `w(x) ≥ w(y)`; `None` when `π(y, x) = 0`.
pub fn phi_reduced(ux: &[f64], uy: &[f64], x: &[f64], y: &[f64], alpha: f64, p: f64) -> Option<f64> {
    let d = x.len();
    let (mut ux, mut uy, mut x, mut y) = (ux, uy, x, y);
    if x[d - 1].powf(alpha) < y[d - 1].powf(alpha) {
        std::mem::swap(&mut ux, &mut uy);
        std::mem::swap(&mut x, &mut y);
    }
    let (wx, wy) = (x[d - 1].powf(alpha), y[d - 1].powf(alpha));
    let mut pxy = 0.0;
    let mut pyx = 0.0;
    for i in 0..d {
        pxy += ux[i] * (y[i] - x[i]);
        pyx += uy[i] * (x[i] - y[i]);
    }
    let (pxy, pyx) = (pxy / wx, pyx / wy);
    if pyx == 0.0 {
        return None;
    }
    let a = pxy / -pyx;
    let t = wy / wx;
    Some((wx * pyx).abs().powf(p) * basic_gap(a, t, p).0)
}

#[derive(Debug, Default, Clone, Copy)]
struct Scan {
    checked: u64,
    violations: u64,
    worst: f64,
}

impl Scan {
    fn push(&mut self, gap: f64, scale: f64) {
        self.checked += 1;
        let rel = gap / scale.max(1.0);
        if rel < -POINTWISE_TOL {
            self.violations += 1;
        }
        if self.checked == 1 || rel < self.worst {
            self.worst = rel;
        }
    }

    fn json(&self) -> Value {
        json!({"checked": self.checked, "violations": self.violations, "worst_relative": self.worst})
    }
}

pub const POINTWISE_GRID: usize = 1000;

/// Scan of the basic and (for `p ≥ 2`) refined scalar inequalities over a
/// `1000 × 1000` grid of `(a, t) ∈ [−10, 10] × [0, 1]` plus `n_samples`
/// random points, and of `Φ[u](x, y) ≥ 0` on `n_samples` random suite
/// fields and point pairs. The lhs counts violations.
pub fn pointwise_inequalities(p: f64, n_samples: usize, seed: u64) -> Result<VerificationReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    let cp = if p >= 2.0 { Some(c_p(p)?.value) } else { None };
    let mut basic = Scan::default();
    let mut refined = Scan::default();
    let mut visit = |a: f64, t: f64| {
        let (g, s) = basic_gap(a, t, p);
        basic.push(g, s);
        if let Some(cp) = cp {
            let (g, s) = refined_gap(a, t, p, cp);
            refined.push(g, s);
        }
    };
    let m = POINTWISE_GRID;
    for i in 0..m {
        let a = -10.0 + 20.0 * i as f64 / (m - 1) as f64;
        for j in 0..m {
            visit(a, j as f64 / (m - 1) as f64);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(job_seed("pointwise", "", seed));
    for _ in 0..n_samples {
        let a = rng.random_range(-10.0..=10.0);
        let t = rng.random_range(0.0..=1.0);
        visit(a, t);
    }

    let mut phi = Scan::default();
    let mut mismatch = 0u64;
    let s_values = [0.25, 0.4, 0.6, 0.75];
    let libs: Vec<Vec<FieldSpec>> = (1..=3).map(half_space_library).collect();
    for _ in 0..n_samples {
        let d = rng.random_range(1..=3usize);
        let s = s_values[rng.random_range(0..s_values.len())];
        let alpha = (p * s - 1.0) / p;
        let lib = &libs[d - 1];
        let u = &lib[rng.random_range(0..lib.len())];
        let b = u.support().expect("library half-space fields are compactly supported").expand(0.25);
        let mut draw = || -> Vec<f64> {
            (0..d)
                .map(|i| {
                    let lo = if i == d - 1 { b.lo[i].max(1e-3) } else { b.lo[i] };
                    rng.random_range(lo..b.hi[i])
                })
                .collect()
        };
        let (x, y) = (draw(), draw());
        let (ux, uy) = (u.eval(&x), u.eval(&y));
        let (g, scale) = phi_direct(&ux, &uy, &x, &y, alpha, p);
        phi.push(g, scale);
        if let Some(r) = phi_reduced(&ux, &uy, &x, &y, alpha, p) {
            if (r - g).abs() > 1e-9 * scale.max(1.0) {
                mismatch += 1;
            }
        }
    }
    let total = basic.violations + refined.violations + phi.violations + mismatch;
    let lhs = Estimate { value: total as f64, std_error: 0.0, n_samples: 0, method: EstimateMethod::Deterministic, seed };
    Ok(VerificationReport::new("pointwise", None, None, lhs, Estimate::exact(0.0, seed), 1.0)
        .with("p", json!(p))
        .with("c_p", json!(cp))
        .with("basic", basic.json())
        .with("refined", if cp.is_some() { refined.json() } else { Value::Null })
        .with("phi", phi.json())
        .with("reduction_mismatches", json!(mismatch))
        .with("sources", json!({"c_p": "constants"})))
}
