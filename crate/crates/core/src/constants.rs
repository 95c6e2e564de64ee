//! Constants of the Hardy and extension proofs: `σ`, `η₁`, `η₂`, `f(v)`,
//! `γ₁`, `γ₂`, `γ`, the kernel `J(y)` and the remainder constant `c_p`.
//!
//! Integrals over `ℝ^{d−1}` are empty when `d = 1`; the convention used here
//! is `η₁ = η₂ = γ₁ = 1` and `f(v) = |v_d|^p` in that case.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{adaptive, adaptive_lower, adaptive_real_line, adaptive_upper, minimize_scalar, QuadResult, Tolerance};
use crate::params::FracParams;
use crate::special::{beta, gamma, radial_power_integral};

/// Relative accuracy credited to a closed form built from [`gamma`].
const CLOSED_FORM_REL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantName {
    Sigma,
    Eta1,
    Eta2,
    FofV,
    Gamma1,
    Gamma2,
    Gamma,
    J,
    Cp,
    L1,
    L2,
    Kappa,
}

impl ConstantName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConstantName::Sigma => "sigma",
            ConstantName::Eta1 => "eta1",
            ConstantName::Eta2 => "eta2",
            ConstantName::FofV => "f_of_v",
            ConstantName::Gamma1 => "gamma1",
            ConstantName::Gamma2 => "gamma2",
            ConstantName::Gamma => "gamma",
            ConstantName::J => "j",
            ConstantName::Cp => "c_p",
            ConstantName::L1 => "l1",
            ConstantName::L2 => "l2",
            ConstantName::Kappa => "kappa",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    AdaptiveQuadrature,
    MonteCarlo,
    Minimization,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::AdaptiveQuadrature => "adaptive_quadrature",
            Method::MonteCarlo => "monte_carlo",
            Method::Minimization => "minimization",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantValue {
    pub name: ConstantName,
    /// `None` for `c_p`, which depends on `p` only.
    pub params: Option<FracParams>,
    pub p: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub v: Option<Vec<f64>>,
    pub value: f64,
    pub abs_error: f64,
    pub method: Method,
}

impl ConstantValue {
    fn new(name: ConstantName, params: &FracParams, value: f64, abs_error: f64, method: Method) -> Self {
        ConstantValue { name, params: Some(*params), p: params.p(), v: None, value, abs_error, method }
    }

    fn closed(name: ConstantName, params: &FracParams, value: f64) -> Self {
        Self::new(name, params, value, value.abs() * CLOSED_FORM_REL, Method::ClosedForm)
    }

    /// `name,d,p,s,value,abs_error,method`; `d` and `s` are blank for `c_p`.
    pub fn csv_row(&self) -> String {
        let (d, s) = match &self.params {
            Some(fp) => (fp.d().to_string(), fp.s().to_string()),
            None => (String::new(), String::new()),
        };
        format!("{},{},{},{},{:e},{:e},{}", self.name.as_str(), d, self.p, s, self.value, self.abs_error, self.method.as_str())
    }
}

pub const CSV_HEADER: &str = "name,d,p,s,value,abs_error,method";

fn tight() -> Tolerance {
    Tolerance { abs: 1e-13, rel: 1e-12, max_intervals: 20_000 }
}

/// `σ = ∫₀¹ |t^α − 1|^p / |t − 1|^{ps+1} dt`.
///
/// Split at 1/2. Near `t = 1` the integrand is `(|t^α−1|/(1−t))^p (1−t)^{β−1}`
/// with `β = p(1−s)`; the substitution `1 − t = w^{1/β}` makes it smooth.
/// Near `t = 0` with `α < 0` the factor `t^{ps−1}` is removed by `t = w^{1/ps}`.
pub fn sigma(params: &FracParams) -> Result<ConstantValue> {
    params.require_ps_not_one()?;
    let (p, ps, alpha) = (params.p(), params.ps(), params.alpha());
    let beta_exp = p - ps;

    let near_one = {
        let g = |w: f64| {
            if w <= 0.0 {
                return alpha.abs().powf(p);
            }
            let v = w.powf(1.0 / beta_exp);
            let e = (alpha * (-v).ln_1p()).exp_m1();
            (e.abs() / v).powf(p)
        };
        let r = adaptive(g, 0.0, 0.5f64.powf(beta_exp), tight());
        QuadResult { value: r.value / beta_exp, abs_error: r.abs_error / beta_exp, intervals: r.intervals }
    };

    let near_zero = if alpha < 0.0 {
        let g = |w: f64| {
            let t = w.powf(1.0 / ps);
            (1.0 - t.powf(-alpha)).abs().powf(p) * (1.0 - t).powf(-ps - 1.0)
        };
        let r = adaptive(g, 0.0, 0.5f64.powf(ps), tight());
        QuadResult { value: r.value / ps, abs_error: r.abs_error / ps, intervals: r.intervals }
    } else {
        adaptive(|t: f64| (t.powf(alpha) - 1.0).abs().powf(p) * (1.0 - t).powf(-ps - 1.0), 0.0, 0.5, tight())
    };

    let r = near_one + near_zero;
    Ok(ConstantValue::new(ConstantName::Sigma, params, r.value, r.abs_error.max(r.value * 1e-14), Method::AdaptiveQuadrature))
}

/// Exponent `a = (d + ps + p)/2` shared by `η₁`, `η₂`, `f` and `γ₁`.
fn weight_exponent(params: &FracParams) -> f64 {
    (params.d() as f64 + params.ps() + params.p()) / 2.0
}

/// `(η₁, η₂)` in closed form.
pub fn eta_constants(params: &FracParams) -> (ConstantValue, ConstantValue) {
    let d = params.d();
    if d == 1 {
        return (
            ConstantValue::new(ConstantName::Eta1, params, 1.0, 0.0, Method::ClosedForm),
            ConstantValue::new(ConstantName::Eta2, params, 1.0, 0.0, Method::ClosedForm),
        );
    }
    let (a, p, m) = (weight_exponent(params), params.p(), (d - 1) as f64);
    let eta1 = radial_power_integral(d - 1, a);
    let eta2 = PI.powf((m - 1.0) / 2.0) * gamma((p + 1.0) / 2.0) * gamma(a - m / 2.0 - p / 2.0) / gamma(a);
    (ConstantValue::closed(ConstantName::Eta1, params, eta1), ConstantValue::closed(ConstantName::Eta2, params, eta2))
}

/// `min(η₁, η₂)`.
pub fn eta_min(params: &FracParams) -> f64 {
    let (e1, e2) = eta_constants(params);
    e1.value.min(e2.value)
}

/// `∫_{ℝ^m} g(z)(1 + |z|²)^{−a} dz` by nested adaptive quadrature, `m ≤ 2`,
/// with `g` a function of `(z₁, z₂)`. Used as an independent oracle.
fn weighted_plane_integral<G: Fn(f64, f64) -> f64>(m: usize, a: f64, g: G) -> Result<QuadResult> {
    let tol = Tolerance { abs: 1e-12, rel: 1e-11, max_intervals: 4000 };
    match m {
        0 => Ok(QuadResult { value: g(0.0, 0.0), abs_error: 0.0, intervals: 0 }),
        1 => Ok(adaptive_real_line(|z| g(z, 0.0) * (1.0 + z * z).powf(-a), 0.0, tol)),
        2 => {
            // inner values get tiny far out; only a relative tolerance keeps them accurate there
            let itol = Tolerance { abs: 1e-300, rel: 1e-13, max_intervals: 4000 };
            let inner = |z1: f64| adaptive_real_line(|z2| g(z1, z2) * (1.0 + z1 * z1 + z2 * z2).powf(-a), 0.0, itol).value;
            Ok(adaptive_real_line(inner, 0.0, tol))
        }
        _ => Err(Error::InvalidParameter("direct quadrature oracle supports d <= 3".into())),
    }
}

/// `(η₁, η₂)` by direct quadrature of the defining integrals (d ≤ 3).
pub fn eta_by_quadrature(params: &FracParams) -> Result<(QuadResult, QuadResult)> {
    let (a, p, m) = (weight_exponent(params), params.p(), params.d() - 1);
    if m == 0 {
        let one = QuadResult { value: 1.0, abs_error: 0.0, intervals: 0 };
        return Ok((one, one));
    }
    Ok((weighted_plane_integral(m, a, |_, _| 1.0)?, weighted_plane_integral(m, a, |z1, _| z1.abs().powf(p))?))
}

/// `f(v) = ∫_{ℝ^{d−1}} |v′·z′ + v_d|^p (1 + |z′|²)^{−(d+ps+p)/2} dz′`.
///
/// Rotating `v′` onto the first axis and integrating out the remaining
/// `d − 2` directions leaves
/// `π^{(m−1)/2} Γ(b)/Γ(a) ∫_ℝ |c z + v_d|^p (1 + z²)^{−b} dz`
/// with `c = |v′|`, `m = d − 1`, `b = a − (m−1)/2`.
pub fn f_of_v(params: &FracParams, v: &[f64]) -> Result<ConstantValue> {
    let d = params.d();
    if v.len() != d {
        return Err(Error::InvalidParameter(format!("v has length {} but d = {d}", v.len())));
    }
    let p = params.p();
    let vd = v[d - 1];
    let c = v[..d - 1].iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut out = if d == 1 {
        ConstantValue::new(ConstantName::FofV, params, vd.abs().powf(p), 0.0, Method::ClosedForm)
    } else if c == 0.0 || !(vd / c).is_finite() {
        let (e1, _) = eta_constants(params);
        let val = vd.abs().powf(p) * e1.value;
        ConstantValue::new(ConstantName::FofV, params, val, val * CLOSED_FORM_REL, Method::ClosedForm)
    } else {
        let (a, m) = (weight_exponent(params), (d - 1) as f64);
        let b = a - (m - 1.0) / 2.0;
        let pre = PI.powf((m - 1.0) / 2.0) * gamma(b) / gamma(a);
        let kink = -vd / c;
        let g = |z: f64| (c * z + vd).abs().powf(p) * (1.0 + z * z).powf(-b);
        let tol = Tolerance { abs: 1e-13, rel: 1e-12, max_intervals: 8000 };
        // the weight's bulk sits in [−1, 1]; the kink can be far from it when c ≪ |v_d|
        // so the pieces in between grow geometrically
        let mut cuts = vec![-1.0, 1.0, kink];
        let mut x = 2.0;
        while x < kink.abs() {
            cuts.push(x.copysign(kink));
            x *= 2.0;
        }
        cuts.sort_by(f64::total_cmp);
        let mut r = adaptive_lower(g, cuts[0], tol) + adaptive_upper(g, cuts[cuts.len() - 1], tol);
        for w in cuts.windows(2) {
            r = r + adaptive(g, w[0], w[1], tol);
        }
        ConstantValue::new(ConstantName::FofV, params, pre * r.value, pre * r.abs_error + pre * r.value * 1e-14, Method::AdaptiveQuadrature)
    };
    out.v = Some(v.to_vec());
    Ok(out)
}

/// `(γ₁, γ₂, γ = γ₁γ₂)` with `γ₂ = B(p+1, ps)`.
pub fn gamma_constants(params: &FracParams) -> (ConstantValue, ConstantValue, ConstantValue) {
    let d = params.d();
    let (p, ps) = (params.p(), params.ps());
    let g1 = if d == 1 { 1.0 } else { radial_power_integral(d - 1, (d as f64 + (params.s() + 1.0) * p) / 2.0) };
    let g2 = beta(p + 1.0, ps);
    let g1c = if d == 1 {
        ConstantValue::new(ConstantName::Gamma1, params, 1.0, 0.0, Method::ClosedForm)
    } else {
        ConstantValue::closed(ConstantName::Gamma1, params, g1)
    };
    (g1c, ConstantValue::closed(ConstantName::Gamma2, params, g2), ConstantValue::closed(ConstantName::Gamma, params, g1 * g2))
}

/// `γ₂ = ∫₀^∞ w^p/(1+w)^{p(s+1)+1} dw` by adaptive quadrature.
pub fn gamma2_by_quadrature(params: &FracParams) -> QuadResult {
    let (p, s) = (params.p(), params.s());
    let e = p * (s + 1.0) + 1.0;
    let tol = Tolerance { abs: 1e-14, rel: 1e-13, max_intervals: 8000 };
    adaptive(|w: f64| w.powf(p) * (1.0 + w).powf(-e), 0.0, 1.0, tol) + adaptive_upper(|w: f64| w.powf(p) * (1.0 + w).powf(-e), 1.0, tol)
}

/// `γ₁` by direct quadrature of its defining integral (d ≤ 3).
pub fn gamma1_by_quadrature(params: &FracParams) -> Result<QuadResult> {
    let d = params.d();
    weighted_plane_integral(d - 1, (d as f64 + (params.s() + 1.0) * params.p()) / 2.0, |_, _| 1.0)
}

/// `J(y) = γ y_d^{−ps}`.
pub fn j_kernel(params: &FracParams, y_d: f64) -> Result<ConstantValue> {
    if !(y_d > 0.0 && y_d.is_finite()) {
        return Err(Error::InvalidParameter(format!("y_d = {y_d} must be positive")));
    }
    let (_, _, g) = gamma_constants(params);
    Ok(ConstantValue::closed(ConstantName::J, params, g.value * y_d.powf(-params.ps())))
}

/// `∫_{ℝᵈ₊} x_d^p ((y_d + x_d)² + |x′|²)^{−(d+(s+1)p)/2} dx` by nested
/// quadrature (radial in `x′`), `d ≤ 3`.
pub fn j_kernel_by_quadrature(params: &FracParams, y_d: f64) -> Result<f64> {
    let d = params.d();
    let (p, e) = (params.p(), (d as f64 + (params.s() + 1.0) * params.p()) / 2.0);
    let tol = Tolerance { abs: 1e-13, rel: 1e-10, max_intervals: 4000 };
    let itol = Tolerance { abs: 1e-300, rel: 1e-12, max_intervals: 4000 };
    let inner = |xd: f64| -> f64 {
        let h2 = (y_d + xd) * (y_d + xd);
        match d {
            1 => h2.powf(-e),
            2 => adaptive_real_line(|x: f64| (h2 + x * x).powf(-e), 0.0, itol).value,
            3 => 2.0 * PI * adaptive_upper(|r: f64| r * (h2 + r * r).powf(-e), 0.0, itol).value,
            _ => f64::NAN,
        }
    };
    if d > 3 {
        return Err(Error::InvalidParameter("direct quadrature oracle supports d <= 3".into()));
    }
    let f = |xd: f64| xd.powf(p) * inner(xd);
    Ok((adaptive(f, 0.0, y_d, tol) + adaptive_upper(f, y_d, tol)).value)
}

/// `(argmin, min)` of `(1−τ)^p − τ^p + pτ^{p−1}` over `[0, 1/2]`.
pub fn c_p_minimizer(p: f64) -> Result<(f64, f64)> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::ExcludedParameter(format!("c_p needs p >= 2, got p = {p}")));
    }
    let g = |t: f64| (1.0 - t).powf(p) - t.powf(p) + p * t.powf(p - 1.0);
    Ok(minimize_scalar(g, 0.0, 0.5, 2000, 1e-12))
}

/// `c_p = min_{τ∈(0,1/2)} ((1−τ)^p − τ^p + pτ^{p−1})`.
pub fn c_p(p: f64) -> Result<ConstantValue> {
    let (_, v) = c_p_minimizer(p)?;
    Ok(ConstantValue { name: ConstantName::Cp, params: None, p, v: None, value: v, abs_error: 1e-12, method: Method::Minimization })
}

/// All Hardy/extension constants for one parameter point.
pub fn constant_table(params: &FracParams) -> Result<Vec<ConstantValue>> {
    let mut out = vec![sigma(params)?];
    let (e1, e2) = eta_constants(params);
    let (g1, g2, g) = gamma_constants(params);
    out.extend([e1, e2, g1, g2, g]);
    if params.p() >= 2.0 {
        out.push(c_p(params.p())?);
    }
    Ok(out)
}
