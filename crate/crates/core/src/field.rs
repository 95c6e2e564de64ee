//! Vector fields over the half-space `{x_d > 0}` and the whole space, the
//! projected difference quotient, the anisotropic rescaling `F_λ`, and the
//! canonical library of analytic test fields.
//!
//! # JSON schema
//!
//! A [`FieldSpec`] serializes to
//!
//! ```json
//! {
//!   "id": "bump_far",
//!   "family": "bump",
//!   "parameters": { "center": [0.0, 2.0], "radii": [1.0, 1.0], "amplitude": [0.6, 1.0], "linear": null },
//!   "domain_tag": { "kind": "half_space" },
//!   "normal_scale": 1.0
//! }
//! ```
//!
//! `family` is one of `bump`, `separable_bump`, `gaussian`, `skew_affine`;
//! `parameters` holds the family struct below with unknown keys rejected.
//! `domain_tag.kind` is `half_space`, `whole_space` or `ball` (the latter
//! with `center` and `radius`). `normal_scale` is the accumulated `λ` of
//! [`scale_field`] and defaults to 1. Custom fields carry closures and do
//! not serialize.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = Vec<Vec<f64>>;

/// Half-width of the effective support of a Gaussian, in units of its width.
pub const GAUSSIAN_BOX_WIDTHS: f64 = 3.0;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    if a.len() == 1 {
        a[0].abs()
    } else {
        dot(a, a).sqrt()
    }
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SupportBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        debug_assert_eq!(lo.len(), hi.len());
        SupportBox { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn diameter(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub fn union(&self, o: &SupportBox) -> SupportBox {
        SupportBox {
            lo: self.lo.iter().zip(&o.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&o.hi).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    pub fn intersect(&self, o: &SupportBox) -> SupportBox {
        SupportBox {
            lo: self.lo.iter().zip(&o.lo).map(|(a, b)| a.max(*b)).collect(),
            hi: self.hi.iter().zip(&o.hi).map(|(a, b)| a.min(*b)).collect(),
        }
    }

    pub fn expand(&self, pad: f64) -> SupportBox {
        SupportBox {
            lo: self.lo.iter().map(|a| a - pad).collect(),
            hi: self.hi.iter().map(|b| b + pad).collect(),
        }
    }

    /// Distance from the box to the hyperplane `x_d = 0` (negative if it crosses).
    pub fn boundary_gap(&self) -> f64 {
        self.lo[self.dim() - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainTag {
    HalfSpace,
    WholeSpace,
    Ball { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    C1Compact,
    Schwartz,
    Affine,
    Lipschitz,
}

/// Known membership in the kernel of a seminorm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullKind {
    None,
    /// Identically zero.
    Zero,
    /// `x ↦ Ax + b` with `A = −Aᵀ`: zero projected seminorm.
    Rigid,
}

/// Anything the quadrature engines can integrate.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval_into(&self, x: &[f64], out: &mut [f64]);

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out);
        out
    }

    /// Box outside of which the field vanishes (or, for Schwartz fields, is
    /// bounded by [`VectorField::outside_sup`]). `None` for fields without
    /// bounded support.
    fn support(&self) -> Option<SupportBox>;

    /// Supremum of `|u|` outside [`VectorField::support`].
    fn outside_sup(&self) -> f64 {
        0.0
    }

    fn domain_tag(&self) -> DomainTag;

    fn smoothness(&self) -> Smoothness;

    fn null_kind(&self) -> NullKind {
        NullKind::None
    }

    fn label(&self) -> String;
}

fn bump_profile(q: f64) -> f64 {
    if q < 1.0 { (1.0 - 1.0 / (1.0 - q)).exp() } else { 0.0 }
}

/// d/dq of [`bump_profile`].
fn bump_profile_dq(q: f64) -> f64 {
    if q < 1.0 {
        let om = 1.0 - q;
        -bump_profile(q) / (om * om)
    } else {
        0.0
    }
}

/// `u(x) = φ(Σ((x_i − c_i)/R_i)²)·(a + A(x − c))` with the mollifier profile
/// `φ(q) = exp(1 − 1/(1 − q))` on `q < 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub amplitude: Vec<f64>,
    #[serde(default)]
    pub linear: Option<Matrix>,
}

/// `u(x) = a·g(x′)·h(x_d)` with radial bump `g` in the tangential variables
/// and a one-dimensional bump `h` in the normal variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparableBump {
    pub tangential_center: Vec<f64>,
    pub tangential_radius: f64,
    pub normal_center: f64,
    pub normal_radius: f64,
    pub amplitude: Vec<f64>,
}

impl SeparableBump {
    /// Tangential factor `g(x′)`; identically 1 when `d = 1`.
    pub fn tangential(&self, xt: &[f64]) -> f64 {
        if xt.is_empty() {
            return 1.0;
        }
        let q: f64 = xt
            .iter()
            .zip(&self.tangential_center)
            .map(|(x, c)| ((x - c) / self.tangential_radius).powi(2))
            .sum();
        bump_profile(q)
    }

    /// Normal factor `h(x_d)`.
    pub fn normal(&self, xd: f64) -> f64 {
        bump_profile(((xd - self.normal_center) / self.normal_radius).powi(2))
    }
}

/// `u(x) = a·exp(−π Σ((x_i − c_i)/w_i)²)`, with Fourier transform
/// `a·Π w_i·exp(−π Σ w_i² ξ_i²)·e^{−2πi c·ξ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gaussian {
    pub center: Vec<f64>,
    pub widths: Vec<f64>,
    pub amplitude: Vec<f64>,
}

impl Gaussian {
    /// `|û(ξ)|²/|a|²`.
    pub fn transform_sq(&self, xi: &[f64]) -> f64 {
        let w: f64 = self.widths.iter().product();
        let q: f64 = self.widths.iter().zip(xi).map(|(w, x)| (w * x).powi(2)).sum();
        w * w * (-2.0 * std::f64::consts::PI * q).exp()
    }
}

/// `u(x) = Ax + b` with `A = −Aᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewAffine {
    pub matrix: Matrix,
    pub offset: Vec<f64>,
}

pub type EvalFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
pub type GradFn = dyn Fn(&[f64]) -> Matrix + Send + Sync;

/// Programmatically supplied field; metadata is trusted as declared.
#[derive(Clone)]
pub struct CustomField {
    pub eval: Arc<EvalFn>,
    pub gradient: Option<Arc<GradFn>>,
    pub support: Option<SupportBox>,
    pub smoothness: Smoothness,
}

impl std::fmt::Debug for CustomField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CustomField")
            .field("support", &self.support)
            .field("smoothness", &self.smoothness)
            .field("gradient", &self.gradient.is_some())
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum Family {
    Bump(Bump),
    SeparableBump(SeparableBump),
    Gaussian(Gaussian),
    SkewAffine(SkewAffine),
    Custom(CustomField),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Bump(_) => "bump",
            Family::SeparableBump(_) => "separable_bump",
            Family::Gaussian(_) => "gaussian",
            Family::SkewAffine(_) => "skew_affine",
            Family::Custom(_) => "custom",
        }
    }
}

/// Immutable description of a closed-form vector field.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    id: String,
    dim: usize,
    family: Family,
    domain_tag: DomainTag,
    normal_scale: f64,
}

fn check_len(what: &str, v: &[f64], d: usize) -> Result<()> {
    if v.len() != d {
        return Err(Error::InvalidParameter(format!("{what} has length {} but d = {d}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn check_matrix(what: &str, m: &Matrix, d: usize) -> Result<()> {
    if m.len() != d {
        return Err(Error::InvalidParameter(format!("{what} must be {d}x{d}")));
    }
    m.iter().try_for_each(|row| check_len(what, row, d))
}

impl FieldSpec {
    fn build(id: impl Into<String>, dim: usize, family: Family, domain_tag: DomainTag) -> Result<Self> {
        let f = FieldSpec { id: id.into(), dim, family, domain_tag, normal_scale: 1.0 };
        f.validate()?;
        Ok(f)
    }

    pub fn bump(
        id: impl Into<String>,
        center: Vec<f64>,
        radii: Vec<f64>,
        amplitude: Vec<f64>,
        domain_tag: DomainTag,
    ) -> Result<Self> {
        let d = center.len();
        Self::build(id, d, Family::Bump(Bump { center, radii, amplitude, linear: None }), domain_tag)
    }

    /// Adds the linear modulation `A(x − c)` to a bump.
    pub fn with_linear(mut self, a: Matrix) -> Result<Self> {
        match &mut self.family {
            Family::Bump(b) => b.linear = Some(a),
            _ => return Err(Error::InvalidParameter("linear part only applies to bumps".into())),
        }
        self.validate()?;
        Ok(self)
    }

    pub fn separable_bump(id: impl Into<String>, sep: SeparableBump, domain_tag: DomainTag) -> Result<Self> {
        let d = sep.amplitude.len();
        Self::build(id, d, Family::SeparableBump(sep), domain_tag)
    }

    pub fn gaussian(id: impl Into<String>, center: Vec<f64>, widths: Vec<f64>, amplitude: Vec<f64>) -> Result<Self> {
        let d = center.len();
        Self::build(id, d, Family::Gaussian(Gaussian { center, widths, amplitude }), DomainTag::WholeSpace)
    }

    /// Skew-affine field on a ball.
    pub fn skew_affine(id: impl Into<String>, matrix: Matrix, offset: Vec<f64>, center: Vec<f64>, radius: f64) -> Result<Self> {
        let d = offset.len();
        Self::build(
            id,
            d,
            Family::SkewAffine(SkewAffine { matrix, offset }),
            DomainTag::Ball { center, radius },
        )
    }

    pub fn custom(id: impl Into<String>, dim: usize, custom: CustomField, domain_tag: DomainTag) -> Result<Self> {
        Self::build(id, dim, Family::Custom(custom), domain_tag)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(self.normal_scale > 0.0 && self.normal_scale.is_finite()) {
            return Err(Error::InvalidParameter("normal_scale must be positive".into()));
        }
        match &self.family {
            Family::Bump(b) => {
                check_len("center", &b.center, d)?;
                check_len("radii", &b.radii, d)?;
                check_len("amplitude", &b.amplitude, d)?;
                if b.radii.iter().any(|r| *r <= 0.0) {
                    return Err(Error::InvalidParameter("radii must be positive".into()));
                }
                if let Some(a) = &b.linear {
                    check_matrix("linear", a, d)?;
                }
            }
            Family::SeparableBump(sb) => {
                check_len("amplitude", &sb.amplitude, d)?;
                check_len("tangential_center", &sb.tangential_center, d - 1)?;
                if !(sb.tangential_radius > 0.0 && sb.normal_radius > 0.0) {
                    return Err(Error::InvalidParameter("radii must be positive".into()));
                }
            }
            Family::Gaussian(g) => {
                check_len("center", &g.center, d)?;
                check_len("widths", &g.widths, d)?;
                check_len("amplitude", &g.amplitude, d)?;
                if g.widths.iter().any(|w| *w <= 0.0) {
                    return Err(Error::InvalidParameter("widths must be positive".into()));
                }
                if self.domain_tag != DomainTag::WholeSpace {
                    return Err(Error::DomainError("gaussian fields live on the whole space".into()));
                }
            }
            Family::SkewAffine(sa) => {
                check_matrix("matrix", &sa.matrix, d)?;
                check_len("offset", &sa.offset, d)?;
                for i in 0..d {
                    for j in 0..d {
                        if sa.matrix[i][j] != -sa.matrix[j][i] {
                            return Err(Error::InvalidParameter("skew-affine matrix must satisfy A = -A^T".into()));
                        }
                    }
                }
                if !matches!(self.domain_tag, DomainTag::Ball { .. }) {
                    return Err(Error::DomainError("skew-affine fields are posed on a ball".into()));
                }
            }
            Family::Custom(c) => {
                if let Some(b) = &c.support {
                    check_len("support.lo", &b.lo, d)?;
                    check_len("support.hi", &b.hi, d)?;
                }
            }
        }
        if let DomainTag::Ball { center, radius } = &self.domain_tag {
            check_len("ball center", center, d)?;
            if *radius <= 0.0 {
                return Err(Error::InvalidParameter("ball radius must be positive".into()));
            }
        }
        if self.domain_tag == DomainTag::HalfSpace && self.smoothness() == Smoothness::C1Compact {
            match self.support() {
                Some(b) if b.boundary_gap() > 0.0 => {}
                Some(b) => return Err(Error::BoundaryContact(b.boundary_gap())),
                None => return Err(Error::UnsupportedField("half-space field needs bounded support".into())),
            }
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn normal_scale(&self) -> f64 {
        self.normal_scale
    }

    /// Rigid translation by `shift` (all families except custom).
    pub fn translated(&self, shift: &[f64]) -> Result<FieldSpec> {
        check_len("shift", shift, self.dim)?;
        let mut out = self.clone();
        let add = |c: &mut Vec<f64>| c.iter_mut().zip(shift).for_each(|(c, s)| *c += s);
        match &mut out.family {
            Family::Bump(b) => add(&mut b.center),
            Family::SeparableBump(sb) => {
                sb.tangential_center.iter_mut().zip(shift).for_each(|(c, s)| *c += s);
                sb.normal_center += shift[self.dim - 1] * self.normal_scale;
            }
            Family::Gaussian(g) => add(&mut g.center),
            _ => return Err(Error::UnsupportedField("translation not defined for this family".into())),
        }
        if let Family::Bump(b) = &mut out.family {
            // undo for the normal coordinate, which lives in pre-scaling units
            let last = self.dim - 1;
            b.center[last] += shift[last] * (self.normal_scale - 1.0);
        }
        out.validate()?;
        Ok(out)
    }

    /// Evaluation of the unscaled family at `x`.
    fn eval_base(&self, x: &[f64], out: &mut [f64]) {
        match &self.family {
            Family::Bump(b) => {
                let q: f64 = x
                    .iter()
                    .zip(b.center.iter().zip(&b.radii))
                    .map(|(x, (c, r))| ((x - c) / r).powi(2))
                    .sum();
                let phi = bump_profile(q);
                if phi == 0.0 {
                    out.iter_mut().for_each(|o| *o = 0.0);
                    return;
                }
                for (i, o) in out.iter_mut().enumerate() {
                    let mut v = b.amplitude[i];
                    if let Some(a) = &b.linear {
                        v += a[i].iter().zip(x.iter().zip(&b.center)).map(|(aij, (x, c))| aij * (x - c)).sum::<f64>();
                    }
                    *o = phi * v;
                }
            }
            Family::SeparableBump(sb) => {
                let d = self.dim;
                let s = sb.normal(x[d - 1]) * sb.tangential(&x[..d - 1]);
                out.iter_mut().zip(&sb.amplitude).for_each(|(o, a)| *o = a * s);
            }
            Family::Gaussian(g) => {
                let q: f64 = x
                    .iter()
                    .zip(g.center.iter().zip(&g.widths))
                    .map(|(x, (c, w))| ((x - c) / w).powi(2))
                    .sum();
                let e = (-std::f64::consts::PI * q).exp();
                out.iter_mut().zip(&g.amplitude).for_each(|(o, a)| *o = a * e);
            }
            Family::SkewAffine(sa) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = sa.offset[i] + dot(&sa.matrix[i], x);
                }
            }
            Family::Custom(c) => (c.eval)(x, out),
        }
    }

    fn gradient_base(&self, x: &[f64]) -> Option<Matrix> {
        let d = self.dim;
        match &self.family {
            Family::Bump(b) => {
                let q: f64 = x
                    .iter()
                    .zip(b.center.iter().zip(&b.radii))
                    .map(|(x, (c, r))| ((x - c) / r).powi(2))
                    .sum();
                let phi = bump_profile(q);
                let dphi = bump_profile_dq(q);
                let dq: Vec<f64> = (0..d).map(|j| 2.0 * (x[j] - b.center[j]) / (b.radii[j] * b.radii[j])).collect();
                let mut g = vec![vec![0.0; d]; d];
                for i in 0..d {
                    let mut v = b.amplitude[i];
                    if let Some(a) = &b.linear {
                        v += (0..d).map(|j| a[i][j] * (x[j] - b.center[j])).sum::<f64>();
                    }
                    for j in 0..d {
                        g[i][j] = dphi * dq[j] * v + b.linear.as_ref().map_or(0.0, |a| phi * a[i][j]);
                    }
                }
                Some(g)
            }
            Family::SeparableBump(sb) => {
                let xt = &x[..d - 1];
                let gt = sb.tangential(xt);
                let qt: f64 = xt
                    .iter()
                    .zip(&sb.tangential_center)
                    .map(|(x, c)| ((x - c) / sb.tangential_radius).powi(2))
                    .sum();
                let qn = ((x[d - 1] - sb.normal_center) / sb.normal_radius).powi(2);
                let h = bump_profile(qn);
                let mut grad_s = vec![0.0; d];
                for j in 0..d - 1 {
                    let dqj = 2.0 * (x[j] - sb.tangential_center[j]) / sb.tangential_radius.powi(2);
                    grad_s[j] = bump_profile_dq(qt) * dqj * h;
                }
                grad_s[d - 1] = gt * bump_profile_dq(qn) * 2.0 * (x[d - 1] - sb.normal_center) / sb.normal_radius.powi(2);
                Some(sb.amplitude.iter().map(|a| grad_s.iter().map(|g| a * g).collect()).collect())
            }
            Family::Gaussian(gs) => {
                let q: f64 = x
                    .iter()
                    .zip(gs.center.iter().zip(&gs.widths))
                    .map(|(x, (c, w))| ((x - c) / w).powi(2))
                    .sum();
                let e = (-std::f64::consts::PI * q).exp();
                let de: Vec<f64> = (0..d)
                    .map(|j| -2.0 * std::f64::consts::PI * (x[j] - gs.center[j]) / gs.widths[j].powi(2) * e)
                    .collect();
                Some(gs.amplitude.iter().map(|a| de.iter().map(|g| a * g).collect()).collect())
            }
            Family::SkewAffine(sa) => Some(sa.matrix.clone()),
            Family::Custom(c) => c.gradient.as_ref().map(|g| g(x)),
        }
    }

    fn scaled_point(&self, x: &[f64]) -> Vec<f64> {
        let mut xs = x.to_vec();
        xs[self.dim - 1] *= self.normal_scale;
        xs
    }

    /// Jacobian `∂u_i/∂x_j` (row `i`), when available.
    pub fn gradient(&self, x: &[f64]) -> Option<Matrix> {
        let lam = self.normal_scale;
        if lam == 1.0 {
            return self.gradient_base(x);
        }
        let d = self.dim;
        let mut g = self.gradient_base(&self.scaled_point(x))?;
        for (i, row) in g.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let row_factor = if i < d - 1 { 1.0 / lam } else { 1.0 };
                let col_factor = if j == d - 1 { lam } else { 1.0 };
                *v *= row_factor * col_factor;
            }
        }
        Some(g)
    }

    pub fn has_gradient(&self) -> bool {
        !matches!(&self.family, Family::Custom(c) if c.gradient.is_none())
    }

    fn base_support(&self) -> Option<SupportBox> {
        match &self.family {
            Family::Bump(b) => Some(SupportBox::new(
                b.center.iter().zip(&b.radii).map(|(c, r)| c - r).collect(),
                b.center.iter().zip(&b.radii).map(|(c, r)| c + r).collect(),
            )),
            Family::SeparableBump(sb) => {
                let mut lo: Vec<f64> = sb.tangential_center.iter().map(|c| c - sb.tangential_radius).collect();
                let mut hi: Vec<f64> = sb.tangential_center.iter().map(|c| c + sb.tangential_radius).collect();
                lo.push(sb.normal_center - sb.normal_radius);
                hi.push(sb.normal_center + sb.normal_radius);
                Some(SupportBox::new(lo, hi))
            }
            Family::Gaussian(g) => Some(SupportBox::new(
                g.center.iter().zip(&g.widths).map(|(c, w)| c - GAUSSIAN_BOX_WIDTHS * w).collect(),
                g.center.iter().zip(&g.widths).map(|(c, w)| c + GAUSSIAN_BOX_WIDTHS * w).collect(),
            )),
            Family::SkewAffine(_) => None,
            Family::Custom(c) => c.support.clone(),
        }
    }

    /// Maximum Frobenius norm of the Jacobian on a grid over the support;
    /// a Lipschitz bound for fields supported in a convex set.
    pub fn lipschitz_bound(&self) -> Option<f64> {
        let b = self.support()?;
        if !self.has_gradient() {
            return None;
        }
        let d = self.dim;
        let per_dim = match d {
            1 => 4001,
            2 => 161,
            3 => 41,
            _ => 12,
        };
        let mut best: f64 = 0.0;
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0; d];
        loop {
            for i in 0..d {
                x[i] = b.lo[i] + (b.hi[i] - b.lo[i]) * idx[i] as f64 / (per_dim - 1) as f64;
            }
            let g = self.gradient(&x)?;
            best = best.max(g.iter().flatten().map(|v| v * v).sum::<f64>().sqrt());
            let mut k = 0;
            loop {
                if k == d {
                    // grid spacing slack: the Hessian is not tracked, so pad by 5%
                    return Some(best * 1.05);
                }
                idx[k] += 1;
                if idx[k] < per_dim {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_repr()?)?)
    }

    pub fn from_json(s: &str) -> Result<FieldSpec> {
        let repr: FieldSpecRepr = serde_json::from_str(s)?;
        FieldSpec::try_from(repr)
    }

    fn to_repr(&self) -> Result<FieldSpecRepr> {
        let parameters = match &self.family {
            Family::Bump(b) => serde_json::to_value(b)?,
            Family::SeparableBump(b) => serde_json::to_value(b)?,
            Family::Gaussian(b) => serde_json::to_value(b)?,
            Family::SkewAffine(b) => serde_json::to_value(b)?,
            Family::Custom(_) => return Err(Error::Serialization("custom fields cannot be serialized".into())),
        };
        Ok(FieldSpecRepr {
            id: self.id.clone(),
            family: self.family.name().to_string(),
            parameters,
            domain_tag: self.domain_tag.clone(),
            normal_scale: self.normal_scale,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldSpecRepr {
    id: String,
    family: String,
    parameters: serde_json::Value,
    domain_tag: DomainTag,
    #[serde(default = "unit_scale")]
    normal_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl TryFrom<FieldSpecRepr> for FieldSpec {
    type Error = Error;
    fn try_from(r: FieldSpecRepr) -> Result<Self> {
        let (family, dim) = match r.family.as_str() {
            "bump" => {
                let b: Bump = serde_json::from_value(r.parameters)?;
                let d = b.center.len();
                (Family::Bump(b), d)
            }
            "separable_bump" => {
                let b: SeparableBump = serde_json::from_value(r.parameters)?;
                let d = b.amplitude.len();
                (Family::SeparableBump(b), d)
            }
            "gaussian" => {
                let b: Gaussian = serde_json::from_value(r.parameters)?;
                let d = b.center.len();
                (Family::Gaussian(b), d)
            }
            "skew_affine" => {
                let b: SkewAffine = serde_json::from_value(r.parameters)?;
                let d = b.offset.len();
                (Family::SkewAffine(b), d)
            }
            other => return Err(Error::Serialization(format!("unknown field family `{other}`"))),
        };
        let f = FieldSpec { id: r.id, dim, family, domain_tag: r.domain_tag, normal_scale: r.normal_scale };
        f.validate()?;
        Ok(f)
    }
}

impl Serialize for FieldSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_repr().map_err(serde::ser::Error::custom)?.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FieldSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = FieldSpecRepr::deserialize(d)?;
        FieldSpec::try_from(repr).map_err(serde::de::Error::custom)
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, o: &FieldSpec) -> bool {
        match (self.to_repr(), o.to_repr()) {
            (Ok(a), Ok(b)) => serde_json::to_value(a).ok() == serde_json::to_value(b).ok(),
            _ => false,
        }
    }
}

impl VectorField for FieldSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let lam = self.normal_scale;
        if lam == 1.0 {
            self.eval_base(x, out);
            return;
        }
        let d = self.dim;
        if d <= 16 {
            let mut xs = [0.0; 16];
            xs[..d].copy_from_slice(x);
            xs[d - 1] *= lam;
            self.eval_base(&xs[..d], out);
        } else {
            self.eval_base(&self.scaled_point(x), out);
        }
        out[..d - 1].iter_mut().for_each(|v| *v /= lam);
    }

    fn support(&self) -> Option<SupportBox> {
        let mut b = self.base_support()?;
        let d = self.dim;
        b.lo[d - 1] /= self.normal_scale;
        b.hi[d - 1] /= self.normal_scale;
        Some(b)
    }

    fn outside_sup(&self) -> f64 {
        match &self.family {
            Family::Gaussian(g) => norm(&g.amplitude) * (-std::f64::consts::PI * GAUSSIAN_BOX_WIDTHS.powi(2)).exp(),
            _ => 0.0,
        }
    }

    fn domain_tag(&self) -> DomainTag {
        self.domain_tag.clone()
    }

    fn smoothness(&self) -> Smoothness {
        match &self.family {
            Family::Bump(_) | Family::SeparableBump(_) => Smoothness::C1Compact,
            Family::Gaussian(_) => Smoothness::Schwartz,
            Family::SkewAffine(_) => Smoothness::Affine,
            Family::Custom(c) => c.smoothness,
        }
    }

    fn null_kind(&self) -> NullKind {
        let zero = |v: &[f64]| v.iter().all(|a| *a == 0.0);
        match &self.family {
            Family::Bump(b) => {
                if zero(&b.amplitude) && b.linear.as_ref().is_none_or(|a| a.iter().all(|r| zero(r))) {
                    NullKind::Zero
                } else {
                    NullKind::None
                }
            }
            Family::SeparableBump(sb) if zero(&sb.amplitude) => NullKind::Zero,
            Family::Gaussian(g) if zero(&g.amplitude) => NullKind::Zero,
            Family::SkewAffine(sa) => {
                if zero(&sa.offset) && sa.matrix.iter().all(|r| zero(r)) {
                    NullKind::Zero
                } else {
                    NullKind::Rigid
                }
            }
            _ => NullKind::None,
        }
    }

    fn label(&self) -> String {
        self.id.clone()
    }
}

/// `(u(y) − u(x))·(y − x)/|y − x|²`.
pub fn projected_difference(u: &dyn VectorField, x: &[f64], y: &[f64]) -> Result<f64> {
    let h: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let r2 = dot(&h, &h);
    if r2 == 0.0 {
        return Err(Error::DegeneratePair);
    }
    let du: Vec<f64> = u.eval(y).iter().zip(u.eval(x)).map(|(a, b)| a - b).collect();
    Ok(dot(&du, &h) / r2)
}

/// `F_λ(u)(x) = (u′(x′, λx_d)/λ, u_d(x′, λx_d))`; composes multiplicatively.
pub fn scale_field(u: &FieldSpec, lambda: f64) -> Result<FieldSpec> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale factor must be positive, got {lambda}")));
    }
    if u.domain_tag != DomainTag::HalfSpace {
        return Err(Error::DomainError("F_lambda acts on half-space fields".into()));
    }
    let mut out = u.clone();
    out.normal_scale *= lambda;
    out.validate()?;
    Ok(out)
}

/// `[t_1, .., t_{d-1}, n]` from a tangential template and a normal value.
fn tn(tangential: &[f64], normal: f64, d: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d - 1).map(|i| tangential.get(i).copied().unwrap_or(0.0)).collect();
    v.push(normal);
    v
}

fn first_axis(d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[0] = 1.0;
    v
}

/// The canonical deterministic suite of test fields in dimension `d`.
pub fn field_library(d: usize) -> Vec<FieldSpec> {
    assert!(d >= 1, "dimension must be positive");
    let hs = || DomainTag::HalfSpace;
    let mut out = Vec::new();

    out.push(FieldSpec::bump("bump_far", tn(&[], 2.0, d), vec![1.0; d], tn(&[0.6, -0.3], 1.0, d), hs()).unwrap());

    let mut rot = vec![vec![0.0; d]; d];
    rot[0][0] = 0.3;
    if d > 1 {
        rot[0][d - 1] = 1.0;
        rot[d - 1][0] = -0.5;
    }
    out.push(
        FieldSpec::bump("bump_mid_modulated", tn(&[0.2, -0.1], 1.0, d), vec![0.6; d], tn(&[0.2, 0.1], 0.5, d), hs())
            .unwrap()
            .with_linear(rot)
            .unwrap(),
    );

    out.push(
        FieldSpec::bump("bump_aniso", tn(&[], 0.8, d), tn(&[1.2, 1.2], 0.5, d), tn(&[1.0, 0.4], -0.5, d), hs()).unwrap(),
    );

    out.push(
        FieldSpec::bump("bump_near_boundary", tn(&[], 0.1, d), vec![0.08; d], tn(&[0.5, 0.5], 1.0, d), hs()).unwrap(),
    );

    out.push(
        FieldSpec::separable_bump(
            "separable_tangential",
            SeparableBump {
                tangential_center: vec![0.0; d - 1],
                tangential_radius: 1.0,
                normal_center: 1.5,
                normal_radius: 1.0,
                amplitude: first_axis(d),
            },
            hs(),
        )
        .unwrap(),
    );

    out.push(
        FieldSpec::separable_bump(
            "separable_normal",
            SeparableBump {
                tangential_center: vec![0.3; d - 1],
                tangential_radius: 0.8,
                normal_center: 0.6,
                normal_radius: 0.4,
                amplitude: tn(&[], 1.0, d),
            },
            hs(),
        )
        .unwrap(),
    );

    out.push(FieldSpec::gaussian("gaussian_iso", vec![0.0; d], vec![1.0; d], first_axis(d)).unwrap());
    out.push(
        FieldSpec::gaussian("gaussian_aniso", tn(&[0.1, 0.1], 0.1, d), tn(&[1.0, 0.8], 0.6, d), tn(&[0.3, -0.2], 1.0, d))
            .unwrap(),
    );

    let mut mix = vec![vec![0.0; d]; d];
    if d > 1 {
        mix[0][d - 1] = 0.8;
        mix[d - 1][d - 1] = -0.4;
    }
    out.push(
        FieldSpec::bump("bump_whole_aniso", vec![0.0; d], tn(&[1.0, 0.7], 0.5, d), tn(&[1.0, 0.0], 0.5, d), DomainTag::WholeSpace)
            .unwrap()
            .with_linear(mix)
            .unwrap(),
    );

    let mut skew = vec![vec![0.0; d]; d];
    if d > 1 {
        skew[0][1] = 1.0;
        skew[1][0] = -1.0;
    }
    if d > 2 {
        skew[1][2] = 0.5;
        skew[2][1] = -0.5;
    }
    out.push(FieldSpec::skew_affine("skew_affine", skew, tn(&[0.3, -0.2], 0.1, d), vec![0.0; d], 1.0).unwrap());
    out
}

/// Library fields that are compactly supported inside the open half-space.
pub fn half_space_library(d: usize) -> Vec<FieldSpec> {
    field_library(d)
        .into_iter()
        .filter(|f| f.domain_tag == DomainTag::HalfSpace && f.smoothness() == Smoothness::C1Compact)
        .collect()
}

/// Library fields posed on the whole space.
pub fn whole_space_library(d: usize) -> Vec<FieldSpec> {
    field_library(d).into_iter().filter(|f| f.domain_tag == DomainTag::WholeSpace).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump2() -> FieldSpec {
        field_library(2).into_iter().find(|f| f.id() == "bump_mid_modulated").unwrap()
    }

    #[test]
    fn projected_difference_examples() {
        let sk = field_library(3).into_iter().find(|f| f.id() == "skew_affine").unwrap();
        let v = projected_difference(&sk, &[0.1, 0.2, 0.3], &[-0.4, 0.5, 0.1]).unwrap();
        assert!(v.abs() < 1e-15);

        let id = FieldSpec::custom(
            "identity",
            2,
            CustomField {
                eval: Arc::new(|x, o| o.copy_from_slice(x)),
                gradient: None,
                support: None,
                smoothness: Smoothness::Affine,
            },
            DomainTag::WholeSpace,
        )
        .unwrap();
        let v = projected_difference(&id, &[0.3, -1.0], &[2.0, 0.5]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);

        assert_eq!(projected_difference(&id, &[1.0, 1.0], &[1.0, 1.0]), Err(Error::DegeneratePair));
    }

    #[test]
    fn projected_difference_matches_scalar_formula() {
        // u = φ(q)(a + A(x − c)) written out by hand for this field.
        let u = bump2();
        let (x, y) = ([0.1, 0.8], [0.35, 1.2]);
        let hand = |p: [f64; 2]| {
            let q = ((p[0] - 0.2) / 0.6).powi(2) + ((p[1] - 1.0) / 0.6).powi(2);
            let phi = if q < 1.0 { (1.0 - 1.0 / (1.0 - q)).exp() } else { 0.0 };
            let u1 = phi * (0.2 + 0.3 * (p[0] - 0.2) + 1.0 * (p[1] - 1.0));
            let u2 = phi * (0.5 - 0.5 * (p[0] - 0.2));
            [u1, u2]
        };
        let (ux, uy) = (hand(x), hand(y));
        let h = [y[0] - x[0], y[1] - x[1]];
        let want = ((uy[0] - ux[0]) * h[0] + (uy[1] - ux[1]) * h[1]) / (h[0] * h[0] + h[1] * h[1]);
        let got = projected_difference(&u, &x, &y).unwrap();
        assert!((got - want).abs() < 1e-14, "{got} vs {want}");
    }

    #[test]
    fn scale_field_examples() {
        let u = bump2();
        assert!(scale_field(&u, 0.0).is_err());
        assert!(scale_field(&u, -1.0).is_err());
        let one = scale_field(&u, 1.0).unwrap();
        for x in [[0.1, 0.8], [0.3, 1.3], [0.0, 0.5]] {
            assert_eq!(one.eval(&x), u.eval(&x));
        }

        let sep = FieldSpec::separable_bump(
            "s",
            SeparableBump {
                tangential_center: vec![0.0],
                tangential_radius: 1.0,
                normal_center: 1.5,
                normal_radius: 0.5,
                amplitude: vec![0.3, 1.0],
            },
            DomainTag::HalfSpace,
        )
        .unwrap();
        let f3 = scale_field(&sep, 3.0).unwrap();
        let b = f3.support().unwrap();
        assert!((b.lo[1] - 1.0 / 3.0).abs() < 1e-15 && (b.hi[1] - 2.0 / 3.0).abs() < 1e-15);

        // d-th component of F_3(u) − u at (x′, t) is u_d(x′, 3t) − u_d(x′, t)
        for (xp, t) in [(0.1, 0.4), (-0.3, 0.5), (0.2, 1.4)] {
            let lhs = f3.eval(&[xp, t])[1] - sep.eval(&[xp, t])[1];
            let rhs = sep.eval(&[xp, 3.0 * t])[1] - sep.eval(&[xp, t])[1];
            assert_eq!(lhs, rhs);
            assert_eq!(f3.eval(&[xp, t])[0], sep.eval(&[xp, 3.0 * t])[0] / 3.0);
        }
        let g = field_library(2).into_iter().find(|f| f.id() == "gaussian_iso").unwrap();
        assert!(matches!(scale_field(&g, 2.0), Err(Error::DomainError(_))));
    }

    #[test]
    fn library_contract() {
        for d in 1..=3 {
            let lib = field_library(d);
            assert_eq!(lib, field_library(d));
            let hs = half_space_library(d);
            assert!(hs.len() >= 5);
            assert!(lib.iter().filter(|f| matches!(f.family(), Family::SeparableBump(_))).count() >= 2);
            assert!(lib.iter().filter(|f| matches!(f.family(), Family::Gaussian(_))).count() >= 2);
            assert!(lib.iter().any(|f| f.null_kind() == NullKind::Rigid));
            assert!(hs.iter().any(|f| f.support().unwrap().boundary_gap() < 0.1));
            for f in &lib {
                assert_eq!(f.eval(&vec![0.05; d]).len(), d);
            }
            for f in &hs {
                let b = f.support().unwrap();
                let gap = b.boundary_gap();
                assert!(gap > 0.0);
                for k in 0..50 {
                    let mut x: Vec<f64> = (0..d).map(|i| b.lo[i] + (b.hi[i] - b.lo[i]) * ((k * 7 + i * 3) % 50) as f64 / 49.0).collect();
                    x[d - 1] = gap * k as f64 / 49.0;
                    assert!(f.eval(&x).iter().all(|v| *v == 0.0), "{} at {:?}", f.id(), x);
                }
            }
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let h = 1e-5;
        for d in 1..=3 {
            for f in field_library(d) {
                let b = f.support().unwrap_or(SupportBox::new(vec![-0.5; d], vec![0.5; d]));
                // relative to the field's gradient scale, not the local gradient
                let scale = f.lipschitz_bound().unwrap_or(1.0).max(1.0);
                for k in 0..40 {
                    let x: Vec<f64> = (0..d)
                        .map(|i| b.lo[i] + (b.hi[i] - b.lo[i]) * (0.15 + 0.7 * (((k * 13 + i * 7) % 40) as f64 / 39.0)))
                        .collect();
                    let g = f.gradient(&x).unwrap();
                    for j in 0..d {
                        let mut xp = x.clone();
                        let mut xm = x.clone();
                        xp[j] += h;
                        xm[j] -= h;
                        let (up, um) = (f.eval(&xp), f.eval(&xm));
                        for i in 0..d {
                            let fd = (up[i] - um[i]) / (2.0 * h);
                            let err = (fd - g[i][j]).abs();
                            assert!(err <= 1e-6 * scale, "{} d={d} i={i} j={j} fd={fd} an={}", f.id(), g[i][j]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn json_round_trip_is_lossless() {
        for d in 1..=3 {
            for f in field_library(d) {
                let js = f.to_json().unwrap();
                let back = FieldSpec::from_json(&js).unwrap();
                assert_eq!(back, f);
                assert_eq!(back.to_json().unwrap(), js);
                let x = vec![0.123; d];
                assert_eq!(back.eval(&x), f.eval(&x));
            }
        }
        let scaled = scale_field(&bump2(), 2.5).unwrap();
        assert_eq!(FieldSpec::from_json(&scaled.to_json().unwrap()).unwrap(), scaled);
        let bad = r#"{"id":"x","family":"bump","parameters":{"center":[0,2],"radii":[1,1],"amplitude":[1,1],"extra":1},"domain_tag":{"kind":"half_space"}}"#;
        assert!(FieldSpec::from_json(bad).is_err());
        let touching = r#"{"id":"x","family":"bump","parameters":{"center":[0,0.5],"radii":[1,1],"amplitude":[1,1]},"domain_tag":{"kind":"half_space"}}"#;
        assert!(matches!(FieldSpec::from_json(touching), Err(Error::BoundaryContact(_))));
    }

    #[test]
    fn skew_affine_must_be_exactly_skew() {
        let r = FieldSpec::skew_affine("s", vec![vec![0.0, 1.0], vec![-1.0 + 1e-16, 0.0]], vec![0.0, 0.0], vec![0.0, 0.0], 1.0);
        assert!(r.is_err());
    }
}
