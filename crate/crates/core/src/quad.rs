//! Singular double integrals: the projected seminorm `S`, the Gagliardo
//! seminorm `W`, the weighted Hardy norm, the mixed half-space integral of
//! the extension proof and the Hardy remainder integral.
//!
//! # Sampling scheme
//!
//! Every double integral is written in polar form around the outer point,
//! `y = x + rω`, so that
//! `∫∫ F(x, y) dy dx = ∫_K ∫_{S^{d−1}} ∫_0^∞ A(x, r, ω) r^{β−1} dr dω dx`
//! where `β = p(1 − s)` and `A` is bounded near the diagonal for C¹ fields.
//! The outer point is uniform in a box `K` containing the support. The
//! radius is stratified into a near-diagonal shell `[0, c·R₀]`, `n_strata`
//! log-spaced shells on `[c·R₀, R₀]` (both with density `∝ r^{β−1}`) and a
//! Pareto tail `(R₀, ∞)`, where `R₀ = diam K` and `c` is the diagonal cutoff.
//! A pilot run sizes each shell by Neyman allocation; pilot samples are
//! discarded.
//!
//! Pairs with `x ∉ K` are folded back onto `x ∈ K` using the symmetry of the
//! integrand: for sets `X`, `Y`,
//! `∫_X∫_Y F = ∫_K ∫ F·(1_X(x)1_Y(y) + 1_Y(x)1_X(y)1[y ∉ K])`
//! whenever `F` vanishes when both points lie outside `K`. For compactly
//! supported fields this is exact; for Schwartz fields an analytic bound on
//! the dropped part is added to the standard error.
//!
//! Work is split into fixed chunks, each with its own ChaCha stream derived
//! from `(seed, integral tag, shell, phase, chunk)`, and merged in index
//! order, so results do not depend on the number of threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::gamma_constants;
use crate::error::{Error, Result};
use crate::field::{dot, DomainTag, NullKind, Smoothness, SupportBox, VectorField};
use crate::integrate::composite_rule;
use crate::params::FracParams;
use crate::special::sphere_area;

/// Largest dimension handled by the samplers (stack buffers).
pub const MAX_DIM: usize = 8;

const CHUNK: usize = 8192;
const MIN_PER_SHELL: usize = 16;

/// Below `TINY·R₀` difference quotients are taken at step `TINY·R₀`.
const TINY: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    MonteCarlo,
    Stratified,
    Deterministic,
}

/// A numerical value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub method: EstimateMethod,
    pub seed: u64,
}

impl Estimate {
    pub fn exact(value: f64, seed: u64) -> Self {
        Estimate { value, std_error: 0.0, n_samples: 0, method: EstimateMethod::Deterministic, seed }
    }

    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 { 0.0 } else { self.std_error / self.value.abs() }
    }

    /// `c·self`.
    pub fn scaled(&self, c: f64) -> Estimate {
        Estimate { value: c * self.value, std_error: c.abs() * self.std_error, ..*self }
    }

    /// Sum of independent estimates; errors add in quadrature.
    pub fn plus(&self, o: &Estimate) -> Estimate {
        let method = match (self.method, o.method) {
            (EstimateMethod::Deterministic, m) | (m, EstimateMethod::Deterministic) => m,
            (EstimateMethod::MonteCarlo, EstimateMethod::MonteCarlo) => EstimateMethod::MonteCarlo,
            _ => EstimateMethod::Stratified,
        };
        Estimate {
            value: self.value + o.value,
            std_error: self.std_error.hypot(o.std_error),
            n_samples: self.n_samples + o.n_samples,
            method,
            seed: self.seed,
        }
    }
}

/// `√(σ_a² + σ_b²)`.
pub fn combined_std_error(a: &Estimate, b: &Estimate) -> f64 {
    a.std_error.hypot(b.std_error)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadConfig {
    pub n_samples: usize,
    /// Margin around the effective support of Schwartz fields; compactly
    /// supported fields need none.
    pub truncation_pad: f64,
    /// Near-diagonal shell radius relative to the outer box diameter.
    pub diagonal_cutoff: f64,
    pub seed: u64,
    pub n_strata: usize,
}

pub const DEFAULT_SEED: u64 = 0x5EED;

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { n_samples: 1_000_000, truncation_pad: 0.5, diagonal_cutoff: 1e-4, seed: DEFAULT_SEED, n_strata: 32 }
    }
}

impl QuadConfig {
    pub fn with_samples(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples must be >= 1".into()));
        }
        if !(self.truncation_pad > 0.0 && self.truncation_pad.is_finite()) {
            return Err(Error::InvalidParameter("truncation_pad must be positive".into()));
        }
        if !(self.diagonal_cutoff > 0.0 && self.diagonal_cutoff < 1.0) {
            return Err(Error::InvalidParameter("diagonal_cutoff must lie in (0, 1)".into()));
        }
        if self.n_strata == 0 {
            return Err(Error::InvalidParameter("n_strata must be >= 1".into()));
        }
        Ok(())
    }
}

/// Point sets used to restrict the outer and inner integration variables.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    All,
    /// `x_d > 0`.
    Upper,
    /// `x_d < 0`.
    Lower,
    Ball { center: Vec<f64>, radius: f64 },
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::All => true,
            Region::Upper => x[x.len() - 1] > 0.0,
            Region::Lower => x[x.len() - 1] < 0.0,
            Region::Ball { center, radius } => {
                x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < radius * radius
            }
        }
    }

    fn bounding_box(&self, d: usize) -> Option<SupportBox> {
        match self {
            Region::Ball { center, radius } => Some(SupportBox::new(
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            Region::Upper => {
                let mut b = SupportBox::new(vec![f64::NEG_INFINITY; d], vec![f64::INFINITY; d]);
                b.lo[d - 1] = 0.0;
                Some(b)
            }
            Region::Lower => {
                let mut b = SupportBox::new(vec![f64::NEG_INFINITY; d], vec![f64::INFINITY; d]);
                b.hi[d - 1] = 0.0;
                Some(b)
            }
            Region::All => None,
        }
    }
}

impl From<&DomainTag> for Region {
    fn from(t: &DomainTag) -> Self {
        match t {
            DomainTag::HalfSpace => Region::Upper,
            DomainTag::WholeSpace => Region::All,
            DomainTag::Ball { center, radius } => Region::Ball { center: center.clone(), radius: *radius },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeminormKind {
    /// `|(u(y) − u(x))·(y − x)|^p / |y − x|^{d+ps+p}`.
    Projected,
    /// `|u(y) − u(x)|^p / |y − x|^{d+ps}`.
    Full,
}

#[derive(Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let delta = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + delta * delta * (self.n as f64 * o.n as f64) / n as f64,
        }
    }

    fn variance(&self) -> f64 {
        if self.n < 2 { 0.0 } else { (self.m2 / (self.n - 1) as f64).max(0.0) }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a; stable across platforms and releases.
pub(crate) fn tag_of(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn chunk_rng(seed: u64, tag: u64, shell: usize, phase: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(tag)));
    rng.set_stream(((shell as u64) << 40) | (phase << 32) | chunk as u64);
    rng
}

/// Uniform in `(0, 1]`.
fn open_uniform(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

fn sample_direction(rng: &mut ChaCha8Rng, om: &mut [f64]) {
    if om.len() == 1 {
        om[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return;
    }
    loop {
        let mut n2 = 0.0;
        for o in om.iter_mut() {
            *o = rng.sample(StandardNormal);
            n2 += *o * *o;
        }
        if n2 > 1e-300 {
            let inv = 1.0 / n2.sqrt();
            om.iter_mut().for_each(|o| *o *= inv);
            return;
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Shell {
    /// `[a, b]` with density `∝ r^{β−1}`.
    Power { a: f64, b: f64 },
    /// `(r0, ∞)` with density `∝ r^{−γ−1}`.
    Tail { r0: f64 },
}

/// Data handed to a polar integrand for one sample.
pub(crate) struct PolarSample<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub omega: &'a [f64],
    pub r: f64,
    /// Step for difference quotients: `max(r, TINY·R₀)`.
    pub step: f64,
    pub in_k: bool,
}

/// `∫_K ∫_{S^{d−1}} ∫_0^∞ A(x, r, ω) r^{β−1} dr dω dx` where `A` must be
/// `O(r^{−β−γ})` at infinity.
pub(crate) struct PolarProblem<'a> {
    pub d: usize,
    pub k_box: SupportBox,
    pub beta: f64,
    pub gamma: f64,
    pub tag: u64,
    pub integrand: &'a (dyn Fn(&PolarSample) -> f64 + Sync),
}

/// Cells per axis for the outer-point stratification.
fn cells_per_axis(d: usize) -> usize {
    match d {
        1 => 16,
        2 => 8,
        3 => 4,
        _ => 2,
    }
}

impl PolarProblem<'_> {
    fn shells(&self, cfg: &QuadConfig) -> (Vec<Shell>, f64) {
        let r0 = self.k_box.diameter();
        let lo = cfg.diagonal_cutoff * r0;
        let mut shells = vec![Shell::Power { a: 0.0, b: lo }];
        let n = cfg.n_strata;
        let ratio = (r0 / lo).powf(1.0 / n as f64);
        let mut a = lo;
        for k in 0..n {
            let b = if k + 1 == n { r0 } else { a * ratio };
            shells.push(Shell::Power { a, b });
            a = b;
        }
        shells.push(Shell::Tail { r0 });
        (shells, r0)
    }

    fn cell(&self, index: usize) -> SupportBox {
        let n = cells_per_axis(self.d);
        let mut rest = index;
        let mut lo = self.k_box.lo.clone();
        let mut hi = self.k_box.hi.clone();
        for i in 0..self.d {
            let c = rest % n;
            rest /= n;
            let w = (self.k_box.hi[i] - self.k_box.lo[i]) / n as f64;
            lo[i] = self.k_box.lo[i] + c as f64 * w;
            hi[i] = if c + 1 == n { self.k_box.hi[i] } else { lo[i] + w };
        }
        SupportBox::new(lo, hi)
    }

    fn run_chunk(&self, cell: &SupportBox, shell: Shell, r0: f64, n: usize, rng: &mut ChaCha8Rng) -> Moments {
        let d = self.d;
        let mut x = [0.0; MAX_DIM];
        let mut y = [0.0; MAX_DIM];
        let mut om = [0.0; MAX_DIM];
        let vk = cell.volume();
        let area = sphere_area(d);
        let (beta, gamma) = (self.beta, self.gamma);
        let mut m = Moments::default();
        for _ in 0..n {
            for i in 0..d {
                x[i] = cell.lo[i] + rng.random::<f64>() * (cell.hi[i] - cell.lo[i]);
            }
            sample_direction(rng, &mut om[..d]);
            let u = open_uniform(rng);
            let (r, jac) = match shell {
                Shell::Power { a, b } => {
                    let (ab, bb) = (a.powf(beta), b.powf(beta));
                    ((ab + u * (bb - ab)).powf(1.0 / beta), (bb - ab) / beta)
                }
                Shell::Tail { r0 } => {
                    let r = r0 * u.powf(-1.0 / gamma);
                    (r, r.powf(beta + gamma) / (gamma * r0.powf(gamma)))
                }
            };
            for i in 0..d {
                y[i] = x[i] + r * om[i];
            }
            let sample = PolarSample {
                x: &x[..d],
                y: &y[..d],
                omega: &om[..d],
                r,
                step: r.max(TINY * r0),
                in_k: self.k_box.contains(&y[..d]),
            };
            let a = (self.integrand)(&sample);
            m.push(if a == 0.0 { 0.0 } else { vk * area * a * jac });
        }
        m
    }

    /// Runs `alloc[k]` samples in every stratum `k = cell·shells + shell`.
    fn run_phase(&self, shells: &[Shell], r0: f64, phase: u64, alloc: &[usize], seed: u64) -> Vec<Moments> {
        let ns = shells.len();
        let jobs: Vec<(usize, usize)> =
            alloc.iter().enumerate().flat_map(|(k, &n)| (0..n.div_ceil(CHUNK)).map(move |c| (k, c))).collect();
        let parts: Vec<Moments> = jobs
            .par_iter()
            .map(|&(k, c)| {
                let len = CHUNK.min(alloc[k] - c * CHUNK);
                let mut rng = chunk_rng(seed, self.tag, k, phase, c);
                self.run_chunk(&self.cell(k / ns), shells[k % ns], r0, len, &mut rng)
            })
            .collect();
        let mut out = vec![Moments::default(); alloc.len()];
        for (&(k, _), m) in jobs.iter().zip(parts) {
            out[k] = out[k].merge(m);
        }
        out
    }

    pub fn integrate(&self, cfg: &QuadConfig) -> Estimate {
        let (shells, r0) = self.shells(cfg);
        let strata = shells.len() * cells_per_axis(self.d).pow(self.d as u32);
        let n = cfg.n_samples;
        let pilot = (n / (20 * strata)).max(MIN_PER_SHELL);
        let pilots = self.run_phase(&shells, r0, 0, &vec![pilot; strata], cfg.seed);
        let sd: Vec<f64> = pilots.iter().map(|m| m.variance().sqrt()).collect();
        let total_sd: f64 = sd.iter().sum();
        let main = n.saturating_sub(pilot * strata).max(MIN_PER_SHELL * strata);
        // a tenth of the budget is spread evenly so that strata whose pilot
        // saw only zeros are still sampled
        let floor = (main / (10 * strata)).max(MIN_PER_SHELL);
        let neyman = main.saturating_sub(floor * strata) as f64;
        let alloc: Vec<usize> = sd
            .iter()
            .map(|s| {
                let share = if total_sd > 0.0 { s / total_sd } else { 1.0 / strata as f64 };
                floor + (neyman * share).round() as usize
            })
            .collect();
        let main_runs = self.run_phase(&shells, r0, 1, &alloc, cfg.seed);
        let mut value = 0.0;
        let mut var = 0.0;
        let mut used = (pilot * strata) as u64;
        for m in &main_runs {
            value += m.mean;
            var += m.variance() / m.n as f64;
            used += m.n;
        }
        Estimate {
            value: value.max(0.0),
            std_error: var.sqrt(),
            n_samples: used,
            method: EstimateMethod::Stratified,
            seed: cfg.seed,
        }
    }
}

fn require_dim(d: usize) -> Result<()> {
    if d > MAX_DIM {
        return Err(Error::InvalidParameter(format!("samplers support d <= {MAX_DIM}, got {d}")));
    }
    Ok(())
}

fn require_matching_dim(u: &dyn VectorField, params: &FracParams) -> Result<()> {
    if u.dim() != params.d() {
        return Err(Error::InvalidParameter(format!("field has dimension {} but d = {}", u.dim(), params.d())));
    }
    require_dim(u.dim())
}

/// Checks that `u` may be integrated over `domain`; returns the outer box.
fn outer_box(u: &dyn VectorField, domain: &DomainTag, cfg: &QuadConfig) -> Result<SupportBox> {
    let d = u.dim();
    let tag = u.domain_tag();
    let region = Region::from(domain);
    match (&tag, domain) {
        (DomainTag::HalfSpace, DomainTag::Ball { center, radius }) if center[d - 1] - radius < 0.0 => {
            return Err(Error::DomainError("ball leaves the half-space the field lives on".into()));
        }
        (_, DomainTag::Ball { .. }) => {}
        (DomainTag::HalfSpace, DomainTag::HalfSpace | DomainTag::WholeSpace) => {}
        (DomainTag::WholeSpace, DomainTag::WholeSpace) => {}
        (DomainTag::WholeSpace, DomainTag::HalfSpace) => {
            return Err(Error::DomainError("whole-space field integrated over the half-space".into()));
        }
        (DomainTag::Ball { .. }, _) => {
            if u.support().is_none() {
                return Err(Error::UnsupportedField("field without bounded support on an unbounded domain".into()));
            }
            return Err(Error::DomainError("ball field integrated over an unbounded domain".into()));
        }
    }
    let support = match u.smoothness() {
        Smoothness::Schwartz => u.support().map(|b| b.expand(cfg.truncation_pad)),
        _ => u.support(),
    };
    let k = match (support, region.bounding_box(d)) {
        (Some(s), Some(r)) => s.intersect(&r),
        (Some(s), None) => s,
        (None, Some(r)) if r.lo.iter().chain(&r.hi).all(|v| v.is_finite()) => r,
        _ => return Err(Error::UnsupportedField("field without bounded support on an unbounded domain".into())),
    };
    if k.lo.iter().zip(&k.hi).any(|(a, b)| a >= b) {
        return Err(Error::DomainError("support does not meet the integration domain".into()));
    }
    Ok(k)
}

/// Rough bound on the pairs dropped outside `K` for Schwartz fields.
fn schwartz_tail(u: &dyn VectorField, params: &FracParams, k: &SupportBox, cfg: &QuadConfig) -> f64 {
    if u.smoothness() != Smoothness::Schwartz {
        return 0.0;
    }
    let m = u.outside_sup();
    (2.0 * m).powf(params.p()) * k.volume() * cfg.truncation_pad.powf(-params.ps()) * sphere_area(params.d()) / params.ps()
}

#[inline]
fn powp(v: f64, p: f64) -> f64 {
    if p == 2.0 { v * v } else { v.abs().powf(p) }
}

/// `(u(x + hω) − u(x))/h` into `out`.
#[inline]
fn quotient(u: &dyn VectorField, s: &PolarSample, ux: &[f64], tmp: &mut [f64], out: &mut [f64]) {
    if s.step == s.r {
        u.eval_into(s.y, tmp);
    } else {
        let mut z = [0.0; MAX_DIM];
        for i in 0..s.x.len() {
            z[i] = s.x[i] + s.step * s.omega[i];
        }
        u.eval_into(&z[..s.x.len()], tmp);
    }
    for i in 0..out.len() {
        out[i] = (tmp[i] - ux[i]) / s.step;
    }
}

/// Seminorm of `kind` over the pair set `X × Y`; `k_box` must contain the
/// support of `u` and `F` must vanish when both points leave it.
pub(crate) fn seminorm_pairs(
    u: &dyn VectorField,
    kind: SeminormKind,
    xset: &Region,
    yset: &Region,
    k_box: SupportBox,
    params: &FracParams,
    cfg: &QuadConfig,
    tag: &str,
) -> Estimate {
    let d = u.dim();
    let p = params.p();
    let integrand = move |s: &PolarSample| -> f64 {
        let mut w = 0.0;
        if xset.contains(s.x) && yset.contains(s.y) {
            w += 1.0;
        }
        if !s.in_k && yset.contains(s.x) && xset.contains(s.y) {
            w += 1.0;
        }
        if w == 0.0 {
            return 0.0;
        }
        let mut ux = [0.0; MAX_DIM];
        let mut tmp = [0.0; MAX_DIM];
        let mut q = [0.0; MAX_DIM];
        u.eval_into(s.x, &mut ux[..d]);
        quotient(u, s, &ux[..d], &mut tmp[..d], &mut q[..d]);
        let v = match kind {
            SeminormKind::Projected => {
                if d == 1 {
                    q[0].abs()
                } else {
                    dot(&q[..d], s.omega)
                }
            }
            SeminormKind::Full => {
                if d == 1 {
                    q[0].abs()
                } else {
                    dot(&q[..d], &q[..d]).sqrt()
                }
            }
        };
        w * powp(v, p)
    };
    let problem = PolarProblem {
        d,
        k_box,
        beta: p * (1.0 - params.s()),
        gamma: params.ps(),
        tag: tag_of(tag),
        integrand: &integrand,
    };
    problem.integrate(cfg)
}

fn seminorm(u: &dyn VectorField, kind: SeminormKind, domain: &DomainTag, params: &FracParams, cfg: &QuadConfig) -> Result<Estimate> {
    cfg.validate()?;
    require_matching_dim(u, params)?;
    let k = outer_box(u, domain, cfg)?;
    match (u.null_kind(), kind) {
        (NullKind::Zero, _) | (NullKind::Rigid, SeminormKind::Projected) => return Ok(Estimate::exact(0.0, cfg.seed)),
        _ => {}
    }
    let region = Region::from(domain);
    let tag = format!("seminorm/{}/{:?}", u.label(), domain);
    let mut est = seminorm_pairs(u, kind, &region, &region, k.clone(), params, cfg, &tag);
    est.std_error += schwartz_tail(u, params, &k, cfg);
    Ok(est)
}

/// `|u|^p_S = ∫∫ |(u(y) − u(x))·(y − x)|^p / |y − x|^{d+ps+p} dy dx` over `domain²`.
pub fn seminorm_s(u: &dyn VectorField, domain: &DomainTag, params: &FracParams, cfg: &QuadConfig) -> Result<Estimate> {
    seminorm(u, SeminormKind::Projected, domain, params, cfg)
}

/// `|u|^p_W = ∫∫ |u(y) − u(x)|^p / |y − x|^{d+ps} dy dx` over `domain²`.
pub fn seminorm_w(u: &dyn VectorField, domain: &DomainTag, params: &FracParams, cfg: &QuadConfig) -> Result<Estimate> {
    seminorm(u, SeminormKind::Full, domain, params, cfg)
}

/// Seminorm restricted to `X × Y` (used for the `I⁺, I⁻, I^±` split).
pub fn seminorm_over(
    u: &dyn VectorField,
    kind: SeminormKind,
    xset: &Region,
    yset: &Region,
    params: &FracParams,
    cfg: &QuadConfig,
) -> Result<Estimate> {
    cfg.validate()?;
    require_matching_dim(u, params)?;
    let k = outer_box(u, &DomainTag::WholeSpace, cfg)?;
    if u.null_kind() == NullKind::Zero {
        return Ok(Estimate::exact(0.0, cfg.seed));
    }
    let tag = format!("seminorm/{}/{:?}/{:?}", u.label(), xset, yset);
    let mut est = seminorm_pairs(u, kind, xset, yset, k.clone(), params, cfg, &tag);
    est.std_error += schwartz_tail(u, params, &k, cfg);
    Ok(est)
}

/// Tensor Gauss–Legendre integral of a smooth function over a box, refined
/// until two successive resolutions agree to `1e−9` relative.
pub fn box_quadrature<F: Fn(&[f64]) -> f64 + Sync>(f: F, b: &SupportBox) -> f64 {
    let d = b.dim();
    let order = 8;
    let budget: usize = 4_000_000;
    let mut panels = match d {
        1 => 32,
        2 => 16,
        3 => 6,
        _ => 2,
    };
    let eval = |panels: usize| -> f64 {
        let rules: Vec<_> = (0..d).map(|i| composite_rule(b.lo[i], b.hi[i], panels, order)).collect();
        let n = panels * order;
        // parallel over the first axis, fixed reduction order
        let slabs: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i0| {
                let mut idx = vec![0usize; d];
                idx[0] = i0;
                let mut x = vec![0.0; d];
                let mut total = 0.0;
                loop {
                    let mut w = 1.0;
                    for i in 0..d {
                        x[i] = rules[i].0[idx[i]];
                        w *= rules[i].1[idx[i]];
                    }
                    total += w * f(&x);
                    let mut k = 1;
                    loop {
                        if k >= d {
                            return total;
                        }
                        idx[k] += 1;
                        if idx[k] < n {
                            break;
                        }
                        idx[k] = 0;
                        k += 1;
                    }
                }
            })
            .collect();
        slabs.into_iter().sum()
    };
    let mut prev = eval(panels);
    loop {
        let next_points = (2 * panels * order).pow(d as u32);
        if next_points > budget {
            return prev;
        }
        panels *= 2;
        let cur = eval(panels);
        if (cur - prev).abs() <= 1e-9 * cur.abs().max(1e-300) {
            return cur;
        }
        prev = cur;
    }
}

fn require_half_space_compact(u: &dyn VectorField) -> Result<SupportBox> {
    if u.domain_tag() != DomainTag::HalfSpace {
        return Err(Error::DomainError("operation needs a half-space field".into()));
    }
    let b = match u.support() {
        Some(b) if matches!(u.smoothness(), Smoothness::C1Compact | Smoothness::Lipschitz) => b,
        _ => return Err(Error::UnsupportedField("operation needs a compactly supported field".into())),
    };
    if b.boundary_gap() <= 0.0 {
        return Err(Error::BoundaryContact(b.boundary_gap()));
    }
    Ok(b)
}

/// `∫_{ℝᵈ₊} g(x, u(x)) x_d^{−ps} dx` over the support of a half-space field.
pub fn weighted_half_space_integral<G: Fn(&[f64], &[f64]) -> f64 + Sync>(
    u: &dyn VectorField,
    params: &FracParams,
    g: G,
) -> Result<f64> {
    require_matching_dim(u, params)?;
    let b = require_half_space_compact(u)?;
    let (d, ps) = (u.dim(), params.ps());
    Ok(box_quadrature(
        |x| {
            let mut ux = [0.0; MAX_DIM];
            u.eval_into(x, &mut ux[..d]);
            g(x, &ux[..d]) * x[d - 1].powf(-ps)
        },
        &b,
    ))
}

/// `∫_{ℝᵈ₊} |u(x)|^p / x_d^{ps} dx` by tensor quadrature.
pub fn hardy_norm(u: &dyn VectorField, params: &FracParams, cfg: &QuadConfig) -> Result<Estimate> {
    let p = params.p();
    let v = weighted_half_space_integral(u, params, |_, ux| powp(if ux.len() == 1 { ux[0] } else { dot(ux, ux).sqrt() }, p))?;
    Ok(Estimate::exact(v, cfg.seed))
}

/// Normal-component jump `g(y) = u_d(y′, 3t) − u_d(y′, t)`, `t = −y_d > 0`.
fn normal_gap(u: &dyn VectorField, yp: &[f64], t: f64) -> f64 {
    let d = u.dim();
    let mut z = [0.0; MAX_DIM];
    let mut o = [0.0; MAX_DIM];
    z[..d - 1].copy_from_slice(yp);
    z[d - 1] = 3.0 * t;
    u.eval_into(&z[..d], &mut o[..d]);
    let a = o[d - 1];
    z[d - 1] = t;
    u.eval_into(&z[..d], &mut o[..d]);
    a - o[d - 1]
}

fn mixed_box(u: &dyn VectorField) -> Result<SupportBox> {
    let b = require_half_space_compact(u)?;
    let d = u.dim();
    let mut out = b.clone();
    // g(y) ≠ 0 needs t or 3t in [gap, S]
    out.lo[d - 1] = b.lo[d - 1] / 3.0;
    out.hi[d - 1] = b.hi[d - 1];
    Ok(out)
}

/// `∫_{ℝᵈ₊}∫_{ℝᵈ₋} |(u_d(y′, −3y_d) − u_d(y′, −y_d)) x_d|^p / |y − x|^{d+(s+1)p} dy dx`
/// by Monte Carlo: `y` uniform over the reflected support, `x = y + rω` with
/// `ω` in the upper hemisphere and `r` Pareto from the hyperplane crossing.
pub fn mixed_halfspace_integral(u: &dyn VectorField, params: &FracParams, cfg: &QuadConfig) -> Result<Estimate> {
    cfg.validate()?;
    require_matching_dim(u, params)?;
    let b = mixed_box(u)?;
    if u.null_kind() == NullKind::Zero {
        return Ok(Estimate::exact(0.0, cfg.seed));
    }
    let (d, p, ps) = (u.dim(), params.p(), params.ps());
    let vol = b.volume();
    let half_area = sphere_area(d) / 2.0;
    let tag = tag_of(&format!("mixed/{}", u.label()));
    let n = cfg.n_samples;
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(n - c * CHUNK);
            let mut rng = chunk_rng(cfg.seed, tag, 0, 2, c);
            let mut m = Moments::default();
            let mut yp = [0.0; MAX_DIM];
            let mut om = [0.0; MAX_DIM];
            for _ in 0..len {
                for i in 0..d - 1 {
                    yp[i] = b.lo[i] + rng.random::<f64>() * (b.hi[i] - b.lo[i]);
                }
                let t = b.lo[d - 1] + rng.random::<f64>() * (b.hi[d - 1] - b.lo[d - 1]);
                sample_direction(&mut rng, &mut om[..d]);
                let od = om[d - 1].abs();
                let u01 = open_uniform(&mut rng);
                let g = normal_gap(u, &yp[..d - 1], t);
                if g == 0.0 || od == 0.0 {
                    m.push(0.0);
                    continue;
                }
                let r_min = t / od;
                let r = r_min * u01.powf(-1.0 / ps);
                let ratio = (od - t / r).max(0.0);
                m.push(vol * half_area * powp(g, p) * powp(ratio, p) / (ps * r_min.powf(ps)));
            }
            m
        })
        .collect();
    let m = parts.into_iter().fold(Moments::default(), Moments::merge);
    Ok(Estimate {
        value: m.mean.max(0.0),
        std_error: (m.variance() / m.n as f64).sqrt(),
        n_samples: m.n,
        method: EstimateMethod::MonteCarlo,
        seed: cfg.seed,
    })
}

/// `∫_{ℝᵈ₊} |u_d(y′, 3y_d) − u_d(y′, y_d)|^p γ y_d^{−ps} dy` by tensor quadrature.
pub fn mixed_by_j_route(u: &dyn VectorField, params: &FracParams) -> Result<f64> {
    require_matching_dim(u, params)?;
    let b = mixed_box(u)?;
    let (d, p, ps) = (u.dim(), params.p(), params.ps());
    let (_, _, gamma) = gamma_constants(params);
    let v = box_quadrature(|y| powp(normal_gap(u, &y[..d - 1], y[d - 1]), p) * y[d - 1].powf(-ps), &b);
    Ok(gamma.value * v)
}

/// `∫∫_{ℝᵈ₊×ℝᵈ₊} |(x_d^{−α}u(x) − y_d^{−α}u(y))·(y − x)|^p / |y − x|^{d+ps+p} (x_d y_d)^{αp/2} dy dx`
/// with `α = (ps − 1)/p`.
pub fn remainder_integral(u: &dyn VectorField, params: &FracParams, cfg: &QuadConfig) -> Result<Estimate> {
    cfg.validate()?;
    require_matching_dim(u, params)?;
    let k = require_half_space_compact(u)?;
    if u.null_kind() == NullKind::Zero {
        return Ok(Estimate::exact(0.0, cfg.seed));
    }
    let (d, p, alpha) = (u.dim(), params.p(), params.alpha());
    let upper = Region::Upper;
    let integrand = |s: &PolarSample| -> f64 {
        if !upper.contains(s.y) {
            return 0.0;
        }
        let w = if s.in_k { 1.0 } else { 2.0 };
        let mut vx = [0.0; MAX_DIM];
        let mut vz = [0.0; MAX_DIM];
        let mut z = [0.0; MAX_DIM];
        for i in 0..d {
            z[i] = s.x[i] + s.step * s.omega[i];
        }
        if z[d - 1] <= 0.0 {
            return 0.0;
        }
        u.eval_into(s.x, &mut vx[..d]);
        u.eval_into(&z[..d], &mut vz[..d]);
        let (ax, az) = (s.x[d - 1].powf(-alpha), z[d - 1].powf(-alpha));
        let mut proj = 0.0;
        for i in 0..d {
            proj += (az * vz[i] - ax * vx[i]) * s.omega[i];
        }
        proj /= s.step;
        let weight = (s.x[d - 1] * s.y[d - 1]).powf(alpha * p / 2.0);
        w * powp(if d == 1 { proj.abs() } else { proj }, p) * weight
    };
    let problem = PolarProblem {
        d,
        k_box: k,
        beta: p * (1.0 - params.s()),
        gamma: params.ps() - (alpha * p / 2.0).max(0.0),
        tag: tag_of(&format!("remainder/{}", u.label())),
        integrand: &integrand,
    };
    Ok(problem.integrate(cfg))
}
