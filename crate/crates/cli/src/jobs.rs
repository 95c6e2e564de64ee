//! Expansion of a run configuration into independent jobs, and their
//! execution on a dedicated thread pool.

use std::collections::BTreeSet;

use nonlocal_korn::constants::{constant_table, ConstantValue};
use nonlocal_korn::field::{field_library, Family, VectorField};
use nonlocal_korn::quad::QuadConfig;
use nonlocal_korn::spectral::{spectral_constants, SpectralConstants};
use nonlocal_korn::verify::{
    default_eps_sequence, extension_check, decomposition_check, ground_state_configurations, ground_state_limit_check,
    hardy_check, hardy_remainder_check, hardy_split_check, job_seed, korn_band_check, korn_halfspace_check,
    mixed_integral_check, parseval_check, pointwise_inequalities, scaling_check, VerificationReport,
};
use nonlocal_korn::{DomainTag, FieldSpec, FracParams};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{RunConfig, Subcommand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Constants,
    Hardy,
    Korn,
    Extend,
    Scaling,
    Groundstate,
    Pointwise,
}

fn kinds(sub: Subcommand) -> Vec<Kind> {
    use Kind::*;
    match sub {
        Subcommand::Constants => vec![Constants],
        Subcommand::Hardy => vec![Hardy],
        Subcommand::Korn => vec![Korn],
        Subcommand::Extend => vec![Extend],
        Subcommand::Scaling => vec![Scaling],
        Subcommand::Groundstate => vec![Groundstate],
        Subcommand::Pointwise => vec![Pointwise],
        Subcommand::Sweep => vec![Hardy, Korn, Extend, Scaling, Groundstate],
        Subcommand::All => vec![Constants, Hardy, Korn, Extend, Scaling, Groundstate, Pointwise],
    }
}

#[derive(Debug, Clone)]
enum Job {
    Constants(FracParams),
    Hardy(FracParams, FieldSpec),
    KornBand(FracParams, FieldSpec),
    KornHalf(FracParams, FieldSpec),
    Extend(FracParams, FieldSpec),
    Scaling(FracParams, FieldSpec, f64),
    Ground(FracParams, Vec<f64>, Vec<f64>),
    Pointwise(f64),
}

/// What a job produced.
#[derive(Debug, Clone)]
pub enum Output {
    Constants(Vec<ConstantValue>),
    Reports(Vec<VerificationReport>),
}

/// One line of the `korn` JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct KornSummary {
    pub d: usize,
    pub s: f64,
    pub l1: f64,
    pub l2: Option<f64>,
    pub kappa: f64,
    pub band_lower: f64,
    pub band_upper: f64,
    pub per_field_ratios: Vec<Value>,
    pub reports: Vec<VerificationReport>,
}

pub fn load_fields(cfg: &RunConfig) -> Result<Option<Vec<FieldSpec>>, String> {
    let Some(path) = &cfg.fields else { return Ok(None) };
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let raw: Vec<Value> = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    raw.iter()
        .map(|v| FieldSpec::from_json(&v.to_string()).map_err(|e| format!("{}: {e}", path.display())))
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

fn fields_for(d: usize, custom: &Option<Vec<FieldSpec>>) -> Vec<FieldSpec> {
    match custom {
        Some(v) => v.iter().filter(|f| f.dim() == d).cloned().collect(),
        None => field_library(d),
    }
}

fn compact_half_space(f: &FieldSpec) -> bool {
    f.domain_tag() == DomainTag::HalfSpace && f.support().is_some()
}

fn plan(cfg: &RunConfig, custom: &Option<Vec<FieldSpec>>) -> Vec<Job> {
    let mut jobs = Vec::new();
    for kind in kinds(cfg.subcommand) {
        match kind {
            Kind::Pointwise => {
                let mut seen = BTreeSet::new();
                for fp in &cfg.params {
                    if seen.insert(fp.p().to_bits()) {
                        jobs.push(Job::Pointwise(fp.p()));
                    }
                }
            }
            Kind::Groundstate => {
                let mut seen = BTreeSet::new();
                for fp in &cfg.params {
                    if !seen.insert((fp.p().to_bits(), fp.s().to_bits())) {
                        continue;
                    }
                    for (x, v) in ground_state_configurations() {
                        let g = fp.with_d(x.len()).expect("valid params stay valid in any dimension");
                        jobs.push(Job::Ground(g, x, v));
                    }
                }
            }
            _ => {
                for fp in &cfg.params {
                    if kind == Kind::Constants {
                        jobs.push(Job::Constants(*fp));
                        continue;
                    }
                    if kind == Kind::Korn && fp.require_korn().is_err() {
                        continue;
                    }
                    for f in fields_for(fp.d(), custom) {
                        let half = compact_half_space(&f);
                        match kind {
                            Kind::Hardy if half => jobs.push(Job::Hardy(*fp, f)),
                            Kind::Extend if half => jobs.push(Job::Extend(*fp, f)),
                            Kind::Scaling if half => {
                                jobs.extend(cfg.lambdas.iter().map(|&l| Job::Scaling(*fp, f.clone(), l)))
                            }
                            Kind::Korn if half => jobs.push(Job::KornHalf(*fp, f)),
                            Kind::Korn if f.domain_tag() == DomainTag::WholeSpace => jobs.push(Job::KornBand(*fp, f)),
                            _ => {}
                        }
                    }
                }
            }
        }
    }
    jobs
}

fn quad_for(cfg: &RunConfig, check: &str, key: &str) -> QuadConfig {
    let mut q = cfg.quad.clone();
    q.seed = job_seed(check, key, cfg.seed);
    q
}

fn key(f: &FieldSpec, fp: &FracParams) -> String {
    format!("{}|{fp}", f.id())
}

fn run_job(job: &Job, cfg: &RunConfig) -> Result<Output, String> {
    let e = |e: nonlocal_korn::Error| e.to_string();
    match job {
        Job::Constants(fp) => {
            let mut out = constant_table(fp).map_err(e)?;
            if fp.p() == 2.0 {
                let sc = spectral_constants(fp).map_err(e)?;
                out.push(sc.l1);
                out.extend(sc.l2);
                out.push(sc.kappa);
            }
            Ok(Output::Constants(out))
        }
        Job::Hardy(fp, f) => {
            let q = quad_for(cfg, "hardy", &key(f, fp));
            let mut out = vec![hardy_check(f, fp, &q).map_err(e)?, hardy_split_check(f, fp, &q).map_err(e)?];
            if fp.p() >= 2.0 {
                out.push(hardy_remainder_check(f, fp, &q, cfg.kappa_rem).map_err(e)?);
            }
            Ok(Output::Reports(out))
        }
        Job::KornBand(fp, f) => {
            let q = quad_for(cfg, "korn_band", &key(f, fp));
            let sc = spectral_constants(fp).map_err(e)?;
            let mut out = korn_band_check(f, &sc, &q).map_err(e)?;
            if matches!(f.family(), Family::Gaussian(_)) {
                out.push(parseval_check(f, &sc, &quad_for(cfg, "parseval", &key(f, fp))).map_err(e)?);
            }
            Ok(Output::Reports(out))
        }
        Job::KornHalf(fp, f) => {
            let q = quad_for(cfg, "korn_halfspace", &key(f, fp));
            Ok(Output::Reports(vec![korn_halfspace_check(f, fp, &q).map_err(e)?]))
        }
        Job::Extend(fp, f) => {
            let k = key(f, fp);
            Ok(Output::Reports(vec![
                extension_check(f, fp, &quad_for(cfg, "extension", &k)).map_err(e)?,
                decomposition_check(f, fp, &quad_for(cfg, "decomposition", &k)).map_err(e)?,
                mixed_integral_check(f, fp, &quad_for(cfg, "mixed", &k)).map_err(e)?,
            ]))
        }
        Job::Scaling(fp, f, lam) => {
            let q = quad_for(cfg, "scaling", &key(f, fp));
            Ok(Output::Reports(vec![scaling_check(f, *lam, fp, &q).map_err(e)?]))
        }
        Job::Ground(fp, x, v) => {
            Ok(Output::Reports(vec![ground_state_limit_check(fp, x, v, &default_eps_sequence()).map_err(e)?]))
        }
        Job::Pointwise(p) => {
            let seed = job_seed("pointwise", &p.to_string(), cfg.seed);
            Ok(Output::Reports(vec![pointwise_inequalities(*p, cfg.quad.n_samples, seed).map_err(e)?]))
        }
    }
}

/// Runs every job of `cfg` on a pool of `threads` workers; outputs are in
/// job order whatever the pool size.
pub fn run_all(cfg: &RunConfig, threads: usize) -> Result<Vec<Output>, String> {
    let custom = load_fields(cfg)?;
    let jobs = plan(cfg, &custom);
    if jobs.is_empty() {
        return Err("no applicable fields for the selected checks".into());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
    pool.install(|| jobs.par_iter().map(|j| run_job(j, cfg)).collect())
}

/// Groups korn reports by parameter point, in first-seen order.
pub fn korn_summaries(reports: &[VerificationReport]) -> Result<Vec<KornSummary>, String> {
    let mut order: Vec<FracParams> = Vec::new();
    for r in reports {
        if let Some(fp) = r.params {
            if r.check_name.starts_with("korn") || r.check_name == "parseval" {
                if !order.contains(&fp) {
                    order.push(fp);
                }
            }
        }
    }
    order
        .into_iter()
        .map(|fp| {
            let sc: SpectralConstants = spectral_constants(&fp).map_err(|e| e.to_string())?;
            let mine: Vec<VerificationReport> = reports.iter().filter(|r| r.params == Some(fp)).cloned().collect();
            let (lo, hi) = nonlocal_korn::spectral::korn_bounds(&sc).map_err(|e| e.to_string())?;
            let per_field_ratios = mine
                .iter()
                .filter(|r| r.check_name == "korn_band_upper" || r.check_name == "korn_halfspace")
                .map(|r| {
                    json!({
                        "field": r.field_id,
                        "domain": if r.check_name == "korn_halfspace" { "half_space" } else { "whole_space" },
                        "ratio": r.details.get("ratio").cloned().unwrap_or(Value::Null),
                    })
                })
                .collect();
            Ok(KornSummary {
                d: fp.d(),
                s: fp.s(),
                l1: sc.l1.value,
                l2: sc.l2.as_ref().map(|c| c.value),
                kappa: sc.kappa.value,
                band_lower: lo,
                band_upper: hi,
                per_field_ratios,
                reports: mine,
            })
        })
        .collect()
}
