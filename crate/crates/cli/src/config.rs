//! Run configuration: flags, an optional config file, and their merge.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use nonlocal_korn::quad::QuadConfig;
use nonlocal_korn::verify::sweep;
use nonlocal_korn::FracParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Subcommand {
    Constants,
    Hardy,
    Korn,
    Extend,
    Scaling,
    Groundstate,
    Pointwise,
    Sweep,
    All,
}

impl Subcommand {
    fn default_sweep(self) -> &'static str {
        match self {
            Subcommand::Korn => "korn",
            _ => "default",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// Fully resolved configuration; echoed as the header of every output file
/// and accepted back as a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub params: Vec<FracParams>,
    pub sweep: Option<String>,
    /// JSON array of field specs; `None` selects the built-in library.
    pub fields: Option<PathBuf>,
    pub quad: QuadConfig,
    pub output: OutputSpec,
    pub seed: u64,
    /// Dilation factors for the scaling check.
    pub lambdas: Vec<f64>,
    /// Remainder constant; `None` uses the default reading.
    pub kappa_rem: Option<f64>,
}

/// Flags shared by every run subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Dimension (repeatable or comma separated).
    #[arg(long, value_delimiter = ',')]
    pub d: Vec<usize>,
    /// Integrability exponent (repeatable or comma separated).
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<f64>,
    /// Fractional order (repeatable or comma separated).
    #[arg(long, value_delimiter = ',')]
    pub s: Vec<f64>,
    /// Named parameter sweep: default, korn or quick.
    #[arg(long)]
    pub sweep: Option<String>,
    /// JSON file holding an array of field specs.
    #[arg(long)]
    pub fields: Option<PathBuf>,
    /// Monte Carlo samples per integral.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, env = "NONLOCAL_KORN_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// JSON or TOML config file; its values win over flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dilation factor for `scaling` (repeatable).
    #[arg(long = "lambda", value_delimiter = ',')]
    pub lambdas: Vec<f64>,
    #[arg(long)]
    pub kappa_rem: Option<f64>,
}

/// Config file contents: any subset of the [`RunConfig`] keys, plus the
/// flag-style shorthands `d`, `p`, `s` and `samples`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    subcommand: Option<Subcommand>,
    params: Option<Vec<FracParams>>,
    d: Option<Vec<usize>>,
    p: Option<Vec<f64>>,
    s: Option<Vec<f64>>,
    sweep: Option<String>,
    fields: Option<PathBuf>,
    samples: Option<usize>,
    quad: Option<QuadConfig>,
    output: Option<OutputSpec>,
    seed: Option<u64>,
    lambdas: Option<Vec<f64>>,
    kappa_rem: Option<f64>,
}

fn read_config_file(path: &Path) -> Result<ConfigFile, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    if path.extension().is_some_and(|e| e == "toml") {
        return toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()));
    }
    // a JSON report file replays the config echoed on its first line; where
    // the replay is written is up to the flags
    if let Ok(cfg) = crate::output::read_header(&text) {
        let v = serde_json::to_value(cfg).map_err(|e| e.to_string())?;
        let mut file: ConfigFile = serde_json::from_value(v).map_err(|e| e.to_string())?;
        file.output = None;
        return Ok(file);
    }
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// `file` if present (warning when the flag disagrees), else `flag`.
fn pick<T: PartialEq + std::fmt::Debug>(key: &str, flag: Option<T>, file: Option<T>, warnings: &mut Vec<String>) -> Option<T> {
    match (flag, file) {
        (Some(a), Some(b)) => {
            if a != b {
                warnings.push(format!("config file sets {key} = {b:?}, overriding flag value {a:?}"));
            }
            Some(b)
        }
        (a, b) => b.or(a),
    }
}

fn non_empty<T>(v: Vec<T>) -> Option<Vec<T>> {
    if v.is_empty() { None } else { Some(v) }
}

fn grid(ds: &[usize], ps: &[f64], ss: &[f64]) -> Result<Vec<FracParams>, String> {
    let mut out = Vec::new();
    for &d in ds {
        for &p in ps {
            for &s in ss {
                out.push(FracParams::new(d, p, s).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(out)
}

pub struct Resolved {
    pub config: RunConfig,
    pub jobs: usize,
    pub warnings: Vec<String>,
}

/// Merges flags with the optional config file and validates the result.
pub fn resolve(sub: Subcommand, args: &RunArgs) -> Result<Resolved, String> {
    let file = match &args.config {
        Some(p) => read_config_file(p)?,
        None => ConfigFile::default(),
    };
    let mut w = Vec::new();
    let subcommand = pick("subcommand", Some(sub), file.subcommand, &mut w).unwrap();
    let d = pick("d", non_empty(args.d.clone()), file.d, &mut w);
    let p = pick("p", non_empty(args.p.clone()), file.p, &mut w);
    let s = pick("s", non_empty(args.s.clone()), file.s, &mut w);
    let sweep_name = pick("sweep", args.sweep.clone(), file.sweep, &mut w);
    let fields = pick("fields", args.fields.clone(), file.fields, &mut w);
    let seed = pick("seed", args.seed, file.seed, &mut w).unwrap_or(nonlocal_korn::quad::DEFAULT_SEED);
    let lambdas = pick("lambdas", non_empty(args.lambdas.clone()), file.lambdas, &mut w).unwrap_or(vec![2.0, 3.0, 5.0]);
    let kappa_rem = pick("kappa_rem", args.kappa_rem, file.kappa_rem, &mut w);

    let file_samples = file.samples.or(file.quad.as_ref().map(|q| q.n_samples));
    let mut quad = file.quad.unwrap_or_default();
    if let Some(n) = pick("samples", args.samples, file_samples, &mut w) {
        quad.n_samples = n;
    }
    quad.seed = seed;
    quad.validate().map_err(|e| e.to_string())?;

    let flag_output = (args.out.is_some() || args.format.is_some())
        .then(|| OutputSpec { path: args.out.clone(), format: args.format.unwrap_or_default() });
    let output = pick("output", flag_output, file.output, &mut w).unwrap_or(OutputSpec { path: None, format: Format::Json });

    if let (Some(out), Some(cfg)) = (&output.path, &args.config) {
        if out == cfg {
            return Err(format!("output {} would overwrite the config file", out.display()));
        }
    }

    let explicit = d.is_some() || p.is_some() || s.is_some();
    let params = if let Some(ps) = file.params {
        if explicit || args.sweep.is_some() {
            w.push("config file params override --d/--p/--s/--sweep".into());
        }
        ps
    } else if explicit {
        if sweep_name.is_some() {
            w.push("--sweep ignored because --d/--p/--s were given".into());
        }
        let (dd, pd, sd) = if subcommand == Subcommand::Pointwise {
            (vec![1], vec![1.0, 1.5, 2.0, 3.0], vec![0.25])
        } else {
            (vec![1, 2, 3], vec![2.0], vec![0.25, 0.4, 0.6, 0.75])
        };
        grid(&d.unwrap_or(dd), &p.unwrap_or(pd), &s.unwrap_or(sd))?
    } else if subcommand == Subcommand::Pointwise && sweep_name.is_none() {
        grid(&[1], &[1.0, 1.5, 2.0, 3.0], &[0.25])?
    } else {
        sweep(sweep_name.as_deref().unwrap_or(subcommand.default_sweep())).map_err(|e| e.to_string())?
    };
    if params.is_empty() {
        return Err("no parameter points selected".into());
    }
    if subcommand != Subcommand::Pointwise {
        if let Some(bad) = params.iter().find(|fp| fp.ps_is_one()) {
            return Err(format!("ps = 1 excluded ({bad})"));
        }
    }
    if subcommand == Subcommand::Korn {
        if let Some(bad) = params.iter().find(|fp| fp.p() != 2.0) {
            return Err(format!("korn needs p = 2 ({bad})"));
        }
    }
    if lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err("scale factors must be positive".into());
    }
    let jobs = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err("--jobs must be >= 1".into());
    }
    let config = RunConfig {
        subcommand,
        params,
        sweep: if explicit { None } else { sweep_name },
        fields,
        quad,
        output,
        seed,
        lambdas,
        kappa_rem,
    };
    Ok(Resolved { config, jobs, warnings: w })
}
