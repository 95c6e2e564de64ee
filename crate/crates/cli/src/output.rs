//! Report files and the stdout summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nonlocal_korn::constants::{ConstantValue, CSV_HEADER};
use nonlocal_korn::verify::{VerificationReport, SUMMARY_CSV_HEADER};
use serde::{Deserialize, Serialize};

use crate::config::{Format, RunConfig, Subcommand};
use crate::jobs::{korn_summaries, Output};

/// First line of every JSON output file.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub config: RunConfig,
}

pub const CSV_CONFIG_PREFIX: &str = "# config: ";

fn header_json(cfg: &RunConfig) -> Result<String, String> {
    serde_json::to_string(&Header { config: cfg.clone() }).map_err(|e| e.to_string())
}

pub fn split(outputs: &[Output]) -> (Vec<ConstantValue>, Vec<VerificationReport>) {
    let mut c = Vec::new();
    let mut r = Vec::new();
    for o in outputs {
        match o {
            Output::Constants(v) => c.extend(v.iter().cloned()),
            Output::Reports(v) => r.extend(v.iter().cloned()),
        }
    }
    (c, r)
}

fn push_line<T: Serialize>(s: &mut String, v: &T) -> Result<(), String> {
    *s += &serde_json::to_string(v).map_err(|e| e.to_string())?;
    s.push('\n');
    Ok(())
}

fn json_body(cfg: &RunConfig, outputs: &[Output]) -> Result<String, String> {
    let mut s = String::new();
    push_line(&mut s, &Header { config: cfg.clone() })?;
    if cfg.subcommand == Subcommand::Korn {
        let (_, reports) = split(outputs);
        for k in korn_summaries(&reports)? {
            push_line(&mut s, &k)?;
        }
        return Ok(s);
    }
    for o in outputs {
        match o {
            Output::Constants(v) => v.iter().try_for_each(|c| push_line(&mut s, c))?,
            Output::Reports(v) => v.iter().try_for_each(|r| push_line(&mut s, r))?,
        }
    }
    Ok(s)
}

fn csv_constants(cfg: &RunConfig, constants: &[ConstantValue]) -> Result<String, String> {
    let mut s = format!("{CSV_CONFIG_PREFIX}{}\n{CSV_HEADER}\n", header_json(cfg)?);
    for c in constants {
        s += &c.csv_row();
        s.push('\n');
    }
    Ok(s)
}

fn csv_reports(cfg: &RunConfig, reports: &[VerificationReport]) -> Result<String, String> {
    let mut s = format!("{CSV_CONFIG_PREFIX}{}\n{SUMMARY_CSV_HEADER}\n", header_json(cfg)?);
    for r in reports {
        s += &r.csv_row();
        s.push('\n');
    }
    Ok(s)
}

/// `run.csv` → `run.constants.csv`.
fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map_or("out".into(), |s| s.to_string_lossy().into_owned());
    let ext = path.extension().map_or("csv".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.{tag}.{ext}"))
}

fn write(path: &Path, body: &str) -> Result<(), String> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    }
    std::fs::write(path, body).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Writes the configured output file(s); returns the paths written.
pub fn write_outputs(cfg: &RunConfig, outputs: &[Output]) -> Result<Vec<PathBuf>, String> {
    let Some(path) = &cfg.output.path else { return Ok(vec![]) };
    match cfg.output.format {
        Format::Json => {
            write(path, &json_body(cfg, outputs)?)?;
            Ok(vec![path.clone()])
        }
        Format::Csv => {
            let (constants, reports) = split(outputs);
            if reports.is_empty() {
                write(path, &csv_constants(cfg, &constants)?)?;
                return Ok(vec![path.clone()]);
            }
            write(path, &csv_reports(cfg, &reports)?)?;
            let mut written = vec![path.clone()];
            if !constants.is_empty() {
                let side = sibling(path, "constants");
                write(&side, &csv_constants(cfg, &constants)?)?;
                written.push(side);
            }
            Ok(written)
        }
    }
}

fn params_label(r: &VerificationReport) -> String {
    match &r.params {
        Some(fp) => format!("{fp}"),
        None => r.details.get("p").map_or(String::new(), |p| format!("p={p}")),
    }
}

/// Human-readable table for stdout.
pub fn summary_table(outputs: &[Output]) -> String {
    let (constants, reports) = split(outputs);
    let mut s = String::new();
    if !constants.is_empty() {
        let _ = writeln!(s, "{:<8} {:<20} {:>24} {:>12}  method", "name", "params", "value", "abs_error");
        for c in &constants {
            let label = c.params.map_or(format!("p={}", c.p), |fp| fp.to_string());
            let _ = writeln!(s, "{:<8} {:<20} {:>24.16e} {:>12.3e}  {}", c.name.as_str(), label, c.value, c.abs_error, c.method.as_str());
        }
    }
    if !reports.is_empty() {
        if !s.is_empty() {
            s.push('\n');
        }
        let _ = writeln!(s, "{:<18} {:<22} {:<20} {:>6} {:>12}", "check", "field", "params", "result", "margin");
        for r in &reports {
            let _ = writeln!(
                s,
                "{:<18} {:<22} {:<20} {:>6} {:>12.4}",
                r.check_name,
                r.field_id.as_deref().unwrap_or("-"),
                params_label(r),
                if r.passed { "pass" } else { "FAIL" },
                r.margin
            );
        }
        let failed = reports.iter().filter(|r| !r.passed).count();
        let _ = writeln!(s, "\n{} checks, {} passed, {} failed", reports.len(), reports.len() - failed, failed);
    }
    s
}

/// Reads the config echoed at the top of a JSON or CSV output file.
pub fn read_header(text: &str) -> Result<RunConfig, String> {
    let first = text.lines().next().ok_or("empty file")?;
    let json = first.strip_prefix(CSV_CONFIG_PREFIX).unwrap_or(first);
    serde_json::from_str::<Header>(json).map(|h| h.config).map_err(|e| e.to_string())
}
