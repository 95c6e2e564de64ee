//! Plot-ready CSV tables built from report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nonlocal_korn::verify::VerificationReport;
use serde_json::Value;

/// Collects reports from JSON-lines files: plain report lines, and the
/// `reports` arrays of `korn` summary lines. Header lines are skipped.
pub fn read_reports(paths: &[PathBuf]) -> Result<Vec<VerificationReport>, String> {
    let mut out = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let v: Value = serde_json::from_str(line).map_err(|e| format!("{}:{}: {e}", path.display(), i + 1))?;
            let parse = |v: &Value| {
                serde_json::from_value::<VerificationReport>(v.clone())
                    .map_err(|e| format!("{}:{}: {e}", path.display(), i + 1))
            };
            if v.get("check_name").is_some() {
                out.push(parse(&v)?);
            } else if let Some(Value::Array(rs)) = v.get("reports") {
                for r in rs {
                    out.push(parse(r)?);
                }
            }
        }
    }
    Ok(out)
}

fn num(v: Option<&Value>) -> String {
    match v {
        Some(Value::Number(n)) => n.to_string(),
        _ => String::new(),
    }
}

/// Writes one CSV per check type into `out_dir`:
/// `korn_band.csv` with `(field, d, s, ratio, band_lower, band_upper)`,
/// `hardy.csv` with `(d, p, s, kappa_hardy)` and, for any other check,
/// `<check>.csv` with `(field, d, p, s, lhs, rhs, margin, passed)`.
pub fn emit_plot_data(reports: &[VerificationReport], out_dir: &Path) -> Result<Vec<PathBuf>, String> {
    if reports.is_empty() {
        return Err("no reports to plot".into());
    }
    let mut tables: BTreeMap<String, (String, Vec<String>)> = BTreeMap::new();
    for r in reports {
        let (d, p, s) = match &r.params {
            Some(fp) => (fp.d().to_string(), fp.p().to_string(), fp.s().to_string()),
            None => (String::new(), num(r.details.get("p")), String::new()),
        };
        let field = r.field_id.clone().unwrap_or_default();
        let (name, header, row) = match r.check_name.as_str() {
            // the lower report carries the same ratio
            "korn_band_lower" => continue,
            "korn_band_upper" => (
                "korn_band".to_string(),
                "field,d,s,ratio,band_lower,band_upper",
                format!(
                    "{field},{d},{s},{},{},{}",
                    num(r.details.get("ratio")),
                    num(r.details.get("band_lower")),
                    num(r.details.get("band_upper"))
                ),
            ),
            "hardy" => ("hardy".to_string(), "d,p,s,kappa_hardy", format!("{d},{p},{s},{}", num(r.details.get("kappa_hardy")))),
            other => (
                other.to_string(),
                "field,d,p,s,lhs,rhs,margin,passed",
                format!("{field},{d},{p},{s},{},{},{},{}", r.lhs.value, r.rhs.value, r.margin, r.passed),
            ),
        };
        let t = tables.entry(name).or_insert_with(|| (header.to_string(), Vec::new()));
        // κ does not depend on the field
        if !(r.check_name == "hardy" && t.1.contains(&row)) {
            t.1.push(row);
        }
    }
    std::fs::create_dir_all(out_dir).map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let mut written = Vec::new();
    for (name, (header, rows)) in tables {
        let mut body = String::new();
        let _ = writeln!(body, "{header}");
        for row in rows {
            let _ = writeln!(body, "{row}");
        }
        let path = out_dir.join(format!("{name}.csv"));
        std::fs::write(&path, body).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nonlocal_korn::quad::Estimate;
    use nonlocal_korn::FracParams;
    use serde_json::json;

    fn report(check: &str, field: &str, s: f64) -> VerificationReport {
        let fp = FracParams::new(2, 2.0, s).unwrap();
        VerificationReport::new(check, Some(fp), Some(field), Estimate::exact(1.0, 0), Estimate::exact(2.0, 0), 1.0)
            .with("ratio", json!(1.5))
            .with("band_lower", json!(1.2))
            .with("band_upper", json!(3.4))
            .with("kappa_hardy", json!(7.0))
    }

    fn lines(p: &Path) -> Vec<String> {
        std::fs::read_to_string(p).unwrap().lines().map(str::to_string).collect()
    }

    #[test]
    fn empty_input_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_plot_data(&[], dir.path()).is_err());
    }

    #[test]
    fn single_report_gives_single_row() {
        let dir = tempfile::tempdir().unwrap();
        let w = emit_plot_data(&[report("korn_band_upper", "g", 0.25)], dir.path()).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(lines(&w[0]), vec!["field,d,s,ratio,band_lower,band_upper", "g,2,0.25,1.5,1.2,3.4"]);
    }

    #[test]
    fn one_row_per_s_and_one_file_per_check() {
        let dir = tempfile::tempdir().unwrap();
        let mut rs = Vec::new();
        for s in [0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9] {
            rs.push(report("korn_band_upper", "g", s));
            rs.push(report("korn_band_lower", "g", s));
            rs.push(report("hardy", "a", s));
            rs.push(report("hardy", "b", s));
        }
        rs.push(report("scaling", "a", 0.25));
        let w = emit_plot_data(&rs, dir.path()).unwrap();
        let names: Vec<String> = w.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        assert_eq!(names, vec!["hardy.csv", "korn_band.csv", "scaling.csv"]);
        assert_eq!(lines(&w[0]).len(), 9);
        assert_eq!(lines(&w[1]).len(), 9);
        assert_eq!(lines(&w[2]).len(), 2);
    }
}
