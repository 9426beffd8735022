//! Result files: `results.csv`, `run.json`, `fit.json`, written atomically.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::dynamics::Tolerances;
use crate::error::{Error, Result};
use crate::sweeps::{Extrapolation, FitResult, RangeSensitivity, SweepRow};

pub const RESULTS_FILE: &str = "results.csv";
pub const RUN_FILE: &str = "run.json";
pub const FIT_FILE: &str = "fit.json";

/// Leading columns of `results.csv`; further diagnostics follow.
pub const RESULT_COLUMNS: [&str; 9] = [
    "theta_ratio",
    "theta",
    "lambda",
    "xi_s_sq",
    "xi_R_sq",
    "xi_R_db",
    "trace_drift",
    "tail_pop",
    "status",
];

pub const EXTRA_COLUMNS: [&str; 7] = [
    "n_atoms",
    "xi_min_var_sq",
    "xi_s_sq_printed",
    "hermiticity_drift",
    "n_max",
    "retried",
    "steps",
];

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(std::io::Error::other("output path has no file name")))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Shortest representation that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn results_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULT_COLUMNS.iter().chain(EXTRA_COLUMNS.iter()))?;
    for r in rows {
        let m = |f: fn(&crate::metrics::SqueezingReport) -> f64| {
            num(r.report.as_ref().map_or(f64::NAN, f))
        };
        w.write_record([
            num(r.theta_ratio),
            num(r.theta),
            num(r.lambda),
            m(|x| x.xi_s_sq),
            m(|x| x.xi_r_sq),
            m(|x| x.xi_r_sq_db),
            num(r.trace_drift),
            num(r.tail_pop),
            r.status.clone(),
            r.n_atoms.to_string(),
            m(|x| x.xi_min_var_sq),
            m(|x| x.xi_s_sq_printed),
            num(r.hermiticity_drift),
            r.n_max.to_string(),
            r.retried.to_string(),
            r.steps.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn write_results(dir: &Path, rows: &[SweepRow]) -> Result<()> {
    write_atomic(&dir.join(RESULTS_FILE), &results_csv(rows)?)
}

/// `(N, ξ_R², status)` read back from a `results.csv`.
pub fn read_results(path: &Path) -> Result<Vec<(usize, f64, String)>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config {
                path: "fit.input".into(),
                message: format!("{} has no `{name}` column", path.display()),
            })
    };
    let (n_col, xi_col, st_col) = (col("n_atoms")?, col("xi_R_sq")?, col("status")?);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = |what: &str| Error::Config {
            path: "fit.input".into(),
            message: format!("unparsable {what} in {}", path.display()),
        };
        let n = rec[n_col].parse().map_err(|_| bad("n_atoms"))?;
        let xi = rec[xi_col].parse().map_err(|_| bad("xi_R_sq"))?;
        out.push((n, xi, rec[st_col].to_string()));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub rows: usize,
    pub failed_rows: usize,
    pub max_trace_drift: f64,
    pub max_hermiticity_drift: f64,
    pub max_tail_pop: f64,
    pub retried_rows: usize,
}

impl Diagnostics {
    pub fn from_rows(rows: &[SweepRow]) -> Self {
        let max = |f: fn(&SweepRow) -> f64| {
            rows.iter()
                .map(f)
                .filter(|v| v.is_finite())
                .fold(0.0, f64::max)
        };
        Self {
            rows: rows.len(),
            failed_rows: rows.iter().filter(|r| !r.is_ok()).count(),
            max_trace_drift: max(|r| r.trace_drift),
            max_hermiticity_drift: max(|r| r.hermiticity_drift),
            max_tail_pop: max(|r| r.tail_pop),
            retried_rows: rows.iter().filter(|r| r.retried).count(),
        }
    }
}

/// Provenance record written as `run.json`.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord<'a, D: Serialize> {
    pub config: &'a RunConfig,
    pub version: &'static str,
    pub command: &'static str,
    pub wall_time_s: f64,
    pub tolerances: Tolerances,
    pub diagnostics: D,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[derive(Clone, Debug, Serialize)]
pub struct FitRecord {
    pub fit: FitResult,
    pub range_sensitivity: Option<RangeSensitivity>,
    pub extrapolations: Vec<Extrapolation>,
    pub excluded_rows: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, status: &str) -> SweepRow {
        SweepRow {
            n_atoms: n,
            theta_ratio: 0.1 + 0.2,
            theta: 1.0 / 3.0,
            lambda: 1e-300,
            report: None,
            trace_drift: 1e-15,
            hermiticity_drift: 0.0,
            tail_pop: 2.5e-7,
            n_max: 16,
            retried: false,
            steps: 10,
            status: status.to_string(),
        }
    }

    #[test]
    fn csv_header_and_round_trip_numbers() {
        let bytes = results_csv(&[row(10, "ok"), row(20, "error: x, \"quoted\"")]).unwrap();
        let mut r = csv::Reader::from_reader(bytes.as_slice());
        let h: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(&h[..9], &RESULT_COLUMNS.map(String::from));
        let recs: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0][0].parse::<f64>().unwrap(), 0.1 + 0.2);
        assert_eq!(recs[0][1].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(recs[0][2].parse::<f64>().unwrap(), 1e-300);
        assert!(recs[0][4].parse::<f64>().unwrap().is_nan());
        assert_eq!(&recs[1][8], "error: x, \"quoted\"");
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        let leftovers = fs::read_dir(p.parent().unwrap()).unwrap().count();
        assert_eq!(leftovers, 1);
    }

    #[test]
    fn results_read_back() {
        let dir = tempfile::tempdir().unwrap();
        write_results(dir.path(), &[row(10, "ok"), row(16, "truncation_unsafe")]).unwrap();
        let back = read_results(&dir.path().join(RESULTS_FILE)).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].0, 16);
        assert_eq!(back[1].2, "truncation_unsafe");
        assert!(back[0].1.is_nan());
    }
}
