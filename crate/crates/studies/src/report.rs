//! Study output: per-cell estimates, CSV and JSON writers.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::StudyConfig;
use crate::StudyError;

/// One table cell. `r` and `big_n` are the outer and inner replicate counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub study: String,
    pub model_id: String,
    /// Which test or quantity the estimate refers to, e.g. `mc_d_hat` or `chi2_ljung_box`.
    pub test: String,
    pub n: Option<usize>,
    pub m: usize,
    pub alpha: f64,
    /// `None` when the cell could not be computed; see the report warnings.
    pub estimate: Option<f64>,
    pub stderr: Option<f64>,
    pub r: Option<usize>,
    pub big_n: Option<usize>,
}

/// `(φ1, φ2, distortion)` for the AR(2) sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub phi1: f64,
    pub phi2: f64,
    pub m: usize,
    pub alpha: f64,
    pub distortion: f64,
}

/// Empirical against asymptotic quantiles of D̂_m for one (model, n, m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqSeries {
    pub model_id: String,
    pub n: usize,
    pub m: usize,
    pub probabilities: Vec<f64>,
    pub empirical: Vec<f64>,
    pub asymptotic: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub study: String,
    pub name: Option<String>,
    pub master_seed: u64,
    pub version: String,
    pub threads: usize,
    pub scale: usize,
    pub elapsed_seconds: f64,
    pub config: StudyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub cells: Vec<Cell>,
    pub sweep: Vec<SweepPoint>,
    pub qq: Vec<QqSeries>,
    pub warnings: Vec<String>,
    pub metadata: Metadata,
}

/// `√(p̂(1-p̂)/R)`.
pub fn binomial_stderr(p: f64, r: usize) -> f64 {
    (p * (1.0 - p) / r as f64).sqrt()
}

const CSV_HEADER: [&str; 10] = ["study", "model_id", "test", "n", "m", "alpha", "estimate", "stderr", "R", "N"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_error(e: csv::Error) -> StudyError {
    StudyError::Io(e.to_string())
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String, StudyError> {
    let bytes = w.into_inner().map_err(|e| StudyError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Output files for a report written under a common stem.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub sweep: Option<PathBuf>,
    pub qq: Vec<PathBuf>,
}

impl StudyReport {
    /// Main table, one row per cell. Contains no timing information.
    pub fn to_csv(&self) -> Result<String, StudyError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).map_err(csv_error)?;
        for c in &self.cells {
            w.write_record([
                c.study.clone(),
                c.model_id.clone(),
                c.test.clone(),
                opt(c.n),
                c.m.to_string(),
                c.alpha.to_string(),
                opt(c.estimate),
                opt(c.stderr),
                opt(c.r),
                opt(c.big_n),
            ])
            .map_err(csv_error)?;
        }
        into_string(w)
    }

    pub fn sweep_csv(&self) -> Result<String, StudyError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["phi1", "phi2", "m", "alpha", "distortion"]).map_err(csv_error)?;
        for s in &self.sweep {
            w.write_record([
                s.phi1.to_string(),
                s.phi2.to_string(),
                s.m.to_string(),
                s.alpha.to_string(),
                s.distortion.to_string(),
            ])
            .map_err(csv_error)?;
        }
        into_string(w)
    }

    /// Two-column QQ table for one series.
    pub fn qq_csv(series: &QqSeries) -> Result<String, StudyError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["asymptotic", "empirical"]).map_err(csv_error)?;
        for (a, e) in series.asymptotic.iter().zip(&series.empirical) {
            w.write_record([a.to_string(), e.to_string()]).map_err(csv_error)?;
        }
        into_string(w)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Where [`StudyReport::write`] puts each file for the stem `out` (a trailing `.csv` is dropped).
    pub fn output_paths(&self, out: &Path) -> OutputPaths {
        let stem = if out.extension().is_some_and(|e| e == "csv") { out.with_extension("") } else { out.to_path_buf() };
        let with = |suffix: &str| {
            let mut s = stem.as_os_str().to_owned();
            s.push(suffix);
            PathBuf::from(s)
        };
        OutputPaths {
            csv: with(".csv"),
            json: with(".json"),
            sweep: (!self.sweep.is_empty()).then(|| with("_sweep.csv")),
            qq: self.qq.iter().map(|s| with(&format!("_qq_{}_n{}_m{}.csv", sanitize(&s.model_id), s.n, s.m))).collect(),
        }
    }

    /// Renders every file in memory first, then writes them, so a failure while
    /// rendering leaves nothing behind.
    pub fn write(&self, out: &Path) -> Result<OutputPaths, StudyError> {
        let paths = self.output_paths(out);
        let mut files = vec![(paths.csv.clone(), self.to_csv()?), (paths.json.clone(), self.to_json())];
        if let Some(p) = &paths.sweep {
            files.push((p.clone(), self.sweep_csv()?));
        }
        for (p, s) in paths.qq.iter().zip(&self.qq) {
            files.push((p.clone(), Self::qq_csv(s)?));
        }
        if let Some(dir) = paths.csv.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| StudyError::Io(format!("{}: {e}", dir.display())))?;
        }
        for (path, body) in &files {
            std::fs::write(path, body).map_err(|e| StudyError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(paths)
    }
}

fn sanitize(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}
