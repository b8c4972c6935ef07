//! Experiment reports: a versioned JSON document, a flat per-run CSV table and
//! a separate metadata file holding wall-clock timings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentKind, MethodKind};
use crate::error::{Error, Result};

pub const REPORT_VERSION: u32 = 1;

/// One estimator on one Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub estimator: String,
    /// Percentage fit on the test data.
    pub fit: f64,
    pub lambda: Option<f64>,
    pub nu: Option<f64>,
    pub gamma: Option<f64>,
    pub solver_calls: usize,
    pub iterations: usize,
    pub converged: bool,
    /// The selected `ν` sits at the top of its search range.
    pub nu_at_max: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub name: String,
    pub method: MethodKind,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub mean_solver_calls: f64,
    pub total_solver_calls: usize,
    pub mean_nu: Option<f64>,
    pub unconverged_runs: usize,
}

/// Mean solver calls of the single-solve boosting estimator divided by those
/// of the classic scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRatio {
    pub boost_kernel: String,
    pub classic: String,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub report_version: u32,
    pub experiment: ExperimentKind,
    pub runs: usize,
    pub seed: u64,
    pub summaries: Vec<EstimatorSummary>,
    pub call_ratio: Option<CallRatio>,
    pub records: Vec<RunRecord>,
    /// Seconds per record, same order as `records`; kept out of the payload.
    #[serde(skip)]
    pub seconds: Vec<f64>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

impl EstimatorSummary {
    pub fn from_records(name: &str, method: MethodKind, records: &[&RunRecord]) -> Self {
        let mut fits: Vec<f64> = records.iter().map(|r| r.fit).collect();
        fits.sort_by(f64::total_cmp);
        let n = records.len().max(1) as f64;
        let total_solver_calls = records.iter().map(|r| r.solver_calls).sum();
        let nus: Vec<f64> = records.iter().filter_map(|r| r.nu).collect();
        Self {
            name: name.to_string(),
            method,
            median: quantile(&fits, 0.5),
            q1: quantile(&fits, 0.25),
            q3: quantile(&fits, 0.75),
            mean: fits.iter().sum::<f64>() / n,
            min: fits.first().copied().unwrap_or(f64::NAN),
            max: fits.last().copied().unwrap_or(f64::NAN),
            mean_solver_calls: total_solver_calls as f64 / n,
            total_solver_calls,
            mean_nu: (!nus.is_empty()).then(|| nus.iter().sum::<f64>() / nus.len() as f64),
            unconverged_runs: records.iter().filter(|r| !r.converged).count(),
        }
    }
}

impl FitReport {
    pub fn summary(&self, name: &str) -> Option<&EstimatorSummary> {
        self.summaries.iter().find(|s| s.name == name)
    }

    pub fn records_for<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a RunRecord> + 'a {
        self.records.iter().filter(move |r| r.estimator == name)
    }

    /// The deterministic JSON payload.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numeric(format!("cannot encode report: {e}")))
    }

    pub fn runs_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r).map_err(|e| Error::Data(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
    }

    pub fn meta_json(&self, total_seconds: f64) -> Result<String> {
        let generated = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let per_record: Vec<_> = self
            .records
            .iter()
            .zip(&self.seconds)
            .map(|(r, s)| serde_json::json!({ "run": r.run, "estimator": r.estimator, "seconds": s }))
            .collect();
        let meta = serde_json::json!({
            "generated_unix": generated,
            "total_seconds": total_seconds,
            "threads": rayon::current_num_threads(),
            "records": per_record,
        });
        serde_json::to_string_pretty(&meta).map_err(|e| Error::Numeric(e.to_string()))
    }

    /// Writes `report.json`, `runs.csv` and `meta.json` into `dir`.
    pub fn write(&self, dir: &Path, total_seconds: f64) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let files = [
            ("report.json", self.to_json()?),
            ("runs.csv", self.runs_csv()?),
            ("meta.json", self.meta_json(total_seconds)?),
        ];
        files
            .into_iter()
            .map(|(name, body)| {
                let path = dir.join(name);
                std::fs::write(&path, body)?;
                Ok(path)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    }
}
