//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::generate::InverseSpec;
use super::ingest::CsvSchema;
use crate::error::{Error, Result};
use crate::kernels::DEFAULT_NU_MAX;
use crate::losses::LossSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    InverseMc,
    ClassifyMixture,
    Franke,
    CustomCsv,
}

/// How an estimator is built and tuned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    /// Boosting kernel on a linear model `y = U θ + e` (design space).
    Spectral,
    /// Classical boosting in an RKHS, one weak-learner solve per round.
    ClassicRkhs,
    /// Single-solve RKHS estimator with the boosting kernel.
    BoostKernel,
    /// The RKHS weak learner alone, `γ` chosen on a grid.
    KernelRkhs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Sure,
    Holdout,
    Fixed,
}

/// Validation score used by hold-out tuning; lower is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Score {
    /// Mean of the estimator's own loss.
    #[default]
    Loss,
    /// Mean squared error.
    Squared,
    /// Fraction of sign errors.
    Misclassification,
}

/// Kernel on parameter space for the spectral method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamKernel {
    #[default]
    Identity,
    StableSpline {
        alpha: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub name: String,
    pub method: MethodKind,
    #[serde(default = "default_loss")]
    pub loss: LossSpec,
    /// Tuning strategy; defaults per method (SURE for spectral, hold-out
    /// otherwise).
    pub tuning: Option<Strategy>,
    #[serde(default)]
    pub score: Score,
    #[serde(default)]
    pub kernel: ParamKernel,
    /// Gaussian kernel parameter for RKHS methods.
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub lambda: Option<f64>,
    pub sigma2: Option<f64>,
    pub gamma: Option<f64>,
    pub nu: Option<f64>,
    #[serde(default = "default_nu_max")]
    pub nu_max: f64,
    /// Golden-section bracket tolerance.
    #[serde(default = "default_nu_tol")]
    pub nu_tol: f64,
    #[serde(default)]
    pub exhaustive_nu: bool,
    /// Stop a classic-scheme scan after this many rounds without improvement.
    pub patience: Option<usize>,
    /// `(lo, hi, points)` log-spaced `γ` candidates.
    #[serde(default = "default_gamma_grid")]
    pub gamma_grid: (f64, f64, usize),
    /// Solver tolerance.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_loss() -> LossSpec {
    LossSpec::Quadratic
}
fn default_beta() -> f64 {
    10.0
}
fn default_nu_max() -> f64 {
    DEFAULT_NU_MAX
}
fn default_nu_tol() -> f64 {
    0.1
}
fn default_gamma_grid() -> (f64, f64, usize) {
    (0.01, 100.0, 20)
}
fn default_tol() -> f64 {
    1e-6
}

impl EstimatorConfig {
    /// An estimator with every optional setting at its default.
    pub fn new(name: &str, method: MethodKind) -> Self {
        Self {
            name: name.to_string(),
            method,
            loss: default_loss(),
            tuning: None,
            score: Score::default(),
            kernel: ParamKernel::default(),
            beta: default_beta(),
            lambda: None,
            sigma2: None,
            gamma: None,
            nu: None,
            nu_max: default_nu_max(),
            nu_tol: default_nu_tol(),
            exhaustive_nu: false,
            patience: None,
            gamma_grid: default_gamma_grid(),
            tol: default_tol(),
        }
    }

    pub fn strategy(&self) -> Strategy {
        self.tuning.unwrap_or(match self.method {
            MethodKind::Spectral => Strategy::Sure,
            _ => Strategy::Holdout,
        })
    }

    /// Checks the settings against each other and against the kind of data
    /// (`linear` for `y = U θ + e`, otherwise input locations).
    pub fn validate(&self, linear: bool) -> Result<()> {
        let ctx = |msg: String| Error::Config(format!("estimator '{}': {msg}", self.name));
        self.loss.validate().map_err(|e| ctx(e.to_string()))?;
        let rkhs = self.method != MethodKind::Spectral;
        if rkhs == linear {
            let data = if linear { "linear-model" } else { "input-location" };
            return Err(ctx(format!("method {:?} does not apply to {data} data", self.method)));
        }
        let strategy = self.strategy();
        match (self.method, strategy) {
            (MethodKind::Spectral, Strategy::Sure) if !self.loss.is_quadratic() => {
                return Err(ctx(format!("SURE tuning needs the quadratic loss, got {}", self.loss)))
            }
            (MethodKind::Spectral, Strategy::Fixed) if self.lambda.is_none() || self.nu.is_none() => {
                return Err(ctx("fixed tuning needs both lambda and nu".into()))
            }
            (MethodKind::Spectral, Strategy::Holdout) if self.lambda.is_none() => {
                return Err(ctx("hold-out tuning of nu needs a fixed lambda".into()))
            }
            (MethodKind::ClassicRkhs, _) if self.loss.is_hinge() => {
                return Err(ctx("the classic scheme cannot use the hinge loss".into()))
            }
            (m, Strategy::Sure) if m != MethodKind::Spectral => {
                return Err(ctx("SURE tuning is only available for the spectral method".into()))
            }
            _ => {}
        }
        let positive = |v: Option<f64>, what: &str| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(ctx(format!("{what} must be positive, got {x}"))),
            _ => Ok(()),
        };
        positive(self.sigma2, "sigma2")?;
        positive(self.gamma, "gamma")?;
        positive(Some(self.beta), "beta")?;
        positive(Some(self.nu_tol), "nu_tol")?;
        positive(Some(self.tol), "tol")?;
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(ctx(format!("lambda must be >= 0, got {l}")));
            }
        }
        if !(self.nu_max >= 1.0) {
            return Err(ctx(format!("nu_max must be >= 1, got {}", self.nu_max)));
        }
        if let Some(nu) = self.nu {
            if !(1.0..=self.nu_max).contains(&nu) {
                return Err(ctx(format!("nu = {nu} outside [1, {}]", self.nu_max)));
            }
        }
        let (lo, hi, pts) = self.gamma_grid;
        if !(lo > 0.0 && hi >= lo && pts >= 1) {
            return Err(ctx(format!("invalid gamma grid ({lo}, {hi}, {pts})")));
        }
        if let ParamKernel::StableSpline { alpha } = self.kernel {
            if !(0.0..1.0).contains(&alpha) {
                return Err(ctx(format!("stable spline alpha must lie in [0, 1), got {alpha}")));
            }
        }
        Ok(())
    }
}

/// Data-set options; which fields apply depends on the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Sample count for the classification and Franke generators.
    pub size: Option<usize>,
    pub inverse: Option<InverseSpec>,
    pub csv: Option<CsvSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSource {
    pub path: PathBuf,
    #[serde(flatten)]
    pub schema: CsvSchema,
    /// Fraction of rows held out for testing in every run.
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
}

fn default_test_fraction() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Directory for the emitted report files.
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(rename = "estimator")]
    pub estimators: Vec<EstimatorConfig>,
}

fn default_runs() -> usize {
    20
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file; relative CSV paths resolve against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let (Some(csv), Some(dir)) = (cfg.data.csv.as_mut(), path.parent()) {
            if csv.path.is_relative() {
                csv.path = dir.join(&csv.path);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("no [[estimator]] entries".into()));
        }
        let mut names: Vec<&str> = self.estimators.iter().map(|e| e.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate estimator name '{}'", w[0])));
        }
        let linear = match self.experiment {
            ExperimentKind::InverseMc => true,
            ExperimentKind::ClassifyMixture | ExperimentKind::Franke => false,
            ExperimentKind::CustomCsv => {
                let csv = self
                    .data
                    .csv
                    .as_ref()
                    .ok_or_else(|| Error::Config("custom_csv needs a [data.csv] table".into()))?;
                if !(csv.test_fraction > 0.0 && csv.test_fraction < 1.0) {
                    return Err(Error::Config(format!(
                        "test_fraction must lie in (0, 1), got {}",
                        csv.test_fraction
                    )));
                }
                csv.schema.validate()?;
                !csv.schema.u.is_empty()
            }
        };
        if let Some(size) = self.data.size {
            if size < 8 {
                return Err(Error::Config(format!("data size {size} is too small")));
            }
        }
        for e in &self.estimators {
            e.validate(linear)?;
        }
        Ok(())
    }

    /// Applies command-line overrides.
    pub fn override_with(&mut self, runs: Option<usize>, seed: Option<u64>, out: Option<PathBuf>, exhaustive_nu: bool) {
        if let Some(r) = runs {
            self.runs = r;
        }
        if let Some(s) = seed {
            self.seed = s;
        }
        if out.is_some() {
            self.out = out;
        }
        if exhaustive_nu {
            for e in &mut self.estimators {
                e.exhaustive_nu = true;
            }
        }
    }
}
