//! Monte Carlo orchestration: per-run data generation, tuning, estimation
//! and scoring.
//!
//! Runs execute in parallel, each with its own random stream keyed by
//! `(seed, run)`, and are assembled in run order, so the report payload is
//! a pure function of the configuration.

use std::ops::ControlFlow;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::config::{EstimatorConfig, ExperimentConfig, ExperimentKind, MethodKind, ParamKernel, Score, Strategy};
use super::generate::{gen_classify_mixture, gen_franke, gen_inverse_problem, stream_rng, PointSet, Split};
use super::ingest::{ingest_csv, EstimationProblem};
use super::metrics::{fit_classification, fit_regression, fit_theta};
use super::report::{CallRatio, EstimatorSummary, FitReport, RunRecord, REPORT_VERSION};
use crate::error::{Error, Result};
use crate::kernels::{BoostingKernel, KernelSpec, SpectralModel};
use crate::rkhs::{
    boost_rkhs_classic_with, boost_rkhs_kernel, weak_learner_rkhs, FunctionEstimate, PointKernel, RkhsProblem,
};
use crate::solver::{estimate_theta, SolveOptions, DEFAULT_MAX_ITER};
use crate::tuning::{estimate_sigma2, golden_section, grid_search, logspace, tune_sure, SureOptions, SureSurface};

/// Weak-learner weight used by the RKHS methods when none is configured.
pub const DEFAULT_GAMMA: f64 = 1000.0;

const DEFAULT_CLASSIFY_SIZE: usize = 500;
const DEFAULT_FRANKE_SIZE: usize = 1000;
/// Share of the non-test rows used for training when a linear problem is
/// tuned by hold-out.
const LINEAR_TRAIN_SHARE: f64 = 2.0 / 3.0;

/// Linear model data for one run.
#[derive(Debug, Clone)]
pub struct LinearData {
    pub u: DMatrix<f64>,
    pub y: DVector<f64>,
    /// True parameter, when known; scored with the parameter fit.
    pub theta: Option<DVector<f64>>,
    /// Known noise variance.
    pub sigma2: Option<f64>,
    /// Held-out rows scored with the regression fit when `theta` is unknown.
    pub test: Option<(DMatrix<f64>, DVector<f64>)>,
}

#[derive(Debug, Clone)]
pub enum RunData {
    Linear(LinearData),
    Points { split: Split, labeled: bool },
}

/// Everything an estimator produced on one run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub prediction: Prediction,
    pub lambda: Option<f64>,
    pub nu: Option<f64>,
    pub gamma: Option<f64>,
    pub solver_calls: usize,
    pub iterations: usize,
    pub converged: bool,
    pub nu_at_max: bool,
}

#[derive(Debug, Clone)]
pub enum Prediction {
    Theta(DVector<f64>),
    Function(FunctionEstimate),
}

/// Loads the CSV source of a `custom_csv` experiment.
pub fn load_source(cfg: &ExperimentConfig) -> Result<Option<EstimationProblem>> {
    match (&cfg.experiment, &cfg.data.csv) {
        (ExperimentKind::CustomCsv, Some(csv)) => ingest_csv(&csv.path, &csv.schema).map(Some),
        (ExperimentKind::CustomCsv, None) => Err(Error::Config("custom_csv needs a [data.csv] table".into())),
        _ => Ok(None),
    }
}

/// Generates (or resamples) the data of Monte Carlo run `run`.
pub fn prepare_run(cfg: &ExperimentConfig, source: Option<&EstimationProblem>, run: usize) -> Result<RunData> {
    let mut rng = stream_rng(cfg.seed, run as u64);
    Ok(match cfg.experiment {
        ExperimentKind::InverseMc => {
            let spec = cfg.data.inverse.clone().unwrap_or_default();
            let p = gen_inverse_problem(&mut rng, &spec)?;
            RunData::Linear(LinearData {
                u: p.u,
                y: p.y,
                theta: Some(p.theta),
                sigma2: Some(p.sigma2),
                test: None,
            })
        }
        ExperimentKind::ClassifyMixture => RunData::Points {
            split: gen_classify_mixture(&mut rng, cfg.data.size.unwrap_or(DEFAULT_CLASSIFY_SIZE)),
            labeled: true,
        },
        ExperimentKind::Franke => RunData::Points {
            split: gen_franke(&mut rng, cfg.data.size.unwrap_or(DEFAULT_FRANKE_SIZE)),
            labeled: false,
        },
        ExperimentKind::CustomCsv => {
            let source = source.ok_or_else(|| Error::Config("custom_csv data was not loaded".into()))?;
            let fraction = cfg.data.csv.as_ref().map_or(0.25, |c| c.test_fraction);
            let n = source.rows();
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let n_test = ((n as f64 * fraction).round() as usize).clamp(1, n.saturating_sub(2));
            let (test, rest) = order.split_at(n_test);
            if rest.len() < 2 {
                return Err(Error::Data(format!("{n} rows are too few to split")));
            }
            match source {
                EstimationProblem::Linear { u, y, .. } => {
                    let rows = |idx: &[usize]| {
                        (
                            u.select_rows(idx),
                            DVector::from_iterator(idx.len(), idx.iter().map(|&i| y[i])),
                        )
                    };
                    let (u_fit, y_fit) = rows(rest);
                    RunData::Linear(LinearData {
                        u: u_fit,
                        y: y_fit,
                        theta: None,
                        sigma2: None,
                        test: Some(rows(test)),
                    })
                }
                EstimationProblem::Points { inputs, y, labeled } => {
                    let n_train = ((rest.len() as f64 * LINEAR_TRAIN_SHARE).round() as usize).clamp(1, rest.len() - 1);
                    let pick = |idx: &[usize]| PointSet {
                        inputs: idx.iter().map(|&i| inputs[i].clone()).collect(),
                        y: DVector::from_iterator(idx.len(), idx.iter().map(|&i| y[i])),
                    };
                    RunData::Points {
                        split: Split {
                            train: pick(&rest[..n_train]),
                            validation: pick(&rest[n_train..]),
                            test: pick(test),
                        },
                        labeled: *labeled,
                    }
                }
            }
        }
    })
}

fn solve_opts(est: &EstimatorConfig) -> SolveOptions {
    SolveOptions::with_tol(est.tol, DEFAULT_MAX_ITER)
}

/// Mean validation score, lower is better.
fn score(est: &EstimatorConfig, y: &DVector<f64>, f: &DVector<f64>) -> f64 {
    let n = y.len().max(1) as f64;
    let total: f64 = match est.score {
        Score::Loss if est.loss.is_hinge() => y.iter().zip(f.iter()).map(|(l, v)| est.loss.scalar(l * v)).sum(),
        Score::Loss => y.iter().zip(f.iter()).map(|(a, b)| est.loss.scalar(a - b)).sum(),
        Score::Squared => (y - f).norm_squared(),
        Score::Misclassification => y
            .iter()
            .zip(f.iter())
            .filter(|(l, v)| (**l > 0.0) != (**v >= 0.0))
            .count() as f64,
    };
    total / n
}

fn param_kernel(est: &EstimatorConfig, m: usize) -> KernelSpec {
    match est.kernel {
        ParamKernel::Identity => KernelSpec::Identity(m),
        ParamKernel::StableSpline { alpha } => KernelSpec::StableSpline { dim: m, alpha },
    }
}

fn fit_theta_at(
    est: &EstimatorConfig,
    model: &SpectralModel,
    y: &DVector<f64>,
    lambda: f64,
    nu: f64,
    opts: &SolveOptions,
) -> Result<(DVector<f64>, usize, bool)> {
    let bk = BoostingKernel::new(model, lambda, nu)?;
    let t = estimate_theta(&bk, est.loss, y, opts)?;
    let (iters, conv) = t.solve.as_ref().map_or((0, true), |s| (s.iterations, s.converged));
    Ok((t.theta, iters, conv))
}

/// The spectral boosting estimator on a linear model.
pub fn fit_spectral(est: &EstimatorConfig, data: &LinearData) -> Result<Outcome> {
    let (u, y) = (&data.u, &data.y);
    let sigma2 = match est.sigma2.or(data.sigma2) {
        Some(s) => s,
        None => estimate_sigma2(u, y)?,
    };
    let kernel = param_kernel(est, u.ncols());
    let model = SpectralModel::from_spec(u, &kernel, sigma2)?;
    let opts = solve_opts(est);
    let mut calls = 0;
    let mut iterations = 0;
    let mut converged = true;
    let (lambda, nu, nu_at_max) = match est.strategy() {
        Strategy::Sure => {
            let surface = SureSurface::new(&model, y)?;
            let t = tune_sure(
                &surface,
                &SureOptions {
                    nu_max: est.nu_max,
                    fixed_lambda: est.lambda,
                    fixed_nu: est.nu,
                    ..SureOptions::default()
                },
            )?;
            let lambda = t
                .lambda
                .ok_or_else(|| Error::Numeric("SURE returned no lambda".into()))?;
            (lambda, t.nu, t.diagnostics.diverging_nu)
        }
        Strategy::Fixed => (est.lambda.expect("validated"), est.nu.expect("validated"), false),
        Strategy::Holdout => {
            let lambda = est.lambda.expect("validated");
            let n = y.len();
            let k = ((n as f64 * LINEAR_TRAIN_SHARE).round() as usize).clamp(1, n - 1);
            let train: Vec<usize> = (0..k).collect();
            let val: Vec<usize> = (k..n).collect();
            let (u_tr, y_tr) = (u.select_rows(&train), y.rows(0, k).into_owned());
            let (u_va, y_va) = (u.select_rows(&val), y.rows(k, n - k).into_owned());
            let sub = SpectralModel::from_spec(&u_tr, &kernel, sigma2)?;
            let objective = |nu: f64| -> Result<f64> {
                let (theta, it, conv) = fit_theta_at(est, &sub, &y_tr, lambda, nu, &opts)?;
                iterations += it;
                converged &= conv;
                Ok(score(est, &y_va, &(&u_va * theta)))
            };
            let found = nu_search(est, objective)?;
            calls += found.evaluations;
            (lambda, found.x, found.x >= est.nu_max - nu_edge(est))
        }
    };
    let (theta, it, conv) = fit_theta_at(est, &model, y, lambda, nu, &opts)?;
    Ok(Outcome {
        prediction: Prediction::Theta(theta),
        lambda: Some(lambda),
        nu: Some(nu),
        gamma: (lambda > 0.0).then(|| sigma2 / lambda),
        solver_calls: calls + 1,
        iterations: iterations + it,
        converged: converged && conv,
        nu_at_max,
    })
}

fn nu_edge(est: &EstimatorConfig) -> f64 {
    if est.exhaustive_nu {
        0.5
    } else {
        est.nu_tol
    }
}

fn nu_search<F>(est: &EstimatorConfig, f: F) -> Result<crate::tuning::LineSearch>
where
    F: FnMut(f64) -> Result<f64>,
{
    if est.exhaustive_nu {
        grid_search(f, 1.0, est.nu_max, 1.0)
    } else {
        golden_section(f, 1.0, est.nu_max, est.nu_tol)
    }
}

/// `γ` for the RKHS weak learner: explicit, else `σ²/λ`, else the default.
pub fn weak_gamma(est: &EstimatorConfig) -> f64 {
    est.gamma.unwrap_or_else(|| match est.lambda {
        Some(l) if l > 0.0 => est.sigma2.unwrap_or(1.0) / l,
        _ => DEFAULT_GAMMA,
    })
}

struct PointsContext<'a> {
    est: &'a EstimatorConfig,
    kernel: PointKernel,
    split: &'a Split,
    merged: PointSet,
    val_cross: DMatrix<f64>,
}

impl<'a> PointsContext<'a> {
    fn new(est: &'a EstimatorConfig, split: &'a Split) -> Result<Self> {
        let kernel = PointKernel::Gaussian { beta: est.beta };
        kernel.validate()?;
        Ok(Self {
            est,
            kernel,
            split,
            merged: split.train.concat(&split.validation),
            val_cross: kernel.cross(&split.train.inputs, &split.validation.inputs)?,
        })
    }

    fn problem(&self, set: &PointSet, gamma: f64) -> Result<RkhsProblem> {
        RkhsProblem::with_kernel(self.kernel, set.inputs.clone(), set.y.clone(), self.est.loss, gamma)
    }

    fn validation_score(&self, c: &DVector<f64>) -> f64 {
        score(self.est, &self.split.validation.y, &(&self.val_cross * c))
    }
}

/// Classic boosting: rounds are scanned on the validation data, then the
/// selected number of rounds is refit on training plus validation data.
fn fit_classic(ctx: &PointsContext<'_>) -> Result<Outcome> {
    let est = ctx.est;
    let gamma = weak_gamma(est);
    let opts = solve_opts(est);
    let (rounds, scanned, iterations, converged, at_max) = match (est.strategy(), est.nu) {
        (Strategy::Fixed, Some(nu)) | (Strategy::Sure, Some(nu)) => (nu.round().max(1.0) as usize, 0, 0, true, false),
        (Strategy::Fixed, None) | (Strategy::Sure, None) => {
            return Err(Error::Config(format!(
                "estimator '{}': fixed tuning needs nu",
                est.name
            )))
        }
        (Strategy::Holdout, _) => {
            let p = ctx.problem(&ctx.split.train, gamma)?;
            let max_rounds = est.nu_max.floor() as usize;
            let mut best = (f64::INFINITY, 1usize);
            let scan = boost_rkhs_classic_with(&p, max_rounds, &opts, |round, c| {
                let s = ctx.validation_score(c);
                if s < best.0 {
                    best = (s, round);
                }
                Ok(match est.patience {
                    Some(wait) if round - best.1 >= wait => ControlFlow::Break(()),
                    _ => ControlFlow::Continue(()),
                })
            })?;
            (
                best.1,
                scan.solver_calls,
                scan.iterations,
                scan.converged,
                best.1 == max_rounds,
            )
        }
    };
    let p = ctx.problem(&ctx.merged, gamma)?;
    let fit = boost_rkhs_classic_with(&p, rounds, &opts, |_, _| Ok(ControlFlow::Continue(())))?;
    Ok(Outcome {
        lambda: None,
        nu: Some(rounds as f64),
        gamma: Some(gamma),
        solver_calls: scanned + fit.solver_calls,
        iterations: iterations + fit.iterations,
        converged: converged && fit.converged,
        nu_at_max: at_max,
        prediction: Prediction::Function(fit),
    })
}

/// Single-solve boosting kernel with `ν` searched on the validation data.
fn fit_boost_kernel(ctx: &PointsContext<'_>) -> Result<Outcome> {
    let est = ctx.est;
    let gamma = weak_gamma(est);
    let sigma2 = est.sigma2.unwrap_or(1.0);
    let lambda = sigma2 / gamma;
    let opts = solve_opts(est);
    let mut iterations = 0;
    let mut converged = true;
    let (nu, evaluations, at_max) = match est.strategy() {
        Strategy::Holdout => {
            let p = ctx.problem(&ctx.split.train, gamma)?;
            let mut warm: Option<DVector<f64>> = None;
            let objective = |nu: f64| -> Result<f64> {
                let o = SolveOptions {
                    warm_start: warm.take(),
                    ..opts.clone()
                };
                let f = boost_rkhs_kernel(&p, lambda, sigma2, nu, &o)?;
                iterations += f.iterations;
                converged &= f.converged;
                warm = f.dual.clone();
                Ok(ctx.validation_score(&f.coefficients))
            };
            let found = nu_search(est, objective)?;
            (found.x, found.evaluations, found.x >= est.nu_max - nu_edge(est))
        }
        _ => (
            est.nu
                .ok_or_else(|| Error::Config(format!("estimator '{}': fixed tuning needs nu", est.name)))?,
            0,
            false,
        ),
    };
    let p = ctx.problem(&ctx.merged, gamma)?;
    let fit = boost_rkhs_kernel(&p, lambda, sigma2, nu, &opts)?;
    Ok(Outcome {
        lambda: Some(lambda),
        nu: Some(nu),
        gamma: Some(gamma),
        solver_calls: evaluations + 1,
        iterations: iterations + fit.iterations,
        converged: converged && fit.converged,
        nu_at_max: at_max,
        prediction: Prediction::Function(fit),
    })
}

/// The weak learner alone with `γ` picked from a log-spaced grid.
fn fit_kernel_rkhs(ctx: &PointsContext<'_>) -> Result<Outcome> {
    let est = ctx.est;
    let opts = solve_opts(est);
    let mut iterations = 0;
    let mut converged = true;
    let (gamma, evaluations) = match (est.strategy(), est.gamma) {
        (Strategy::Holdout, _) => {
            let (lo, hi, pts) = est.gamma_grid;
            let base = ctx.problem(&ctx.split.train, lo)?;
            let mut best = (f64::INFINITY, lo);
            for g in logspace(lo, hi, pts) {
                let f = weak_learner_rkhs(&base.with_gamma(g)?, &opts)?;
                iterations += f.iterations;
                converged &= f.converged;
                let s = ctx.validation_score(&f.coefficients);
                if s < best.0 {
                    best = (s, g);
                }
            }
            (best.1, pts)
        }
        (_, Some(g)) => (g, 0),
        (_, None) => (weak_gamma(est), 0),
    };
    let fit = weak_learner_rkhs(&ctx.problem(&ctx.merged, gamma)?, &opts)?;
    Ok(Outcome {
        lambda: None,
        nu: None,
        gamma: Some(gamma),
        solver_calls: evaluations + 1,
        iterations: iterations + fit.iterations,
        converged: converged && fit.converged,
        nu_at_max: false,
        prediction: Prediction::Function(fit),
    })
}

/// Fits one estimator on one run's data.
pub fn fit_estimator(est: &EstimatorConfig, data: &RunData) -> Result<Outcome> {
    match (data, est.method) {
        (RunData::Linear(d), MethodKind::Spectral) => fit_spectral(est, d),
        (RunData::Points { split, .. }, m) if m != MethodKind::Spectral => {
            let ctx = PointsContext::new(est, split)?;
            match m {
                MethodKind::ClassicRkhs => fit_classic(&ctx),
                MethodKind::BoostKernel => fit_boost_kernel(&ctx),
                _ => fit_kernel_rkhs(&ctx),
            }
        }
        _ => Err(Error::Config(format!(
            "estimator '{}': method {:?} does not match the data",
            est.name, est.method
        ))),
    }
}

/// Percentage fit of an outcome on the run's test data.
pub fn test_fit(data: &RunData, outcome: &Outcome) -> Result<f64> {
    match (data, &outcome.prediction) {
        (RunData::Linear(d), Prediction::Theta(theta)) => match (&d.theta, &d.test) {
            (Some(truth), _) => fit_theta(truth, theta),
            (None, Some((u, y))) => fit_regression(y, &(u * theta)),
            (None, None) => Err(Error::Config(
                "linear data has neither a true parameter nor test rows".into(),
            )),
        },
        (RunData::Points { split, labeled }, Prediction::Function(f)) => {
            let pred = f.predict(&split.test.inputs)?;
            if *labeled {
                fit_classification(&split.test.y, &pred)
            } else {
                fit_regression(&split.test.y, &pred)
            }
        }
        _ => Err(Error::Config("estimate does not match the data".into())),
    }
}

fn record(run: usize, est: &EstimatorConfig, fit: f64, o: &Outcome) -> RunRecord {
    RunRecord {
        run,
        estimator: est.name.clone(),
        fit,
        lambda: o.lambda,
        nu: o.nu,
        gamma: o.gamma,
        solver_calls: o.solver_calls,
        iterations: o.iterations,
        converged: o.converged,
        nu_at_max: o.nu_at_max,
    }
}

/// Runs every estimator on every Monte Carlo run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<FitReport> {
    cfg.validate()?;
    let source = load_source(cfg)?;
    let per_run: Vec<Vec<(RunRecord, f64)>> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let data = prepare_run(cfg, source.as_ref(), run)?;
            cfg.estimators
                .iter()
                .map(|est| {
                    let start = Instant::now();
                    let outcome = fit_estimator(est, &data)?;
                    let fit = test_fit(&data, &outcome)?;
                    Ok((record(run, est, fit, &outcome), start.elapsed().as_secs_f64()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let (records, seconds): (Vec<RunRecord>, Vec<f64>) = per_run.into_iter().flatten().unzip();
    let summaries: Vec<EstimatorSummary> = cfg
        .estimators
        .iter()
        .map(|e| {
            let rs: Vec<&RunRecord> = records.iter().filter(|r| r.estimator == e.name).collect();
            EstimatorSummary::from_records(&e.name, e.method, &rs)
        })
        .collect();
    let find = |m: MethodKind| summaries.iter().find(|s| s.method == m && s.mean_solver_calls > 0.0);
    let call_ratio = match (find(MethodKind::BoostKernel), find(MethodKind::ClassicRkhs)) {
        (Some(b), Some(c)) => Some(CallRatio {
            boost_kernel: b.name.clone(),
            classic: c.name.clone(),
            ratio: b.mean_solver_calls / c.mean_solver_calls,
        }),
        _ => None,
    };
    Ok(FitReport {
        report_version: REPORT_VERSION,
        experiment: cfg.experiment,
        runs: cfg.runs,
        seed: cfg.seed,
        summaries,
        call_ratio,
        records,
        seconds,
    })
}

/// Hyperparameters chosen for a single data set (no Monte Carlo, no test
/// split). Linear problems are tuned on all rows; point problems use the
/// leading three quarters for training and the rest for validation.
pub fn tune_problem(est: &EstimatorConfig, problem: &EstimationProblem, sigma2: Option<f64>) -> Result<Outcome> {
    let data = match problem {
        EstimationProblem::Linear { u, y, .. } => RunData::Linear(LinearData {
            u: u.clone(),
            y: y.clone(),
            theta: None,
            sigma2,
            test: None,
        }),
        EstimationProblem::Points { inputs, y, labeled } => {
            let n = y.len();
            let k = ((n as f64 * 0.75).round() as usize).clamp(1, n.saturating_sub(1));
            if k >= n {
                return Err(Error::Data(format!("{n} rows are too few to tune on")));
            }
            let set = |r: std::ops::Range<usize>| PointSet {
                inputs: inputs[r.clone()].to_vec(),
                y: y.rows(r.start, r.len()).into_owned(),
            };
            RunData::Points {
                split: Split {
                    train: set(0..k),
                    validation: set(k..n),
                    test: PointSet {
                        inputs: Vec::new(),
                        y: DVector::zeros(0),
                    },
                },
                labeled: *labeled,
            }
        }
    };
    fit_estimator(est, &data)
}
