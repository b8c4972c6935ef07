//! Function estimation in a reproducing kernel Hilbert space.
//!
//! By the representer theorem every estimator here has the form
//! `f̂(·) = Σ c_i 𝒦(x_i, ·)`. The weak learner solves
//!
//! ```text
//! min_c  V(y − K c) + γ cᵀ K c
//! ```
//!
//! and can be boosted either classically (refit on residuals, one solve per
//! round) or in a single solve through the boosting kernel built from
//! `P_λ = λ K`. In the latter the decision variable lives in data space,
//! `min_b V(y − B b) + bᵀ B b` with `B = P_{λ,ν}/σ²`, and the coefficients are
//! recovered as `c̃ = K† ỹ`. Only the fitted values `ỹ = B b̂` are unique.
//!
//! The Gram matrix is factorized once per problem; every `ν` or `γ` after
//! that reuses the same eigenvectors.

use std::ops::ControlFlow;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{check_inputs, gaussian};
use crate::linalg::{max_asymmetry, SymEig, RANK_TOL};
use crate::losses::LossSpec;
use crate::solver::{check_labels, solve_factored, Factored, SolveOptions, SolveResult, Target};

/// Kernel evaluated between input points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointKernel {
    /// `exp(−β ‖x − x'‖²)`
    Gaussian { beta: f64 },
}

impl PointKernel {
    pub fn validate(&self) -> Result<()> {
        match self {
            PointKernel::Gaussian { beta } if !(*beta > 0.0 && beta.is_finite()) => Err(Error::InvalidParameter(
                format!("gaussian bandwidth must be positive, got {beta}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64], a: &[f64]) -> f64 {
        match self {
            PointKernel::Gaussian { beta } => gaussian(x, a, *beta),
        }
    }

    pub fn gram(&self, inputs: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        self.validate()?;
        check_inputs(inputs)?;
        let n = inputs.len();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = self.eval(&inputs[i], &inputs[i]);
            for j in (i + 1)..n {
                let v = self.eval(&inputs[i], &inputs[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        Ok(k)
    }

    /// `m × n` matrix of `𝒦(x_i, a_j)` for `xs` (rows) against `anchors`.
    pub fn cross(&self, anchors: &[Vec<f64>], xs: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        self.validate()?;
        let dim = anchors.first().map(Vec::len);
        if let Some(d) = dim {
            if let Some((i, x)) = xs.iter().enumerate().find(|(_, x)| x.len() != d) {
                return Err(Error::Dimension(format!(
                    "point {i} has dimension {}, training inputs have {d}",
                    x.len()
                )));
            }
        }
        Ok(DMatrix::from_fn(xs.len(), anchors.len(), |i, j| {
            self.eval(&xs[i], &anchors[j])
        }))
    }
}

/// Retained eigenpairs of the Gram matrix.
#[derive(Debug)]
struct GramSpectrum {
    vectors: DMatrix<f64>,
    values: Vec<f64>,
}

impl GramSpectrum {
    fn new(gram: &DMatrix<f64>) -> Result<Self> {
        let scale = gram.amax();
        let asym = max_asymmetry(gram);
        if asym > 1e-10 * scale {
            return Err(Error::NotSymmetric(asym));
        }
        let eig = SymEig::new(gram)?;
        let max = eig.max_value();
        let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-10 * max {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
                tolerance: 1e-10 * max,
            });
        }
        let r = eig.rank(RANK_TOL);
        Ok(Self {
            vectors: eig.vectors.columns(0, r).into_owned(),
            values: eig.values.iter().take(r).copied().collect(),
        })
    }

    fn rank(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone)]
pub struct RkhsProblem {
    pub gram: DMatrix<f64>,
    pub inputs: Vec<Vec<f64>>,
    /// Needed only to evaluate estimates away from the training inputs.
    pub kernel: Option<PointKernel>,
    /// Outputs, or `±1` labels for the hinge loss.
    pub y: DVector<f64>,
    pub loss: LossSpec,
    pub gamma: f64,
    spectrum: Arc<GramSpectrum>,
}

impl RkhsProblem {
    pub fn new(
        gram: DMatrix<f64>,
        inputs: Vec<Vec<f64>>,
        kernel: Option<PointKernel>,
        y: DVector<f64>,
        loss: LossSpec,
        gamma: f64,
    ) -> Result<Self> {
        if !gram.is_square() || gram.nrows() != y.len() {
            return Err(Error::Dimension(format!(
                "gram is {}x{} but there are {} outputs",
                gram.nrows(),
                gram.ncols(),
                y.len()
            )));
        }
        if !inputs.is_empty() && inputs.len() != y.len() {
            return Err(Error::Dimension(format!(
                "{} inputs for {} outputs",
                inputs.len(),
                y.len()
            )));
        }
        check_inputs(&inputs)?;
        if let Some(k) = &kernel {
            k.validate()?;
        }
        let spectrum = Arc::new(GramSpectrum::new(&gram)?);
        let p = Self {
            gram,
            inputs,
            kernel,
            y,
            loss,
            gamma,
            spectrum,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds the Gram matrix from `kernel` over `inputs`.
    pub fn with_kernel(
        kernel: PointKernel,
        inputs: Vec<Vec<f64>>,
        y: DVector<f64>,
        loss: LossSpec,
        gamma: f64,
    ) -> Result<Self> {
        let gram = kernel.gram(&inputs)?;
        Self::new(gram, inputs, Some(kernel), y, loss, gamma)
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "regularization weight must be positive, got {}",
                self.gamma
            )));
        }
        self.loss.validate()?;
        if self.loss.is_hinge() {
            check_labels(&self.y)?;
        }
        Ok(())
    }

    /// Same data and factorization with another `γ`.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let p = Self { gamma, ..self.clone() };
        p.validate()?;
        Ok(p)
    }

    /// Same data and factorization with another loss.
    pub fn with_loss(&self, loss: LossSpec) -> Result<Self> {
        let p = Self { loss, ..self.clone() };
        p.validate()?;
        Ok(p)
    }

    /// Same inputs and factorization with other outputs.
    pub fn with_outputs(&self, y: DVector<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::Dimension(format!(
                "expected {} outputs, got {}",
                self.n(),
                y.len()
            )));
        }
        let p = Self { y, ..self.clone() };
        p.validate()?;
        Ok(p)
    }

    /// Restriction to the samples in `idx` (refactorizes the Gram matrix).
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let n = self.n();
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return Err(Error::Dimension(format!("index {bad} out of range for {n} samples")));
        }
        let gram = DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.gram[(idx[a], idx[b])]);
        let inputs = if self.inputs.is_empty() {
            Vec::new()
        } else {
            idx.iter().map(|&i| self.inputs[i].clone()).collect()
        };
        let y = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.y[i]));
        Self::new(gram, inputs, self.kernel, y, self.loss, self.gamma)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn rank(&self) -> usize {
        self.spectrum.rank()
    }

    fn target(&self) -> Target<'_> {
        if self.loss.is_hinge() {
            Target::Margin(&self.y)
        } else {
            Target::Residual(&self.y)
        }
    }

    fn zero_estimate(&self) -> FunctionEstimate {
        FunctionEstimate {
            coefficients: DVector::zeros(self.n()),
            inputs: self.inputs.clone(),
            kernel: self.kernel,
            fitted: DVector::zeros(self.n()),
            objective: self.loss.value(self.target_values().iter()),
            solver_calls: 0,
            iterations: 0,
            residual: 0.0,
            converged: true,
            dual: None,
        }
    }

    /// Loss arguments at `f = 0`: the outputs for regression, the margins
    /// (all ones) for classification.
    fn target_values(&self) -> DVector<f64> {
        if self.loss.is_hinge() {
            DVector::zeros(self.n())
        } else {
            self.y.clone()
        }
    }
}

/// `f̂(·) = Σ c_i 𝒦(x_i, ·)`.
#[derive(Debug, Clone)]
pub struct FunctionEstimate {
    pub coefficients: DVector<f64>,
    pub inputs: Vec<Vec<f64>>,
    pub kernel: Option<PointKernel>,
    /// `K c` at the training inputs.
    pub fitted: DVector<f64>,
    /// Objective of the last solve (for boosting by rounds, of the last round).
    pub objective: f64,
    pub solver_calls: usize,
    /// Iterations summed over all solves.
    pub iterations: usize,
    /// Largest final residual over all solves.
    pub residual: f64,
    pub converged: bool,
    /// Final dual iterate of the last solve, usable as a warm start.
    pub dual: Option<DVector<f64>>,
}

impl FunctionEstimate {
    /// Evaluates `f̂` at new points.
    pub fn predict(&self, xs: &[Vec<f64>]) -> Result<DVector<f64>> {
        let kernel = self.kernel.ok_or_else(|| {
            Error::InvalidParameter("estimate has no kernel function; only training values are known".into())
        })?;
        if self.inputs.len() != self.coefficients.len() {
            return Err(Error::Dimension(format!(
                "{} training inputs for {} coefficients",
                self.inputs.len(),
                self.coefficients.len()
            )));
        }
        let kx = kernel.cross(&self.inputs, xs)?;
        Ok(kx * &self.coefficients)
    }
}

/// Free-function form of [`FunctionEstimate::predict`].
pub fn predict(f: &FunctionEstimate, xs: &[Vec<f64>]) -> Result<DVector<f64>> {
    f.predict(xs)
}

fn estimate_from(p: &RkhsProblem, c: DVector<f64>, res: &SolveResult, calls: usize) -> FunctionEstimate {
    FunctionEstimate {
        fitted: &p.gram * &c,
        coefficients: c,
        inputs: p.inputs.clone(),
        kernel: p.kernel,
        objective: res.objective,
        solver_calls: calls,
        iterations: res.iterations,
        residual: res.residual,
        converged: res.converged,
        dual: Some(res.dual.clone()),
    }
}

fn weak_factor(p: &RkhsProblem) -> Factored {
    let s = &p.spectrum;
    Factored::from_spectral(&s.vectors, &s.values, 1.0, p.gamma)
}

/// `(K + γ I)⁻¹` applied through the spectrum: exact on the range of `K`,
/// `1/γ` on its null space.
fn ridge_coefficients(p: &RkhsProblem, y: &DVector<f64>) -> DVector<f64> {
    let s = &p.spectrum;
    let w = s.vectors.tr_mul(y);
    let in_range = &s.vectors * &w;
    let mut shrunk = w;
    for (wi, d) in shrunk.iter_mut().zip(&s.values) {
        *wi /= d + p.gamma;
    }
    &s.vectors * shrunk + (y - in_range) / p.gamma
}

fn quadratic_objective(p: &RkhsProblem, y: &DVector<f64>, c: &DVector<f64>, fitted: &DVector<f64>) -> f64 {
    (y - fitted).norm_squared() + p.gamma * c.dot(fitted)
}

/// Solves `min_c V(y − K c) + γ cᵀ K c`.
///
/// Quadratic losses use `ĉ = (K + γ I)⁻¹ y` unless `opts.force_iterative`.
pub fn weak_learner_rkhs(p: &RkhsProblem, opts: &SolveOptions) -> Result<FunctionEstimate> {
    p.validate()?;
    if p.loss.is_quadratic() && !opts.force_iterative {
        let c = ridge_coefficients(p, &p.y);
        let fitted = &p.gram * &c;
        return Ok(FunctionEstimate {
            objective: quadratic_objective(p, &p.y, &c, &fitted),
            coefficients: c,
            inputs: p.inputs.clone(),
            kernel: p.kernel,
            fitted,
            solver_calls: 1,
            iterations: 0,
            residual: 0.0,
            converged: true,
            dual: None,
        });
    }
    if p.rank() == 0 {
        return Ok(FunctionEstimate {
            solver_calls: 1,
            ..p.zero_estimate()
        });
    }
    let res = solve_factored(&weak_factor(p), &p.loss, p.target(), opts)?;
    Ok(estimate_from(p, res.minimizer.clone(), &res, 1))
}

/// Classical boosting in the RKHS: `rounds` weak-learner solves, each on the
/// residuals left by the previous rounds, with coefficients accumulated.
pub fn boost_rkhs_classic(p: &RkhsProblem, rounds: usize, opts: &SolveOptions) -> Result<FunctionEstimate> {
    boost_rkhs_classic_with(p, rounds, opts, |_, _| Ok(ControlFlow::Continue(())))
}

/// [`boost_rkhs_classic`] with a callback after every round receiving the
/// round number (from 1) and the accumulated coefficients; returning
/// `ControlFlow::Break` stops after that round. Each round is warm-started
/// from the previous round's dual solution.
pub fn boost_rkhs_classic_with<F>(
    p: &RkhsProblem,
    rounds: usize,
    opts: &SolveOptions,
    mut on_round: F,
) -> Result<FunctionEstimate>
where
    F: FnMut(usize, &DVector<f64>) -> Result<ControlFlow<()>>,
{
    p.validate()?;
    if p.loss.is_hinge() {
        return Err(Error::InvalidParameter(
            "classical boosting is not defined for the hinge loss: after the first round the \
             residuals are no longer binary labels, so the weak learner cannot be refit on them"
                .into(),
        ));
    }
    if rounds == 0 {
        return Err(Error::InvalidParameter("boosting needs at least one round".into()));
    }
    let n = p.n();
    let mut c = DVector::zeros(n);
    let mut fitted = DVector::zeros(n);
    let mut objective = 0.0;
    let mut converged = true;
    let mut iterations = 0;
    let mut residual = 0.0f64;
    let mut dual: Option<DVector<f64>> = None;
    let mut done = 0;
    let closed_form = p.loss.is_quadratic() && !opts.force_iterative;
    let factor = (!closed_form && p.rank() > 0).then(|| weak_factor(p));
    for round in 1..=rounds {
        let resid = &p.y - &fitted;
        let (ck, fk) = if closed_form {
            let ck = ridge_coefficients(p, &resid);
            let fk = &p.gram * &ck;
            objective = quadratic_objective(p, &resid, &ck, &fk);
            (ck, fk)
        } else if let Some(f) = &factor {
            let round_opts = SolveOptions {
                warm_start: dual.take().or_else(|| opts.warm_start.clone()),
                ..opts.clone()
            };
            let res = solve_factored(f, &p.loss, Target::Residual(&resid), &round_opts)?;
            converged &= res.converged;
            iterations += res.iterations;
            residual = residual.max(res.residual);
            objective = res.objective;
            dual = Some(res.dual.clone());
            (res.minimizer, res.fitted)
        } else {
            objective = p.loss.value(resid.iter());
            (DVector::zeros(n), DVector::zeros(n))
        };
        c += ck;
        fitted += fk;
        done = round;
        if on_round(round, &c)?.is_break() {
            break;
        }
    }
    Ok(FunctionEstimate {
        fitted: &p.gram * &c,
        coefficients: c,
        inputs: p.inputs.clone(),
        kernel: p.kernel,
        objective,
        solver_calls: done,
        iterations,
        residual,
        converged,
        dual,
    })
}

fn check_boost_params(p: &RkhsProblem, lambda: f64, sigma2: f64, nu: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "kernel scale must be >= 0, got {lambda}"
        )));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    if !(nu >= 1.0 && nu.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "boosting parameter must be >= 1, got {nu}"
        )));
    }
    if lambda > 0.0 {
        let implied = sigma2 / lambda;
        if (implied - p.gamma).abs() > 1e-9 * p.gamma {
            return Err(Error::InvalidParameter(format!(
                "σ²/λ = {implied} is inconsistent with the problem's γ = {}",
                p.gamma
            )));
        }
    }
    Ok(())
}

/// Single-solve boosting with the boosting kernel built from `P_λ = λ K`.
///
/// Solves `min_b V(y − B b) + bᵀ B b` with `B = P_{λ,ν}/σ²` (hinge: on
/// margins), then returns `c̃ = K† B b̂`. Requires `σ²/λ = γ`; `λ = 0` gives
/// the zero function.
pub fn boost_rkhs_kernel(
    p: &RkhsProblem,
    lambda: f64,
    sigma2: f64,
    nu: f64,
    opts: &SolveOptions,
) -> Result<FunctionEstimate> {
    p.validate()?;
    check_boost_params(p, lambda, sigma2, nu)?;
    if lambda == 0.0 || p.rank() == 0 {
        return Ok(p.zero_estimate());
    }
    let s = &p.spectrum;
    let growth: Vec<f64> = s.values.iter().map(|d| nu * (lambda * d / sigma2).ln_1p()).collect();

    if p.loss.is_quadratic() && !opts.force_iterative {
        let w = s.vectors.tr_mul(&p.y);
        let shrunk = DVector::from_iterator(w.len(), w.iter().zip(&growth).map(|(wi, g)| -(-g).exp_m1() * wi));
        let yt = &s.vectors * &shrunk;
        let c = &s.vectors * shrunk.component_div(&DVector::from_column_slice(&s.values));
        let fitted = &p.gram * &c;
        // bᵀBb = yᵀ B (B + I)⁻² y in closed form
        let mut pen = w;
        for (pi, g) in pen.iter_mut().zip(&growth) {
            *pi *= (-(-g).exp_m1() * (-g).exp()).sqrt();
        }
        return Ok(FunctionEstimate {
            objective: (&p.y - &yt).norm_squared() + pen.norm_squared(),
            coefficients: c,
            inputs: p.inputs.clone(),
            kernel: p.kernel,
            fitted,
            solver_calls: 1,
            iterations: 0,
            residual: 0.0,
            converged: true,
            dual: None,
        });
    }

    let scales: Vec<f64> = growth.iter().map(|g| g.exp_m1().min(f64::MAX)).collect();
    let f = Factored::from_spectral(&s.vectors, &scales, 1.0, 1.0);
    let res = solve_factored(&f, &p.loss, p.target(), opts)?;
    // c̃ = K† B b̂ = W diag(√s / Λ) a, avoiding the amplification of K†
    let weights = DVector::from_iterator(scales.len(), scales.iter().zip(&s.values).map(|(sc, d)| sc.sqrt() / d));
    let c = &s.vectors * res.reduced.component_mul(&weights);
    Ok(estimate_from(p, c, &res, 1))
}

/// Kernel support-vector classification through the boosting kernel:
/// `min_b Σ |1 − ℓ_i (B b)_i|₊ + bᵀ B b`. Classify with `sign(f̂(x))`.
pub fn boost_svc(p: &RkhsProblem, lambda: f64, sigma2: f64, nu: f64, opts: &SolveOptions) -> Result<FunctionEstimate> {
    if !p.loss.is_hinge() {
        return Err(Error::InvalidParameter(format!(
            "support-vector classification needs the hinge loss, got {}",
            p.loss
        )));
    }
    boost_rkhs_kernel(p, lambda, sigma2, nu, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, loss: LossSpec, gamma: f64) -> RkhsProblem {
        let inputs: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64]).collect();
        let y = DVector::from_fn(n, |i, _| (3.0 * i as f64 / n as f64).sin() + 0.1 * (i % 3) as f64);
        RkhsProblem::with_kernel(PointKernel::Gaussian { beta: 10.0 }, inputs, y, loss, gamma).unwrap()
    }

    #[test]
    fn ridge_fast_path_matches_linear_solve() {
        let p = toy(12, LossSpec::Quadratic, 0.3);
        let f = weak_learner_rkhs(&p, &SolveOptions::default()).unwrap();
        let mut m = p.gram.clone();
        for i in 0..12 {
            m[(i, i)] += 0.3;
        }
        let c = m.lu().solve(&p.y).unwrap();
        assert!((&f.coefficients - c).norm() < 1e-8);
    }

    #[test]
    fn classic_rejects_hinge() {
        let inputs = vec![vec![0.0], vec![1.0]];
        let y = DVector::from_vec(vec![1.0, -1.0]);
        let p = RkhsProblem::with_kernel(PointKernel::Gaussian { beta: 1.0 }, inputs, y, LossSpec::Hinge, 1.0).unwrap();
        let err = boost_rkhs_classic(&p, 2, &SolveOptions::default()).unwrap_err();
        assert!(err.to_string().contains("binary labels"));
    }

    #[test]
    fn inconsistent_gamma() {
        let p = toy(5, LossSpec::Quadratic, 2.0);
        assert!(boost_rkhs_kernel(&p, 1.0, 1.0, 2.0, &SolveOptions::default()).is_err());
        assert!(boost_rkhs_kernel(&p, 0.5, 1.0, 2.0, &SolveOptions::default()).is_ok());
        let zero = boost_rkhs_kernel(&p, 0.0, 1.0, 2.0, &SolveOptions::default()).unwrap();
        assert_eq!(zero.coefficients.norm(), 0.0);
    }

    #[test]
    fn predict_at_training_input() {
        let p = toy(8, LossSpec::Quadratic, 0.5);
        let f = weak_learner_rkhs(&p, &SolveOptions::default()).unwrap();
        let v = f.predict(&p.inputs[3..4]).unwrap();
        assert!((v[0] - f.fitted[3]).abs() < 1e-12);
        assert!(f.predict(&[vec![0.0, 1.0]]).is_err());
    }
}
