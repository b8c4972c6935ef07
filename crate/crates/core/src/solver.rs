//! Convex solver for `min_a  V(y − A a) + aᵀa` and its relatives.
//!
//! All boosting estimators with a general PLQ loss reduce to this form:
//! Approach I uses the boosting-kernel factor directly, while problems
//! regularized by `bᵀ M b` with `M` PSD are rewritten through `M = W Λ Wᵀ`,
//! `a = Λ^{1/2} Wᵀ b`. The hinge loss acts on margins `ℓ_i (A a)_i`.
//!
//! The iterative path runs a monotone accelerated proximal gradient method
//! (FISTA with function-value restart) on the Fenchel dual
//!
//! ```text
//! min_u  ‖Aᵀu‖²/4 + Σ ψ_i(u_i),    a = Aᵀu / 2,
//! ```
//!
//! where `ψ_i` is the conjugate of the per-sample loss, so every proximal
//! step is a closed-form scalar loss prox on residual variables. The step is
//! `2/‖A‖²`, with the spectral norm from power iteration unless known.
//! Quadratic losses take a closed-form path instead.
//!
//! Boosting kernels at large `ν` make `A` extremely ill-conditioned and the
//! dual method stalls. When `A = W diag(c)` with orthonormal `W` (every
//! spectral reduction in this crate) the solver falls back after a short
//! dual run to over-relaxed ADMM, whose linear step is then diagonal.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::BoostingKernel;
use crate::linalg::{spectral_norm_sq, SymEig, RANK_TOL};
use crate::losses::LossSpec;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 50_000;

/// Dual iterations tried before [`Method::Auto`] switches to ADMM.
const DUAL_BUDGET: usize = 300;
const RELAXATION: f64 = 1.6;

/// Quadratic penalty on the decision variable.
#[derive(Debug, Clone)]
pub enum Regularizer {
    /// `aᵀ a`
    Identity,
    /// `bᵀ M b` with `M` symmetric PSD. The design must vanish on the null
    /// space of `M`.
    Quadratic(DMatrix<f64>),
}

/// `min_x  V(y − D x) + R(x)`, or with the hinge loss
/// `min_x  Σ |1 − ℓ_i (D x)_i|₊ + R(x)`.
#[derive(Debug, Clone)]
pub struct CompositeProblem {
    pub loss: LossSpec,
    pub design: DMatrix<f64>,
    pub regularizer: Regularizer,
    pub y: DVector<f64>,
    pub labels: Option<DVector<f64>>,
}

impl CompositeProblem {
    pub fn regression(loss: LossSpec, design: DMatrix<f64>, regularizer: Regularizer, y: DVector<f64>) -> Result<Self> {
        let p = Self {
            loss,
            design,
            regularizer,
            y,
            labels: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Hinge-loss classification; `labels` doubles as the data vector.
    pub fn classification(design: DMatrix<f64>, regularizer: Regularizer, labels: DVector<f64>) -> Result<Self> {
        let p = Self {
            loss: LossSpec::Hinge,
            design,
            regularizer,
            y: labels.clone(),
            labels: Some(labels),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        let n = self.design.nrows();
        if self.y.len() != n {
            return Err(Error::Dimension(format!(
                "design has {n} rows but data has length {}",
                self.y.len()
            )));
        }
        match (&self.labels, self.loss.is_hinge()) {
            (Some(l), true) => {
                if l.len() != n {
                    return Err(Error::Dimension(format!(
                        "labels have length {}, expected {n}",
                        l.len()
                    )));
                }
                check_labels(l)?;
            }
            (None, true) => return Err(Error::InvalidParameter("hinge loss requires labels".into())),
            (Some(_), false) => {
                return Err(Error::InvalidParameter(format!(
                    "labels are only meaningful for the hinge loss, got {}",
                    self.loss
                )))
            }
            (None, false) => {}
        }
        if let Regularizer::Quadratic(m) = &self.regularizer {
            if !m.is_square() || m.nrows() != self.design.ncols() {
                return Err(Error::Dimension(format!(
                    "regularizer is {}x{} but design has {} columns",
                    m.nrows(),
                    m.ncols(),
                    self.design.ncols()
                )));
            }
        }
        Ok(())
    }
}

/// Checks that every label is exactly `±1`.
pub fn check_labels(labels: &DVector<f64>) -> Result<()> {
    if let Some((i, v)) = labels.iter().enumerate().find(|(_, &v)| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidParameter(format!("labels must be ±1, entry {i} is {v}")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Relative optimality tolerance; the residual must drop below
    /// `tol · (1 + ‖y‖)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Dual starting point from a previous [`SolveResult::dual`].
    pub warm_start: Option<DVector<f64>>,
    /// Skip the closed-form quadratic path.
    pub force_iterative: bool,
    /// Keep the dual objective after each iteration (dual method only).
    pub record_trace: bool,
    pub method: Method,
}

/// Iterative algorithm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Method {
    /// ADMM when the design has known orthonormal structure, otherwise the
    /// accelerated dual method.
    #[default]
    Auto,
    /// Accelerated proximal gradient on the dual.
    Dual,
    /// ADMM splitting the loss argument from the design (requires a design of
    /// the form `W diag(c)` with orthonormal `W`; falls back to `Dual`).
    Admm,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            warm_start: None,
            force_iterative: false,
            record_trace: false,
            method: Method::Auto,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Minimizer in the problem's own variable (`a` or `b`).
    pub minimizer: DVector<f64>,
    /// The same minimizer in the reduced variable `a` of `min V(y − A a) + ‖a‖²`.
    pub reduced: DVector<f64>,
    /// Fitted values `D x`.
    pub fitted: DVector<f64>,
    /// Primal objective at the minimizer.
    pub objective: f64,
    pub iterations: usize,
    /// Norm of the dual gradient mapping, in units of the fitted values.
    pub residual: f64,
    pub converged: bool,
    pub warm_started: bool,
    /// Final dual iterate, usable as a warm start.
    pub dual: DVector<f64>,
    /// Dual objective per iteration (nonincreasing), when requested.
    pub trace: Vec<f64>,
}

/// What the fitted values are compared against.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Target<'a> {
    Residual(&'a DVector<f64>),
    Margin(&'a DVector<f64>),
}

impl Target<'_> {
    fn len(&self) -> usize {
        match self {
            Target::Residual(y) | Target::Margin(y) => y.len(),
        }
    }

    fn norm(&self) -> f64 {
        match self {
            Target::Residual(y) | Target::Margin(y) => y.norm(),
        }
    }

    fn primal_loss(&self, loss: &LossSpec, fitted: &DVector<f64>) -> f64 {
        match self {
            Target::Residual(y) => y.iter().zip(fitted.iter()).map(|(yi, s)| loss.scalar(yi - s)).sum(),
            Target::Margin(l) => l.iter().zip(fitted.iter()).map(|(li, s)| loss.scalar(li * s)).sum(),
        }
    }

    /// `Σ ψ_i(u_i)`.
    fn dual_loss(&self, loss: &LossSpec, u: &DVector<f64>) -> f64 {
        match self {
            Target::Residual(y) => y
                .iter()
                .zip(u.iter())
                .map(|(yi, ui)| loss.conjugate(*ui) - ui * yi)
                .sum(),
            Target::Margin(l) => l.iter().zip(u.iter()).map(|(li, ui)| loss.conjugate(-li * ui)).sum(),
        }
    }

    /// `prox_{t ψ}(v)` componentwise, via Moreau's identity.
    fn dual_prox(&self, loss: &LossSpec, t: f64, v: &DVector<f64>) -> DVector<f64> {
        let conj_prox = |x: f64| x - t * loss.prox(1.0 / t, x / t);
        match self {
            Target::Residual(y) => v.zip_map(y, |vi, yi| conj_prox(vi + t * yi)),
            Target::Margin(l) => v.zip_map(l, |vi, li| -li * conj_prox(-li * vi)),
        }
    }
}

/// Reduced problem `min_a Φ(A a) + ‖a‖²` with the map back to the original
/// variable `x = T a` (identity when absent).
#[derive(Debug, Clone)]
pub(crate) struct Factored {
    pub a: DMatrix<f64>,
    pub back: Option<DMatrix<f64>>,
    /// `‖A‖₂²`.
    pub norm_sq: f64,
    /// `A = W diag(c)` with orthonormal columns `W`, when known.
    pub basis: Option<(DMatrix<f64>, DVector<f64>)>,
}

impl Factored {
    pub fn new(a: DMatrix<f64>, back: Option<DMatrix<f64>>, norm_sq: Option<f64>) -> Self {
        let norm_sq = norm_sq.unwrap_or_else(|| spectral_norm_sq(&a, 1e-6, 10_000));
        Self {
            a,
            back,
            norm_sq,
            basis: None,
        }
    }

    /// `A = W diag(scales)` for orthonormal `W`.
    pub fn orthogonal(w: DMatrix<f64>, scales: DVector<f64>, back: Option<DMatrix<f64>>) -> Self {
        let mut a = w.clone();
        for (j, c) in scales.iter().enumerate() {
            a.column_mut(j).scale_mut(*c);
        }
        let norm_sq = scales.iter().fold(0.0f64, |m, c| m.max(c * c));
        Self {
            a,
            back,
            norm_sq,
            basis: Some((w, scales)),
        }
    }

    /// Reduction of `min V(y − s_d M c) + s_r cᵀ M c` for `M = W diag(values) Wᵀ`
    /// given its retained (strictly positive) eigenpairs: `a = sqrt(s_r) Λ^{1/2} Wᵀ c`.
    pub fn from_spectral(vectors: &DMatrix<f64>, values: &[f64], design_scale: f64, reg_scale: f64) -> Self {
        let r = values.len();
        let w = vectors.columns(0, r).into_owned();
        let mut back = w.clone();
        for (j, &v) in values.iter().enumerate() {
            back.column_mut(j).scale_mut(1.0 / (v * reg_scale).sqrt());
        }
        let scales = DVector::from_iterator(r, values.iter().map(|v| design_scale * (v / reg_scale).sqrt()));
        Self::orthogonal(w, scales, Some(back))
    }

    fn map_back(&self, a: &DVector<f64>) -> DVector<f64> {
        match &self.back {
            Some(t) => t * a,
            None => a.clone(),
        }
    }
}

fn reduce(problem: &CompositeProblem) -> Result<Factored> {
    match &problem.regularizer {
        Regularizer::Identity => Ok(Factored::new(problem.design.clone(), None, None)),
        Regularizer::Quadratic(m) => {
            let eig = SymEig::new(m)?;
            let max = eig.max_value();
            let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
            if min < -1e-10 * max.max(f64::MIN_POSITIVE) {
                return Err(Error::NotPsd {
                    min_eigenvalue: min,
                    tolerance: 1e-10 * max,
                });
            }
            let r = eig.rank(RANK_TOL);
            let p = m.nrows();
            if r < p {
                let null = eig.vectors.columns(r, p - r);
                let leak = (&problem.design * null).norm();
                if leak > 1e-8 * problem.design.norm().max(f64::MIN_POSITIVE) {
                    return Err(Error::Degenerate(format!(
                        "design acts on {} unpenalized directions of the regularizer",
                        p - r
                    )));
                }
            }
            // design = s M: the reduced design is W diag(s √Λ) exactly, which
            // also enables the ADMM fallback
            let s = problem.design.dot(m) / m.norm_squared().max(f64::MIN_POSITIVE);
            if (&problem.design - m * s).norm() <= 1e-12 * problem.design.norm() {
                return Ok(Factored::from_spectral(
                    &eig.vectors,
                    &eig.values.as_slice()[..r],
                    s,
                    1.0,
                ));
            }
            let w = eig.vectors.columns(0, r);
            let mut back = w.into_owned();
            for j in 0..r {
                back.column_mut(j).scale_mut(1.0 / eig.values[j].sqrt());
            }
            let a = &problem.design * &back;
            Ok(Factored::new(a, Some(back), None))
        }
    }
}

/// Solves a composite problem.
///
/// Deterministic: starts from zero unless a warm start is supplied. When the
/// iteration budget runs out the result carries `converged = false` together
/// with the achieved residual.
pub fn solve(problem: &CompositeProblem, opts: &SolveOptions) -> Result<SolveResult> {
    problem.validate()?;
    let factored = reduce(problem)?;
    let target = match &problem.labels {
        Some(l) => Target::Margin(l),
        None => Target::Residual(&problem.y),
    };
    solve_factored(&factored, &problem.loss, target, opts)
}

pub(crate) fn solve_factored(
    f: &Factored,
    loss: &LossSpec,
    target: Target<'_>,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    if f.a.nrows() != target.len() {
        return Err(Error::Dimension(format!(
            "design has {} rows, data has {}",
            f.a.nrows(),
            target.len()
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if let (LossSpec::Quadratic, Target::Residual(y), false) = (loss, target, opts.force_iterative) {
        return closed_form_quadratic(f, y);
    }
    match (&f.basis, opts.method, opts.record_trace) {
        (Some((w, c)), Method::Admm, _) => admm(f, w, c, loss, target, opts),
        (Some((w, c)), Method::Auto, false) => {
            let first = SolveOptions {
                max_iter: opts.max_iter.min(DUAL_BUDGET),
                ..opts.clone()
            };
            let res = accelerated_dual(f, loss, target, &first)?;
            if res.converged || opts.max_iter <= first.max_iter {
                return Ok(res);
            }
            let rest = SolveOptions {
                max_iter: opts.max_iter - res.iterations,
                warm_start: Some(res.dual),
                ..opts.clone()
            };
            let mut out = admm(f, w, c, loss, target, &rest)?;
            out.iterations += res.iterations;
            out.warm_started = opts.warm_start.is_some();
            Ok(out)
        }
        _ => accelerated_dual(f, loss, target, opts),
    }
}

fn finish(
    f: &Factored,
    loss: &LossSpec,
    target: Target<'_>,
    a: DVector<f64>,
    extra: (usize, f64, bool, bool, DVector<f64>, Vec<f64>),
) -> SolveResult {
    let fitted = &f.a * &a;
    let objective = target.primal_loss(loss, &fitted) + a.norm_squared();
    let (iterations, residual, converged, warm_started, dual, trace) = extra;
    SolveResult {
        minimizer: f.map_back(&a),
        reduced: a,
        fitted,
        objective,
        iterations,
        residual,
        converged,
        warm_started,
        dual,
        trace,
    }
}

fn closed_form_quadratic(f: &Factored, y: &DVector<f64>) -> Result<SolveResult> {
    let (n, p) = f.a.shape();
    let a = if p == 0 {
        DVector::zeros(0)
    } else if p <= n {
        let mut g = f.a.tr_mul(&f.a);
        for i in 0..p {
            g[(i, i)] += 1.0;
        }
        let chol = g
            .cholesky()
            .ok_or_else(|| Error::Numeric("normal equations are not positive definite".into()))?;
        chol.solve(&f.a.tr_mul(y))
    } else {
        let mut g = &f.a * f.a.transpose();
        for i in 0..n {
            g[(i, i)] += 1.0;
        }
        let chol = g
            .cholesky()
            .ok_or_else(|| Error::Numeric("normal equations are not positive definite".into()))?;
        f.a.tr_mul(&chol.solve(y))
    };
    let fitted = &f.a * &a;
    let dual = (y - &fitted) * 2.0;
    Ok(finish(
        f,
        &LossSpec::Quadratic,
        Target::Residual(y),
        a,
        (0, 0.0, true, false, dual, Vec::new()),
    ))
}

fn accelerated_dual(f: &Factored, loss: &LossSpec, target: Target<'_>, opts: &SolveOptions) -> Result<SolveResult> {
    let n = f.a.nrows();
    let p = f.a.ncols();
    let threshold = opts.tol * (1.0 + target.norm());

    if p == 0 || f.norm_sq == 0.0 {
        // nothing to fit: the regularizer alone pins the solution at zero
        return Ok(finish(
            f,
            loss,
            target,
            DVector::zeros(p),
            (0, 0.0, true, opts.warm_start.is_some(), DVector::zeros(n), Vec::new()),
        ));
    }

    // smooth part ‖Aᵀu‖²/4 has gradient A Aᵀ u / 2, Lipschitz ‖A‖²/2;
    // a small margin guards against the power-iteration underestimate
    let lip = 0.5 * f.norm_sq * (1.0 + 1e-6);
    let step = 1.0 / lip;

    let warm_started = opts.warm_start.is_some();
    let mut x = match &opts.warm_start {
        Some(u0) if u0.len() == n => target.dual_prox(loss, step, u0),
        Some(u0) => {
            return Err(Error::Dimension(format!(
                "warm start has length {}, expected {n}",
                u0.len()
            )))
        }
        None => DVector::zeros(n),
    };
    let dual_value = |at_u: &DVector<f64>, at_u_value: &DVector<f64>| -> f64 {
        0.25 * at_u_value.norm_squared() + target.dual_loss(loss, at_u)
    };

    let mut atx = f.a.tr_mul(&x);
    let mut dx = dual_value(&x, &atx);
    let mut yk = x.clone();
    let mut aty = atx.clone();
    let mut momentum = 1.0f64;
    let mut trace = Vec::new();
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let grad = &f.a * (&aty * 0.5);
        let z = target.dual_prox(loss, step, &(&yk - &grad * step));
        let gap_y = (&yk - &z).norm() * lip;
        let atz = f.a.tr_mul(&z);
        let dz = dual_value(&z, &atz);

        if dz <= dx || !dx.is_finite() {
            let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / next_momentum;
            yk = &z + (&z - &x) * beta;
            aty = &atz + (&atz - &atx) * beta;
            x = z;
            atx = atz;
            dx = dz;
            momentum = next_momentum;
        } else {
            // restart from the last accepted iterate
            yk = x.clone();
            aty = atx.clone();
            momentum = 1.0;
        }
        if opts.record_trace {
            trace.push(dx);
        }

        if gap_y <= threshold {
            residual = gradient_mapping(f, loss, target, &x, &atx, step, lip);
            if residual <= threshold {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        residual = gradient_mapping(f, loss, target, &x, &atx, step, lip);
        converged = residual <= threshold;
    }
    let a = &atx * 0.5;
    Ok(finish(
        f,
        loss,
        target,
        a,
        (iterations, residual, converged, warm_started, x, trace),
    ))
}

/// Scaled ADMM on `min Σ ξ_i²/c_i² + Σ ℓ(r_i)` subject to `r + D W ξ = t`,
/// where `a = ξ / c`, `(t, D) = (y, I)` for residuals and `(0, −diag(ℓ))` for
/// margins. Since `W` has orthonormal columns the `ξ`-step is diagonal. The
/// penalty is rebalanced from the residual ratio.
fn admm(
    f: &Factored,
    w: &DMatrix<f64>,
    c: &DVector<f64>,
    loss: &LossSpec,
    target: Target<'_>,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    let n = w.nrows();
    let threshold = opts.tol * (1.0 + target.norm());
    let (t, signs) = match target {
        Target::Residual(y) => (y.clone(), None),
        Target::Margin(l) => (DVector::zeros(n), Some(l.map(|v| -v))),
    };
    let apply_d = |v: DVector<f64>| match &signs {
        Some(d) => v.component_mul(d),
        None => v,
    };
    let ridge = c.map(|ci| 2.0 / (ci * ci));

    // geometric mean of the per-direction curvatures
    let mut rho = (ridge.iter().map(|k| k.ln()).sum::<f64>() / ridge.len().max(1) as f64).exp();
    let warm_started = opts.warm_start.is_some();
    // scaled multiplier: −ρ w is a loss subgradient at r
    let mut mult = match (&opts.warm_start, target) {
        (Some(u0), _) if u0.len() != n => {
            return Err(Error::Dimension(format!(
                "warm start has length {}, expected {n}",
                u0.len()
            )))
        }
        (Some(u0), Target::Residual(_)) => -u0 / rho,
        (Some(u0), Target::Margin(l)) => u0.component_mul(l) / rho,
        (None, _) => DVector::zeros(n),
    };
    let mut r = t.clone();
    let mut xi = DVector::zeros(c.len());
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let q = w.tr_mul(&apply_d(&t - &r - &mult));
        xi = q.zip_map(&ridge, |qi, k| rho * qi / (k + rho));
        let x0 = apply_d(w * &xi);
        let x = &x0 * RELAXATION + (&t - &r) * (1.0 - RELAXATION);
        let v = &t - &x - &mult;
        let r_prev = std::mem::replace(&mut r, v.map(|vi| loss.prox(1.0 / rho, vi)));
        let gap = &x + &r - &t;
        mult += &gap;

        let primal = (&x0 + &r - &t).norm();
        let dual = w.tr_mul(&apply_d(&r - &r_prev)).norm();
        residual = primal.max(dual);
        if residual <= threshold {
            converged = true;
            break;
        }
        if primal > 10.0 * rho * dual {
            rho *= 2.0;
            mult /= 2.0;
        } else if rho * dual > 10.0 * primal {
            rho /= 2.0;
            mult *= 2.0;
        }
    }
    let u = match target {
        Target::Residual(_) => -&mult * rho,
        Target::Margin(l) => mult.component_mul(l) * rho,
    };
    // strongly penalized directions are recovered from the multiplier,
    // which is accurate relative to their tiny scale
    let wu = w.tr_mul(&u);
    let a = DVector::from_fn(c.len(), |i, _| {
        if c[i] * c[i] * rho >= 2.0 {
            xi[i] / c[i]
        } else {
            0.5 * c[i] * wu[i]
        }
    });
    Ok(finish(
        f,
        loss,
        target,
        a,
        (iterations, residual, converged, warm_started, u, Vec::new()),
    ))
}

fn gradient_mapping(
    f: &Factored,
    loss: &LossSpec,
    target: Target<'_>,
    u: &DVector<f64>,
    atu: &DVector<f64>,
    step: f64,
    lip: f64,
) -> f64 {
    let grad = &f.a * (atu * 0.5);
    let next = target.dual_prox(loss, step, &(u - &grad * step));
    (u - next).norm() * lip
}

/// Output of [`estimate_theta`].
#[derive(Debug, Clone)]
pub struct ThetaEstimate {
    pub theta: DVector<f64>,
    pub fitted: DVector<f64>,
    /// `None` when the boosting kernel was degenerate and zero was returned.
    pub solve: Option<SolveResult>,
    pub degenerate: bool,
}

/// Approach I: solves `min_a V(y − A_{λ,ν} a) + aᵀa`, then maps the fitted
/// output back to parameter space.
///
/// For the hinge loss `y` holds the `±1` labels.
pub fn estimate_theta(
    bk: &BoostingKernel<'_>,
    loss: LossSpec,
    y: &DVector<f64>,
    opts: &SolveOptions,
) -> Result<ThetaEstimate> {
    let model = bk.model;
    model.check_len(y)?;
    loss.validate()?;
    if loss.is_hinge() {
        check_labels(y)?;
    }
    if model.rank() == 0 || bk.lambda == 0.0 {
        return Ok(ThetaEstimate {
            theta: DVector::zeros(model.u.ncols()),
            fitted: DVector::zeros(model.n()),
            solve: None,
            degenerate: true,
        });
    }
    let scales = bk.factor_scales();
    let w = model.v.columns(0, scales.len()).into_owned();
    let factored = Factored::orthogonal(w, scales, None);
    let target = if loss.is_hinge() {
        Target::Margin(y)
    } else {
        Target::Residual(y)
    };
    let res = solve_factored(&factored, &loss, target, opts)?;
    let theta = model.back_map_theta(&res.fitted)?;
    Ok(ThetaEstimate {
        theta,
        fitted: res.fitted.clone(),
        solve: Some(res),
        degenerate: false,
    })
}

/// Approach II in data space: `min_b V(y − B b) + bᵀ B b` with
/// `B = P_{λ,ν} / σ² = A_{λ,ν} A_{λ,ν}ᵀ`. Returns the fitted values `B b̂`.
pub fn estimate_output_data_space(
    bk: &BoostingKernel<'_>,
    loss: LossSpec,
    y: &DVector<f64>,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    let b = bk.matrix_p() / bk.model.sigma2;
    let problem = if loss.is_hinge() {
        CompositeProblem::classification(b.clone(), Regularizer::Quadratic(b), y.clone())?
    } else {
        CompositeProblem::regression(loss, b.clone(), Regularizer::Quadratic(b), y.clone())?
    };
    solve(&problem, opts)
}
