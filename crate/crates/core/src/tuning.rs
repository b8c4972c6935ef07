//! Hyperparameter estimation for the boosting kernel.
//!
//! In the eigenbasis of `U K Uᵀ` the SURE risk of the boosted smoother is a
//! closed-form function of `(λ, ν)`:
//!
//! ```text
//! J(λ, ν) = Σ z_i² α_i^{2ν} + 2σ²n − 2σ² Σ α_i^ν,   α_i = σ² / (λ d_i + σ²)
//! ```
//!
//! so after one factorization every evaluation is `O(n)`. The surface can be
//! multimodal; [`tune_sure`] scans a coarse grid and polishes the best point
//! with projected gradient descent in `(log λ, log ν)`.
//!
//! For general losses, [`tune_holdout`] scores candidates on a validation
//! split and searches `ν` by golden section (assuming a unimodal score) or an
//! exhaustive grid.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{SpectralModel, DEFAULT_NU_MAX};

/// The SURE objective over `(λ, ν)` for fixed data.
#[derive(Debug, Clone)]
pub struct SureSurface {
    /// Rotated data `Vᵀ y`.
    pub z: DVector<f64>,
    /// Eigenvalues `d_i` of `U K Uᵀ`.
    pub spectrum: DVector<f64>,
    pub sigma2: f64,
}

impl SureSurface {
    pub fn new(model: &SpectralModel, y: &DVector<f64>) -> Result<Self> {
        Ok(Self {
            z: model.rotate(y)?,
            spectrum: model.spectrum.clone(),
            sigma2: model.sigma2,
        })
    }

    pub fn from_parts(z: DVector<f64>, spectrum: DVector<f64>, sigma2: f64) -> Result<Self> {
        if z.len() != spectrum.len() {
            return Err(Error::Dimension(format!(
                "z has length {}, spectrum {}",
                z.len(),
                spectrum.len()
            )));
        }
        if !(sigma2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be positive, got {sigma2}"
            )));
        }
        if spectrum.iter().any(|&d| d < 0.0) {
            return Err(Error::InvalidParameter("spectrum must be nonnegative".into()));
        }
        Ok(Self { z, spectrum, sigma2 })
    }

    fn n(&self) -> usize {
        self.z.len()
    }

    /// Per-direction `(log α_i, α_i^ν)`.
    fn powers(&self, lambda: f64, nu: f64) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let s2 = self.sigma2;
        self.z.iter().zip(self.spectrum.iter()).map(move |(&z, &d)| {
            let log_alpha = -(lambda * d / s2).ln_1p();
            (z, log_alpha, (nu * log_alpha).exp())
        })
    }

    /// SURE risk `J(λ, ν)`.
    pub fn objective(&self, lambda: f64, nu: f64) -> f64 {
        let s2 = self.sigma2;
        let mut total = 2.0 * s2 * self.n() as f64;
        for (z, _, a_nu) in self.powers(lambda, nu) {
            total += z * z * a_nu * a_nu - 2.0 * s2 * a_nu;
        }
        total
    }

    /// `∂J/∂ν = 2 Σ log(α_i) α_i^ν (z_i² α_i^ν − σ²)`.
    pub fn d_nu(&self, lambda: f64, nu: f64) -> f64 {
        let s2 = self.sigma2;
        2.0 * self
            .powers(lambda, nu)
            .map(|(z, la, a_nu)| la * a_nu * (z * z * a_nu - s2))
            .sum::<f64>()
    }

    /// `λ ∂J/∂λ = −2ν Σ (1 − α_i) α_i^ν (z_i² α_i^ν − σ²)`.
    pub fn d_log_lambda(&self, lambda: f64, nu: f64) -> f64 {
        let s2 = self.sigma2;
        -2.0 * nu
            * self
                .powers(lambda, nu)
                .map(|(z, la, a_nu)| -la.exp_m1() * a_nu * (z * z * a_nu - s2))
                .sum::<f64>()
    }

    /// Thresholds `min_i (z_i² − σ²)/d_i` and `max_i (z_i² − σ²)/d_i` over
    /// directions with `d_i > 0`.
    ///
    /// Below the first SURE keeps boosting forever; above the second it never
    /// boosts. Either value may be negative.
    pub fn lambda_bounds(&self) -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (z, d) in self.z.iter().zip(self.spectrum.iter()) {
            if *d > 0.0 {
                let v = (z * z - self.sigma2) / d;
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if lo.is_infinite() {
            return Err(Error::Degenerate(
                "all eigenvalues are zero; λ thresholds undefined".into(),
            ));
        }
        Ok((lo, hi))
    }

    /// `median(σ² / d_i)` over retained directions: the natural λ scale.
    pub fn lambda_scale(&self) -> f64 {
        let mut v: Vec<f64> = self
            .spectrum
            .iter()
            .filter(|&&d| d > 0.0)
            .map(|d| self.sigma2 / d)
            .collect();
        if v.is_empty() {
            return 1.0;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len();
        if m % 2 == 1 {
            v[m / 2]
        } else {
            0.5 * (v[m / 2 - 1] + v[m / 2])
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TuneDiagnostics {
    pub at_boundary_nu1: bool,
    /// `ν̂` hit the upper bound, standing in for `ν̂ = ∞`.
    pub diverging_nu: bool,
    pub grid_evaluations: usize,
    pub local_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    /// Selected kernel scale (`None` when λ is not a tuned quantity).
    pub lambda: Option<f64>,
    pub nu: f64,
    /// Index into the inner hyperparameter candidates (hold-out only).
    pub inner_index: Option<usize>,
    pub objective: f64,
    pub diagnostics: TuneDiagnostics,
}

#[derive(Debug, Clone)]
pub struct SureOptions {
    pub lambda_points: usize,
    /// Grid spans `[lo, hi] · median(σ²/d_i)`; also the local-search box.
    pub lambda_span: (f64, f64),
    pub nu_points: usize,
    pub nu_max: f64,
    pub fixed_lambda: Option<f64>,
    pub fixed_nu: Option<f64>,
    pub max_local_iter: usize,
}

impl Default for SureOptions {
    fn default() -> Self {
        Self {
            lambda_points: 25,
            lambda_span: (1e-4, 1e4),
            nu_points: 25,
            nu_max: DEFAULT_NU_MAX,
            fixed_lambda: None,
            fixed_nu: None,
            max_local_iter: 500,
        }
    }
}

impl SureOptions {
    /// Ridge regression: `ν` pinned at 1.
    pub fn ridge() -> Self {
        Self {
            fixed_nu: Some(1.0),
            ..Self::default()
        }
    }
}

/// `points` values spaced evenly in log scale over `[lo, hi]`.
pub fn logspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..points)
                .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
                .collect()
        }
    }
}

/// Minimizes the SURE surface over `λ ≥ 0`, `1 ≤ ν ≤ ν_max`.
///
/// Global optimality is not guaranteed; the returned point is at least as
/// good as every grid point evaluated.
pub fn tune_sure(s: &SureSurface, opts: &SureOptions) -> Result<TuneResult> {
    if !(opts.nu_max >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "nu_max must be >= 1, got {}",
            opts.nu_max
        )));
    }
    if let Some(nu) = opts.fixed_nu {
        if !(1.0..=opts.nu_max).contains(&nu) {
            return Err(Error::InvalidParameter(format!(
                "fixed nu {nu} outside [1, {}]",
                opts.nu_max
            )));
        }
    }
    if let Some(l) = opts.fixed_lambda {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Error::InvalidParameter(format!("fixed lambda {l} must be >= 0")));
        }
    }
    let scale = s.lambda_scale();
    let lam_box = (opts.lambda_span.0 * scale, opts.lambda_span.1 * scale);
    let lambdas = match opts.fixed_lambda {
        Some(l) => vec![l],
        None => {
            let mut g = vec![0.0];
            g.extend(logspace(lam_box.0, lam_box.1, opts.lambda_points));
            g
        }
    };
    let nus = match opts.fixed_nu {
        Some(nu) => vec![nu],
        None => logspace(1.0, opts.nu_max, opts.nu_points.max(2)),
    };

    // ties resolve toward the earliest candidate: smaller λ, then smaller ν
    let mut best = (f64::INFINITY, 0.0, 1.0);
    let mut grid_evaluations = 0;
    for &l in &lambdas {
        for &nu in &nus {
            let v = s.objective(l, nu);
            grid_evaluations += 1;
            if v < best.0 {
                best = (v, l, nu);
            }
        }
    }

    let (mut obj, mut lam, mut nu) = best;
    let mut local_iterations = 0;
    let free_lambda = opts.fixed_lambda.is_none() && lam > 0.0;
    let free_nu = opts.fixed_nu.is_none();
    if free_lambda || free_nu {
        let bounds = Bounds {
            rho: if free_lambda {
                (lam_box.0.ln(), lam_box.1.ln())
            } else {
                (lam.ln(), lam.ln())
            },
            omega: if free_nu {
                (0.0, opts.nu_max.ln())
            } else {
                (nu.ln(), nu.ln())
            },
        };
        let (l2, n2, o2, iters) = local_descent(s, lam, nu, obj, &bounds, free_lambda, free_nu, opts.max_local_iter);
        if o2 <= obj {
            lam = l2;
            nu = n2;
            obj = o2;
        }
        local_iterations = iters;
    }

    let rel = 1e-6;
    Ok(TuneResult {
        lambda: Some(lam),
        nu,
        inner_index: None,
        objective: obj,
        diagnostics: TuneDiagnostics {
            at_boundary_nu1: opts.fixed_nu.is_none() && nu <= 1.0 + rel,
            diverging_nu: opts.fixed_nu.is_none() && nu >= opts.nu_max * (1.0 - rel),
            grid_evaluations,
            local_iterations,
        },
    })
}

struct Bounds {
    rho: (f64, f64),
    omega: (f64, f64),
}

/// Projected gradient descent with Barzilai–Borwein steps and Armijo
/// backtracking in `(ρ, ω) = (log λ, log ν)`.
#[allow(clippy::too_many_arguments)]
fn local_descent(
    s: &SureSurface,
    lambda: f64,
    nu: f64,
    obj: f64,
    b: &Bounds,
    free_lambda: bool,
    free_nu: bool,
    max_iter: usize,
) -> (f64, f64, f64, usize) {
    let project = |rho: f64, om: f64| (rho.clamp(b.rho.0, b.rho.1), om.clamp(b.omega.0, b.omega.1));
    let grad = |rho: f64, om: f64| {
        let (l, n) = (rho.exp(), om.exp());
        let gr = if free_lambda { s.d_log_lambda(l, n) } else { 0.0 };
        let go = if free_nu { n * s.d_nu(l, n) } else { 0.0 };
        (gr, go)
    };
    let f = |rho: f64, om: f64| s.objective(rho.exp(), om.exp());

    let (mut rho, mut om) = (lambda.ln(), nu.ln());
    let mut fx = obj;
    let mut g = grad(rho, om);
    let gscale = (g.0.abs() + g.1.abs()).max(1.0);
    let mut step = 0.1 / gscale;
    let mut iters = 0;
    let scale = obj.abs().max(1.0);
    while iters < max_iter {
        iters += 1;
        let mut t = step;
        let mut accepted = None;
        for _ in 0..60 {
            let (r2, o2) = project(rho - t * g.0, om - t * g.1);
            let f2 = f(r2, o2);
            let dec = g.0 * (rho - r2) + g.1 * (om - o2);
            if f2 <= fx - 1e-4 * dec {
                accepted = Some((r2, o2, f2));
                break;
            }
            t *= 0.5;
        }
        let Some((r2, o2, f2)) = accepted else { break };
        let moved = (r2 - rho).abs() + (o2 - om).abs();
        let g2 = grad(r2, o2);
        let (sr, so) = (r2 - rho, o2 - om);
        let (yr, yo) = (g2.0 - g.0, g2.1 - g.1);
        let sy = sr * yr + so * yo;
        step = if sy > 0.0 { (sr * sr + so * so) / sy } else { t * 2.0 };
        let decrease = fx - f2;
        rho = r2;
        om = o2;
        fx = f2;
        g = g2;
        if moved < 1e-12 || decrease <= 1e-15 * scale {
            break;
        }
    }
    (rho.exp(), om.exp().max(1.0), fx, iters)
}

/// Train/validation index partition.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

impl HoldoutSplit {
    pub fn new(train: Vec<usize>, validation: Vec<usize>) -> Result<Self> {
        if validation.is_empty() {
            return Err(Error::InvalidParameter("validation set is empty".into()));
        }
        if train.is_empty() {
            return Err(Error::InvalidParameter("training set is empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &i in train.iter().chain(validation.iter()) {
            if !seen.insert(i) {
                return Err(Error::InvalidParameter(format!(
                    "index {i} appears more than once in the split"
                )));
            }
        }
        Ok(Self { train, validation })
    }

    /// First `round(fraction · n)` indices train, the rest validate.
    pub fn leading(n: usize, fraction: f64) -> Result<Self> {
        let k = ((n as f64) * fraction).round() as usize;
        Self::new((0..k).collect(), (k..n).collect())
    }
}

/// How `ν` is searched on the validation score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NuSearch {
    /// Golden-section search down to the given bracket width.
    Golden { tol: f64 },
    /// Exhaustive scan with the given step.
    Grid { step: f64 },
}

#[derive(Debug, Clone)]
pub struct HoldoutOptions {
    pub nu_range: (f64, f64),
    pub search: NuSearch,
    /// Number of inner candidates (e.g. `γ` or kernel parameters) scanned
    /// exhaustively around the `ν` search.
    pub inner_candidates: usize,
}

impl Default for HoldoutOptions {
    fn default() -> Self {
        Self {
            nu_range: (1.0, DEFAULT_NU_MAX),
            search: NuSearch::Golden { tol: 0.1 },
            inner_candidates: 1,
        }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Outcome of a one-dimensional search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
    /// Final bracket width.
    pub width: f64,
}

/// Golden-section minimization of `f` over `[lo, hi]`.
///
/// The lower endpoint is always evaluated first and ties go to the smaller
/// argument, so a flat function returns `lo`. Unimodality is assumed.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<LineSearch>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(hi >= lo) || !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bad golden-section bracket [{lo}, {hi}] tol {tol}"
        )));
    }
    let mut best = (f(lo)?, lo);
    let mut evaluations = 1;
    let consider = |v: f64, x: f64, best: &mut (f64, f64)| {
        if v < best.0 || (v == best.0 && x < best.1) {
            *best = (v, x);
        }
    };
    let (mut a, mut b) = (lo, hi);
    if b - a <= tol {
        return Ok(LineSearch {
            x: best.1,
            value: best.0,
            evaluations,
            width: b - a,
        });
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    evaluations += 2;
    consider(fc, c, &mut best);
    consider(fd, d, &mut best);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
            evaluations += 1;
            consider(fc, c, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
            evaluations += 1;
            consider(fd, d, &mut best);
        }
    }
    Ok(LineSearch {
        x: best.1,
        value: best.0,
        evaluations,
        width: b - a,
    })
}

/// Exhaustive scan of `f` over `lo, lo + step, …, hi`; ties go to the smaller
/// argument.
pub fn grid_search<F>(mut f: F, lo: f64, hi: f64, step: f64) -> Result<LineSearch>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(hi >= lo) || !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("bad grid [{lo}, {hi}] step {step}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let mut best = (f64::INFINITY, lo);
    for i in 0..count {
        let x = (lo + step * i as f64).min(hi);
        let v = f(x)?;
        if v < best.0 {
            best = (v, x);
        }
    }
    Ok(LineSearch {
        x: best.1,
        value: best.0,
        evaluations: count,
        width: step,
    })
}

/// Hold-out tuning of `ν` (and optionally an inner candidate index).
///
/// `score(split, ν, inner)` returns a validation error, lower is better.
/// Ties break toward smaller `ν`, then the earlier inner candidate.
pub fn tune_holdout<F>(split: &HoldoutSplit, opts: &HoldoutOptions, mut score: F) -> Result<TuneResult>
where
    F: FnMut(&HoldoutSplit, f64, usize) -> Result<f64>,
{
    if split.validation.is_empty() {
        return Err(Error::InvalidParameter("validation set is empty".into()));
    }
    let (lo, hi) = opts.nu_range;
    if !(lo >= 1.0) || !(hi >= lo) {
        return Err(Error::InvalidParameter(format!("invalid nu range [{lo}, {hi}]")));
    }
    let mut best: Option<(LineSearch, usize)> = None;
    let mut evaluations = 0;
    for inner in 0..opts.inner_candidates.max(1) {
        let f = |nu: f64| score(split, nu, inner);
        let found = match opts.search {
            NuSearch::Golden { tol } => golden_section(f, lo, hi, tol)?,
            NuSearch::Grid { step } => grid_search(f, lo, hi, step)?,
        };
        evaluations += found.evaluations;
        let better = match &best {
            None => true,
            Some((b, _)) => found.value < b.value || (found.value == b.value && found.x < b.x),
        };
        if better {
            best = Some((found, inner));
        }
    }
    let (found, inner) = best.expect("at least one inner candidate");
    let edge = match opts.search {
        NuSearch::Golden { tol } => tol,
        NuSearch::Grid { step } => 0.5 * step,
    };
    Ok(TuneResult {
        lambda: None,
        nu: found.x,
        inner_index: (opts.inner_candidates > 1).then_some(inner),
        objective: found.value,
        diagnostics: TuneDiagnostics {
            at_boundary_nu1: found.x <= lo,
            diverging_nu: found.x >= hi - edge,
            grid_evaluations: evaluations,
            local_iterations: 0,
        },
    })
}

/// Unbiased noise variance `‖y − U θ_LS‖² / (n − m)`.
pub fn estimate_sigma2(u: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    let (n, m) = u.shape();
    if y.len() != n {
        return Err(Error::Dimension(format!("U has {n} rows, y has {}", y.len())));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("U has no columns".into()));
    }
    if n <= m {
        return Err(Error::InvalidParameter(format!(
            "need more observations than parameters (n = {n}, m = {m}); supply σ² instead"
        )));
    }
    let qr = u.clone().qr();
    let r = qr.r();
    let rmax = r.diagonal().amax();
    if r.diagonal().iter().any(|d| d.abs() <= 1e-12 * rmax) {
        return Err(Error::Degenerate("U is not of full column rank".into()));
    }
    let q = qr.q();
    let fitted = &q * q.tr_mul(y);
    Ok((y - fitted).norm_squared() / (n - m) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surface(z: &[f64], d: &[f64], s2: f64) -> SureSurface {
        SureSurface::from_parts(DVector::from_row_slice(z), DVector::from_row_slice(d), s2).unwrap()
    }

    #[test]
    fn lambda_zero_objective_is_data_energy() {
        let s = surface(&[1.0, -2.0, 0.5], &[3.0, 1.0, 0.0], 0.4);
        assert!((s.objective(0.0, 3.3) - 5.25).abs() < 1e-12);
        assert_eq!(s.d_nu(0.0, 2.0), 0.0);
    }

    #[test]
    fn large_nu_limit() {
        let s = surface(&[1.0, -2.0], &[3.0, 1.0], 0.4);
        assert!((s.objective(10.0, 1e4) - 2.0 * 0.4 * 2.0).abs() < 1e-9);
    }

    #[test]
    fn bounds_simple() {
        assert_eq!(
            surface(&[2f64.sqrt()], &[1.0], 1.0).lambda_bounds().unwrap().0,
            2f64.sqrt().powi(2) - 1.0
        );
        let s = surface(&[1.0, -1.0], &[2.0, 5.0], 1.0);
        assert_eq!(s.lambda_bounds().unwrap(), (0.0, 0.0));
        assert!(surface(&[1.0], &[0.0], 1.0).lambda_bounds().is_err());
    }

    #[test]
    fn golden_flat_returns_lower_bound() {
        let r = golden_section(|_| Ok(3.0), 1.0, 50.0, 1e-3).unwrap();
        assert_eq!(r.x, 1.0);
    }

    #[test]
    fn golden_converges_quickly() {
        let r = golden_section(|x| Ok((x - 2.345).powi(2)), 0.0, 5.0, 1e-3).unwrap();
        assert!(r.width <= 1e-3);
        assert!(r.evaluations <= 40);
        assert!((r.x - 2.345).abs() < 1e-3);
    }

    #[test]
    fn split_validation() {
        assert!(HoldoutSplit::new(vec![0, 1], vec![]).is_err());
        assert!(HoldoutSplit::new(vec![0, 1], vec![1, 2]).is_err());
        let s = HoldoutSplit::leading(10, 0.5).unwrap();
        assert_eq!(s.train, vec![0, 1, 2, 3, 4]);
        let opts = HoldoutOptions::default();
        let bad = HoldoutSplit {
            train: vec![0],
            validation: vec![],
        };
        assert!(tune_holdout(&bad, &opts, |_, _, _| Ok(0.0)).is_err());
    }

    #[test]
    fn sigma2_exact_fit_and_errors() {
        let u = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, -1.0]);
        let y = &u * DVector::from_vec(vec![0.3, -0.7]);
        assert!(estimate_sigma2(&u, &y).unwrap() < 1e-28);
        assert!(estimate_sigma2(&DMatrix::identity(3, 3), &DVector::zeros(3)).is_err());
    }
}
