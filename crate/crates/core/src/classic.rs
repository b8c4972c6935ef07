//! The classical iterative boosting scheme with a regularized least-squares
//! weak learner: refit the weak learner on the current residuals and add its
//! prediction, a fixed number of rounds.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::SpectralModel;

/// Per-round record of a boosting run.
#[derive(Debug, Clone)]
pub struct BoostTrace {
    /// `ŷ(1), …, ŷ(rounds)`.
    pub predictions: Vec<DVector<f64>>,
    /// Weak-learner parameter estimate of each round.
    pub increments: Vec<DVector<f64>>,
    /// Cumulative parameter estimate `θ̂(rounds)`.
    pub theta: DVector<f64>,
}

impl BoostTrace {
    pub fn last(&self) -> &DVector<f64> {
        self.predictions.last().expect("at least one round")
    }
}

fn check_rounds(rounds: usize) -> Result<()> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("boosting needs at least one round".into()));
    }
    Ok(())
}

/// Runs `rounds` boosting iterations in the eigenbasis of `U K Uᵀ`.
pub fn run_boost(model: &SpectralModel, lambda: f64, y: &DVector<f64>, rounds: usize) -> Result<BoostTrace> {
    check_rounds(rounds)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("invalid kernel scale {lambda}")));
    }
    let z = model.rotate(y)?;
    let gain = model.spectrum.map(|d| lambda * d / (lambda * d + model.sigma2));
    let mut residual = z;
    let mut fit = DVector::zeros(model.n());
    let mut predictions = Vec::with_capacity(rounds);
    let mut increments = Vec::with_capacity(rounds);
    let mut theta = DVector::zeros(model.u.ncols());
    for _ in 0..rounds {
        let step = residual.component_mul(&gain);
        residual -= &step;
        fit += &step;
        let inc = model.back_map_theta(&(&model.v * step))?;
        theta += &inc;
        increments.push(inc);
        predictions.push(&model.v * &fit);
    }
    Ok(BoostTrace {
        predictions,
        increments,
        theta,
    })
}

/// The same scheme written as the plain recursion
/// `θ̂_k = λ K Uᵀ (λ U K Uᵀ + σ² I)⁻¹ (y − ŷ(k))`, `ŷ(k+1) = ŷ(k) + U θ̂_k`,
/// using one dense LU factorization and no eigendecomposition.
pub fn run_boost_direct(
    u: &DMatrix<f64>,
    k: &DMatrix<f64>,
    sigma2: f64,
    lambda: f64,
    y: &DVector<f64>,
    rounds: usize,
) -> Result<BoostTrace> {
    check_rounds(rounds)?;
    let n = u.nrows();
    if y.len() != n || k.nrows() != u.ncols() || !k.is_square() {
        return Err(Error::Dimension("inconsistent U, K, y".into()));
    }
    let ku_t = k * u.transpose() * lambda;
    let mut system = u * &ku_t;
    for i in 0..n {
        system[(i, i)] += sigma2;
    }
    let lu = system.lu();
    let mut fit = DVector::zeros(n);
    let mut predictions = Vec::with_capacity(rounds);
    let mut increments = Vec::with_capacity(rounds);
    let mut theta = DVector::zeros(u.ncols());
    for _ in 0..rounds {
        let w = lu
            .solve(&(y - &fit))
            .ok_or_else(|| Error::Numeric("singular weak-learner system".into()))?;
        let inc = &ku_t * w;
        fit += u * &inc;
        theta += &inc;
        increments.push(inc);
        predictions.push(fit.clone());
    }
    Ok(BoostTrace {
        predictions,
        increments,
        theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_geometric_series() {
        // S = 1/2: ŷ(ν) = 1 − 2^{−ν}
        let model = SpectralModel::factorize(&DMatrix::from_element(1, 1, 1.0), &DMatrix::identity(1, 1), 1.0).unwrap();
        let y = DVector::from_vec(vec![1.0]);
        let t = run_boost(&model, 1.0, &y, 3).unwrap();
        assert!((t.predictions[0][0] - 0.5).abs() < 1e-15);
        assert!((t.predictions[1][0] - 0.75).abs() < 1e-15);
        assert!((t.predictions[2][0] - 0.875).abs() < 1e-15);
        assert!(run_boost(&model, 1.0, &y, 0).is_err());
    }

    #[test]
    fn increments_follow_residuals() {
        let u = DMatrix::from_row_slice(3, 2, &[1.0, 0.2, 0.3, 1.0, -0.5, 0.4]);
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
        let model = SpectralModel::factorize(&u, &k, 0.4).unwrap();
        let y = DVector::from_vec(vec![1.0, -1.0, 0.5]);
        let t = run_boost(&model, 0.7, &y, 4).unwrap();
        for r in 1..4 {
            let resid = &y - &t.predictions[r - 1];
            let weak = model.weak_learner_predict(0.7, &resid).unwrap();
            assert!((&t.predictions[r] - &t.predictions[r - 1] - weak).norm() < 1e-13);
        }
        let direct = run_boost_direct(&u, &k, 0.4, 0.7, &y, 4).unwrap();
        assert!((&direct.theta - &t.theta).norm() < 1e-12);
        assert!((&u * &t.theta - t.last()).norm() < 1e-12);
    }
}
