//! Percentage fit scores.

use nalgebra::DVector;

use crate::error::{Error, Result};

fn same_len(a: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("lengths differ: {} vs {}", a.len(), b.len())));
    }
    Ok(())
}

/// `100 (1 − ‖θ − θ̂‖ / ‖θ‖)`.
pub fn fit_theta(theta: &DVector<f64>, estimate: &DVector<f64>) -> Result<f64> {
    same_len(theta, estimate)?;
    let scale = theta.norm();
    if scale == 0.0 {
        return Err(Error::Degenerate("true parameter is zero".into()));
    }
    Ok(100.0 * (1.0 - (theta - estimate).norm() / scale))
}

/// `100 (1 − ‖y − ŷ‖ / ‖y − mean(y)‖)`.
pub fn fit_regression(y: &DVector<f64>, prediction: &DVector<f64>) -> Result<f64> {
    same_len(y, prediction)?;
    let mean = y.mean();
    let spread = y.map(|v| v - mean).norm();
    if spread == 0.0 {
        return Err(Error::Degenerate("test outputs are constant".into()));
    }
    Ok(100.0 * (1.0 - (y - prediction).norm() / spread))
}

/// Percentage of labels matched by `sign(score)`; a zero score counts as `+1`.
pub fn fit_classification(labels: &DVector<f64>, scores: &DVector<f64>) -> Result<f64> {
    same_len(labels, scores)?;
    if labels.is_empty() {
        return Err(Error::Degenerate("no labels".into()));
    }
    let hits = labels
        .iter()
        .zip(scores.iter())
        .filter(|(l, s)| (**s >= 0.0) == (**l > 0.0))
        .count();
    Ok(100.0 * hits as f64 / labels.len() as f64)
}
