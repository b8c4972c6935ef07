//! Dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative spectral cutoff: an eigenvalue counts as nonzero when it exceeds
/// `RANK_TOL * max_eigenvalue`.
pub const RANK_TOL: f64 = 1e-12;

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// descending order and eigenvectors permuted to match.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEig {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "expected square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        if n == 0 {
            return Ok(Self {
                values: DVector::zeros(0),
                vectors: DMatrix::zeros(0, 0),
            });
        }
        let sym = symmetrize(m);
        let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
            .ok_or_else(|| Error::Numeric("symmetric eigendecomposition did not converge".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Ok(Self { values, vectors })
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Number of eigenvalues above the relative rank tolerance.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let cut = rel_tol * self.max_value();
        self.values.iter().filter(|&&v| v > cut && v > 0.0).count()
    }
}

/// `(m + mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest absolute asymmetry `max |m_ij - m_ji|`.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Squared spectral norm `‖a‖₂²` by power iteration on `aᵀa`.
///
/// Stops once successive Rayleigh quotients agree to `rel_tol`.
pub fn spectral_norm_sq(a: &DMatrix<f64>, rel_tol: f64, max_iter: usize) -> f64 {
    let p = a.ncols();
    if p == 0 || a.nrows() == 0 {
        return 0.0;
    }
    // deterministic, non-degenerate start
    let mut v = DVector::from_fn(p, |i, _| 1.0 + 0.1 * ((i * 7919) % 13) as f64);
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..max_iter {
        let av = a * &v;
        let w = a.tr_mul(&av);
        let next = av.norm_squared();
        let wn = w.norm();
        if wn == 0.0 {
            return 0.0;
        }
        v = w / wn;
        if (next - est).abs() <= rel_tol * next {
            return next.max(est);
        }
        est = next;
    }
    est
}

/// Relative Frobenius distance `‖a - b‖_F / max(‖b‖_F, tiny)`.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Relative ℓ2 distance between vectors.
pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eig_sorted_descending() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 2.0]);
        let e = SymEig::new(&m).unwrap();
        assert_eq!(e.values.as_slice(), &[3.0, 2.0, 1.0]);
        let recon = &e.vectors * DMatrix::from_diagonal(&e.values) * e.vectors.transpose();
        assert!(rel_frobenius(&recon, &m) < 1e-14);
    }

    #[test]
    fn power_iteration_matches_eig() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.5, -1.0, 3.0, 0.25]);
        let exact = SymEig::new(&a.tr_mul(&a)).unwrap().max_value();
        let est = spectral_norm_sq(&a, 1e-12, 10_000);
        assert!((est - exact).abs() / exact < 1e-9);
    }
}
