//! Kernel matrices and the boosting kernel in spectral form.
//!
//! Everything downstream is derived from one symmetric eigendecomposition
//! `U K Uᵀ = V diag(d) Vᵀ`. With `snr_i = λ d_i / σ²`, the boosting kernel after
//! `ν` rounds of the regularized least-squares weak learner has eigenvalues
//! `σ² ((1 + snr_i)^ν − 1)` and the boosted smoother shrinks `z = Vᵀ y` by
//! `1 − (1 + snr_i)^{−ν}`. Powers are always evaluated as `exp(ν·log1p(snr))`
//! so that large `ν` never overflows the smoother.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{max_asymmetry, SymEig, RANK_TOL};

/// Default upper bound for the boosting parameter.
pub const DEFAULT_NU_MAX: f64 = 500.0;

/// Description of a kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// `m × m` identity (ridge regression weak learner).
    Identity(usize),
    /// Stable spline kernel with entries `α^{max(i,j)}`, indices starting at 1.
    StableSpline { dim: usize, alpha: f64 },
    /// Gaussian Gram matrix `exp(−β ‖x_i − x_j‖²)` over the given inputs.
    GaussianGram { inputs: Vec<Vec<f64>>, beta: f64 },
    /// User supplied symmetric PSD matrix.
    Explicit(DMatrix<f64>),
}

impl KernelSpec {
    pub fn dim(&self) -> usize {
        match self {
            KernelSpec::Identity(m) => *m,
            KernelSpec::StableSpline { dim, .. } => *dim,
            KernelSpec::GaussianGram { inputs, .. } => inputs.len(),
            KernelSpec::Explicit(m) => m.nrows(),
        }
    }
}

/// Gaussian kernel `exp(−β ‖x − a‖²)`.
pub fn gaussian(x: &[f64], a: &[f64], beta: f64) -> f64 {
    let d2: f64 = x.iter().zip(a).map(|(p, q)| (p - q) * (p - q)).sum();
    (-beta * d2).exp()
}

/// Materializes the kernel matrix described by `spec`.
pub fn build_kernel(spec: &KernelSpec) -> Result<DMatrix<f64>> {
    match spec {
        KernelSpec::Identity(m) => Ok(DMatrix::identity(*m, *m)),
        KernelSpec::StableSpline { dim, alpha } => {
            if !(0.0..1.0).contains(alpha) {
                return Err(Error::InvalidParameter(format!(
                    "stable spline decay rate must lie in [0, 1), got {alpha}"
                )));
            }
            Ok(DMatrix::from_fn(*dim, *dim, |i, j| alpha.powi((i.max(j) + 1) as i32)))
        }
        KernelSpec::GaussianGram { inputs, beta } => {
            if !(*beta > 0.0 && beta.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "gaussian bandwidth must be positive, got {beta}"
                )));
            }
            check_inputs(inputs)?;
            let n = inputs.len();
            let mut k = DMatrix::zeros(n, n);
            for i in 0..n {
                k[(i, i)] = 1.0;
                for j in (i + 1)..n {
                    let v = gaussian(&inputs[i], &inputs[j], *beta);
                    k[(i, j)] = v;
                    k[(j, i)] = v;
                }
            }
            Ok(k)
        }
        KernelSpec::Explicit(m) => {
            validate_psd(m)?;
            Ok(m.clone())
        }
    }
}

pub(crate) fn check_inputs(inputs: &[Vec<f64>]) -> Result<()> {
    if let Some(first) = inputs.first() {
        let dim = first.len();
        if let Some((i, bad)) = inputs.iter().enumerate().find(|(_, x)| x.len() != dim) {
            return Err(Error::Dimension(format!(
                "input {i} has dimension {}, expected {dim}",
                bad.len()
            )));
        }
    }
    Ok(())
}

/// Checks symmetry (relative to the largest entry) and positive
/// semidefiniteness (relative to the largest eigenvalue) within `1e-10`.
pub fn validate_psd(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "kernel matrix must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax();
    let asym = max_asymmetry(m);
    if asym > 1e-10 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let eig = SymEig::new(m)?;
    let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-10 * eig.max_value();
    if min < -tol {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
            tolerance: tol,
        });
    }
    Ok(())
}

/// Spectral factorization `U K Uᵀ = V diag(spectrum) Vᵀ` plus the noise
/// variance: the reusable core of every boosting quantity.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    /// Orthonormal eigenvectors of `U K Uᵀ` (columns, `n × n`).
    pub v: DMatrix<f64>,
    /// Eigenvalues of `U K Uᵀ`, descending, clamped at zero.
    pub spectrum: DVector<f64>,
    pub sigma2: f64,
    /// Regression matrix (`n × m`).
    pub u: DMatrix<f64>,
    /// Kernel matrix (`m × m`).
    pub k: DMatrix<f64>,
    rank: usize,
}

impl SpectralModel {
    /// Factorizes `U K Uᵀ`.
    ///
    /// Eigenvalues at or below `1e-12 · max` are set to exactly zero; a
    /// negative eigenvalue beyond `1e-10 · max` means `K` was not PSD.
    pub fn factorize(u: &DMatrix<f64>, k: &DMatrix<f64>, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be positive, got {sigma2}"
            )));
        }
        if !k.is_square() || k.nrows() != u.ncols() {
            return Err(Error::Dimension(format!(
                "U is {}x{} but K is {}x{}",
                u.nrows(),
                u.ncols(),
                k.nrows(),
                k.ncols()
            )));
        }
        if u.nrows() == 0 {
            return Err(Error::Dimension("U has no rows".into()));
        }
        let g = u * k * u.transpose();
        let eig = SymEig::new(&g)?;
        let max = eig.max_value();
        let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-10 * max.max(f64::MIN_POSITIVE) {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
                tolerance: 1e-10 * max,
            });
        }
        let cut = RANK_TOL * max;
        let spectrum = eig.values.map(|d| if d > cut { d } else { 0.0 });
        let rank = spectrum.iter().filter(|&&d| d > 0.0).count();
        Ok(Self {
            v: eig.vectors,
            spectrum,
            sigma2,
            u: u.clone(),
            k: k.clone(),
            rank,
        })
    }

    /// Convenience: builds `K` from a spec, then factorizes.
    pub fn from_spec(u: &DMatrix<f64>, kernel: &KernelSpec, sigma2: f64) -> Result<Self> {
        let k = build_kernel(kernel)?;
        Self::factorize(u, &k, sigma2)
    }

    /// Data dimension `n`.
    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    /// Number of strictly positive (retained) eigenvalues.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Rotated data `z = Vᵀ y`.
    pub fn rotate(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(y)?;
        Ok(self.v.tr_mul(y))
    }

    pub(crate) fn check_len(&self, y: &DVector<f64>) -> Result<()> {
        if y.len() != self.n() {
            return Err(Error::Dimension(format!(
                "data has length {}, model expects {}",
                y.len(),
                self.n()
            )));
        }
        Ok(())
    }

    /// `V diag(spectrum) Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.v * DMatrix::from_diagonal(&self.spectrum) * self.v.transpose()
    }

    /// Weak learner prediction `P_λ (P_λ + σ² I)⁻¹ y`, `P_λ = λ U K Uᵀ`.
    pub fn weak_learner_predict(&self, lambda: f64, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_lambda(lambda)?;
        let z = self.rotate(y)?;
        let zhat = DVector::from_iterator(
            z.len(),
            z.iter().zip(self.spectrum.iter()).map(|(zi, d)| {
                let p = lambda * d;
                zi * p / (p + self.sigma2)
            }),
        );
        Ok(&self.v * zhat)
    }

    /// Recovers parameters from fitted outputs.
    ///
    /// Returns the minimum `θᵀK⁻¹θ` solution of `U θ = ŷ` restricted to the
    /// retained spectral subspace: `θ = K Uᵀ V_r diag(1/d_r) V_rᵀ ŷ`. For `U`
    /// of full column rank and `K` positive definite this is `U† ŷ`.
    pub fn back_map_theta(&self, yhat: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(yhat)?;
        let r = self.rank;
        let vr = self.v.columns(0, r);
        let mut w = vr.tr_mul(yhat);
        for (wi, d) in w.iter_mut().zip(self.spectrum.iter()) {
            *wi /= d;
        }
        let w = vr * w;
        Ok(&self.k * self.u.tr_mul(&w))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "kernel scale must be a finite nonnegative number, got {lambda}"
        )));
    }
    Ok(())
}

/// Eigenvalues of the boosting kernel; entries that overflow are saturated
/// at `f64::MAX` and flagged.
#[derive(Debug, Clone)]
pub struct BoostEigs {
    pub values: DVector<f64>,
    pub saturated: bool,
}

/// The scale `λ` and boosting parameter `ν` bound to a spectral model.
#[derive(Debug, Clone, Copy)]
pub struct BoostingKernel<'a> {
    pub model: &'a SpectralModel,
    pub lambda: f64,
    pub nu: f64,
}

impl<'a> BoostingKernel<'a> {
    pub fn new(model: &'a SpectralModel, lambda: f64, nu: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if !(nu >= 1.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "boosting parameter must be a finite number >= 1, got {nu}"
            )));
        }
        Ok(Self { model, lambda, nu })
    }

    /// Per-direction `log1p(λ d_i / σ²)`.
    fn log_growth(&self) -> impl Iterator<Item = f64> + '_ {
        let s2 = self.model.sigma2;
        self.model.spectrum.iter().map(move |d| (self.lambda * d / s2).ln_1p())
    }

    /// Shrinkage factors `1 − (1 + snr_i)^{−ν}` applied to `z = Vᵀ y`.
    pub fn shrinkage(&self) -> DVector<f64> {
        let n = self.model.n();
        DVector::from_iterator(n, self.log_growth().map(|g| -(-self.nu * g).exp_m1()))
    }

    /// Boosted prediction `ŷ(ν) = S_{λ,ν} y`.
    pub fn apply(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        let z = self.model.rotate(y)?;
        let zhat = z.component_mul(&self.shrinkage());
        Ok(&self.model.v * zhat)
    }

    /// Dense smoother matrix `S_{λ,ν}`.
    pub fn smoother_matrix(&self) -> DMatrix<f64> {
        let v = &self.model.v;
        v * DMatrix::from_diagonal(&self.shrinkage()) * v.transpose()
    }

    /// Eigenvalues `σ² ((1 + snr_i)^ν − 1)` of `P_{λ,ν}` in the `V` basis.
    pub fn eigs(&self) -> BoostEigs {
        let s2 = self.model.sigma2;
        let limit = f64::MAX.ln() - s2.ln();
        let mut saturated = false;
        let values = DVector::from_iterator(
            self.model.n(),
            self.log_growth().map(|g| {
                let e = self.nu * g;
                if e >= limit {
                    saturated = true;
                    f64::MAX
                } else {
                    s2 * e.exp_m1()
                }
            }),
        );
        BoostEigs { values, saturated }
    }

    /// Dense boosting kernel `P_{λ,ν}`.
    pub fn matrix_p(&self) -> DMatrix<f64> {
        let v = &self.model.v;
        v * DMatrix::from_diagonal(&self.eigs().values) * v.transpose()
    }

    /// Full-column-rank factor `A` with `σ² A Aᵀ = P_{λ,ν}`, one column per
    /// retained direction.
    pub fn factor_a(&self) -> Result<DMatrix<f64>> {
        let r = self.model.rank();
        if r == 0 || self.lambda == 0.0 {
            return Err(Error::Degenerate(
                "boosting kernel is identically zero (no retained direction or λ = 0)".into(),
            ));
        }
        let scales = self.factor_scales();
        let mut a = self.model.v.columns(0, r).into_owned();
        for (j, s) in scales.iter().enumerate() {
            a.column_mut(j).scale_mut(*s);
        }
        Ok(a)
    }

    /// Column scales of [`factor_a`](Self::factor_a):
    /// `sqrt((1 + snr_i)^ν − 1)` over the retained directions.
    pub fn factor_scales(&self) -> DVector<f64> {
        let r = self.model.rank();
        let vals: Vec<f64> = self
            .log_growth()
            .take(r)
            .map(|g| (self.nu * g).exp_m1().min(f64::MAX).sqrt())
            .collect();
        DVector::from_vec(vals)
    }

    /// `B_{λ,ν} = U P_{λ,ν} Uᵀ`. Only defined for square `U`; with `U = I`
    /// it is `P_{λ,ν}` itself.
    pub fn matrix_b(&self) -> Result<DMatrix<f64>> {
        let u = &self.model.u;
        if !u.is_square() {
            return Err(Error::Dimension(format!(
                "U P Uᵀ requires square U (P is {n}x{n}), got {}x{}",
                u.nrows(),
                u.ncols(),
                n = self.model.n()
            )));
        }
        let p = self.matrix_p();
        Ok(u * p * u.transpose())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rel_frobenius;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    fn scalar_model(d: f64, s2: f64) -> SpectralModel {
        let u = DMatrix::from_element(1, 1, d.sqrt());
        SpectralModel::factorize(&u, &DMatrix::identity(1, 1), s2).unwrap()
    }

    #[test]
    fn stable_spline_two_by_two() {
        let k = build_kernel(&KernelSpec::StableSpline { dim: 2, alpha: 0.5 }).unwrap();
        assert_eq!(k, DMatrix::from_row_slice(2, 2, &[0.5, 0.25, 0.25, 0.25]));
    }

    #[test]
    fn identity_and_gaussian() {
        assert_eq!(build_kernel(&KernelSpec::Identity(3)).unwrap(), DMatrix::identity(3, 3));
        let k = build_kernel(&KernelSpec::GaussianGram {
            inputs: vec![vec![0.3, 0.1], vec![0.3, 0.1]],
            beta: 10.0,
        })
        .unwrap();
        assert!(k.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn bad_parameters_rejected() {
        assert!(build_kernel(&KernelSpec::StableSpline { dim: 2, alpha: 1.0 }).is_err());
        assert!(build_kernel(&KernelSpec::GaussianGram {
            inputs: vec![],
            beta: 0.0
        })
        .is_err());
        let ragged = KernelSpec::GaussianGram {
            inputs: vec![vec![0.0], vec![0.0, 1.0]],
            beta: 1.0,
        };
        assert!(matches!(build_kernel(&ragged), Err(Error::Dimension(_))));
    }

    #[test]
    fn explicit_non_psd_names_eigenvalue() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match build_kernel(&KernelSpec::Explicit(m)) {
            Err(Error::NotPsd { min_eigenvalue, .. }) => assert!((min_eigenvalue + 1.0).abs() < 1e-12),
            other => panic!("expected NotPsd, got {other:?}"),
        }
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(
            build_kernel(&KernelSpec::Explicit(asym)),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn factorize_diagonal_cases() {
        let m = SpectralModel::factorize(&DMatrix::identity(2, 2), &DMatrix::identity(2, 2), 1.0).unwrap();
        assert_eq!(m.spectrum.as_slice(), &[1.0, 1.0]);
        let u = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let m = SpectralModel::factorize(&u, &DMatrix::identity(2, 2), 1.0).unwrap();
        assert!((m.spectrum[0] - 4.0).abs() < 1e-14 && (m.spectrum[1] - 1.0).abs() < 1e-14);
        assert!(rel_frobenius(&m.reconstruct(), &(&u * u.transpose())) < 1e-14);
    }

    #[test]
    fn factorize_errors() {
        let u = DMatrix::identity(2, 2);
        assert!(matches!(
            SpectralModel::factorize(&u, &DMatrix::identity(3, 3), 1.0),
            Err(Error::Dimension(_))
        ));
        assert!(SpectralModel::factorize(&u, &DMatrix::identity(2, 2), 0.0).is_err());
    }

    #[test]
    fn weak_learner_scalar_and_zero() {
        let m = scalar_model(1.0, 1.0);
        let y = DVector::from_vec(vec![1.0]);
        assert!(close(m.weak_learner_predict(1.0, &y).unwrap()[0], 0.5, 1e-15));
        assert_eq!(m.weak_learner_predict(0.0, &y).unwrap()[0], 0.0);
    }

    #[test]
    fn boosted_scalar_cases() {
        let m = scalar_model(1.0, 1.0);
        let y = DVector::from_vec(vec![1.0]);
        let bk = BoostingKernel::new(&m, 1.0, 2.0).unwrap();
        assert!(close(bk.apply(&y).unwrap()[0], 0.75, 1e-15));
        assert!(close(bk.eigs().values[0], 3.0, 1e-14));
        let bk1 = BoostingKernel::new(&m, 1.0, 1.0).unwrap();
        assert!(close(bk1.eigs().values[0], 1.0, 1e-14));
    }

    #[test]
    fn null_directions_never_move() {
        let u = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let m = SpectralModel::factorize(&u, &DMatrix::identity(1, 1), 0.5).unwrap();
        assert_eq!(m.rank(), 1);
        for nu in [1.0, 3.5, 400.0] {
            let bk = BoostingKernel::new(&m, 2.0, nu).unwrap();
            assert_eq!(bk.shrinkage()[1], 0.0);
            assert_eq!(bk.eigs().values[1], 0.0);
        }
    }

    #[test]
    fn saturation_flagged() {
        let m = scalar_model(1e6, 1e-2);
        let bk = BoostingKernel::new(&m, 1.0, 500.0).unwrap();
        let e = bk.eigs();
        assert!(e.saturated);
        assert_eq!(e.values[0], f64::MAX);
        assert!(bk.shrinkage()[0] == 1.0);
    }

    #[test]
    fn rejects_bad_nu_and_lambda() {
        let m = scalar_model(1.0, 1.0);
        assert!(BoostingKernel::new(&m, 1.0, 0.5).is_err());
        assert!(BoostingKernel::new(&m, -1.0, 1.0).is_err());
        assert!(BoostingKernel::new(&m, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn factor_a_rank_one_and_degenerate() {
        let u = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 2.0]);
        let m = SpectralModel::factorize(&u, &DMatrix::identity(1, 1), 1.0).unwrap();
        let bk = BoostingKernel::new(&m, 0.3, 2.5).unwrap();
        let a = bk.factor_a().unwrap();
        assert_eq!(a.ncols(), 1);
        let expected = (2.5 * (0.3 * 9.0f64).ln_1p()).exp_m1();
        assert!(close(a.column(0).norm_squared(), expected, 1e-12));
        let z = BoostingKernel::new(&m, 0.0, 2.0).unwrap();
        assert!(matches!(z.factor_a(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn matrix_b_cases() {
        let m = SpectralModel::factorize(
            &DMatrix::identity(2, 2),
            &DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            0.7,
        )
        .unwrap();
        let bk = BoostingKernel::new(&m, 0.4, 3.0).unwrap();
        assert!(rel_frobenius(&bk.matrix_b().unwrap(), &bk.matrix_p()) < 1e-14);
        let zero = BoostingKernel::new(&m, 0.0, 3.0).unwrap();
        assert_eq!(zero.matrix_b().unwrap().amax(), 0.0);
        let rect = SpectralModel::factorize(&DMatrix::zeros(3, 2), &DMatrix::identity(2, 2), 1.0);
        let rect = rect.unwrap();
        let bk = BoostingKernel::new(&rect, 1.0, 1.0).unwrap();
        assert!(matches!(bk.matrix_b(), Err(Error::Dimension(_))));
    }
}
