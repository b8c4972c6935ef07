//! Boosting as a kernel method.
//!
//! `ν` rounds of boosting with a regularized least-squares weak learner are
//! one kernel-based estimate with the *boosting kernel*
//! `P_{λ,ν} = σ² (I − S_λ)^{−ν} − σ² I`. This crate builds that kernel in
//! spectral form, treats `ν` as a continuous hyperparameter tuned by SURE or
//! hold-out validation, combines the kernel with piecewise linear-quadratic
//! losses, and carries the construction over to function estimation in a
//! reproducing kernel Hilbert space (including hinge-loss classification).
//!
//! | module | contents |
//! |---|---|
//! | [`kernels`] | kernel matrices, [`SpectralModel`], [`BoostingKernel`] |
//! | [`losses`] | PLQ loss catalog with prox and conjugates |
//! | [`solver`] | general-loss boosting estimators |
//! | [`tuning`] | SURE surface, λ thresholds, golden-section hold-out tuning |
//! | [`rkhs`] | RKHS weak learner, classic and kernel boosting, SVC |
//! | [`classic`] | the iterative scheme used as reference |
//! | [`bench`] | data generators, fit metrics, experiment runner, CSV input |

pub mod bench;
pub mod classic;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod losses;
pub mod rkhs;
pub mod solver;
pub mod tuning;

pub use error::{Error, Result};
pub use kernels::{build_kernel, BoostingKernel, KernelSpec, SpectralModel};
pub use losses::LossSpec;
pub use solver::{solve, CompositeProblem, Method, Regularizer, SolveOptions, SolveResult};
