mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

use common::*;
use kernel_boost::kernels::{BoostingKernel, SpectralModel};
use kernel_boost::losses::LossSpec;
use kernel_boost::solver::{
    estimate_output_data_space, estimate_theta, solve, CompositeProblem, Regularizer, SolveOptions,
};
use kernel_boost::tuning::SureSurface;

fn model(seed: u64, n: usize, m: usize, sigma2: f64) -> (SpectralModel, DVector<f64>) {
    let mut r = rng(seed);
    let u = gaussian_matrix(&mut r, n, m);
    let k = random_psd(&mut r, m);
    let y = gaussian_vector(&mut r, n);
    (SpectralModel::factorize(&u, &k, sigma2).unwrap(), y)
}

fn any_loss() -> impl Strategy<Value = LossSpec> {
    prop_oneof![
        Just(LossSpec::Quadratic),
        Just(LossSpec::L1),
        (0.05f64..5.0).prop_map(|kappa| LossSpec::Huber { kappa }),
        (0.05f64..0.95, 0.05f64..5.0).prop_map(|(tau, kappa)| LossSpec::QuantileHuber { tau, kappa }),
        (0.0f64..2.0).prop_map(|eps| LossSpec::Vapnik { eps }),
        Just(LossSpec::Hinge),
        (0.0f64..3.0).prop_map(|mu| LossSpec::ElasticNet { mu }),
    ]
}

fn regression_loss() -> impl Strategy<Value = LossSpec> {
    any_loss().prop_filter("regression loss", |l| !l.is_hinge())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shrinkage_in_unit_interval_and_monotone(
        seed in any::<u64>(),
        n in 2usize..20,
        m in 1usize..10,
        lambda in 1e-3f64..1e3,
        nu in 1.0f64..50.0,
        step in 0.01f64..10.0,
    ) {
        let (model, _) = model(seed, n, m, 1.0);
        let s = BoostingKernel::new(&model, lambda, nu).unwrap().shrinkage();
        let more_nu = BoostingKernel::new(&model, lambda, nu + step).unwrap().shrinkage();
        let more_lambda = BoostingKernel::new(&model, lambda * (1.0 + step), nu).unwrap().shrinkage();
        for i in 0..n {
            prop_assert!((0.0..1.0).contains(&s[i]) || (s[i] - 1.0).abs() < 1e-12);
            prop_assert!(more_nu[i] >= s[i] - 1e-15);
            prop_assert!(more_lambda[i] >= s[i] - 1e-15);
        }
    }

    #[test]
    fn kernel_eigenvalues_are_a_geometric_series(
        seed in any::<u64>(),
        lambda in 1e-2f64..1e2,
        sigma2 in 1e-1f64..1e1,
        rounds in 1usize..12,
    ) {
        let (model, _) = model(seed, 8, 5, sigma2);
        let bk = BoostingKernel::new(&model, lambda, rounds as f64).unwrap();
        let eigs = bk.eigs().values;
        for (i, d) in model.spectrum.iter().enumerate() {
            // λ d Σ_{k<ν} (1 + λd/σ²)^k
            let q = 1.0 + lambda * d / sigma2;
            let series: f64 = (0..rounds).map(|k| lambda * d * q.powi(k as i32)).sum();
            prop_assert!((eigs[i] - series).abs() <= 1e-9 * series.abs().max(1e-12));
        }
    }

    #[test]
    fn one_round_kernel_is_the_scaled_weak_kernel(
        seed in any::<u64>(),
        n in 2usize..15,
        m in 1usize..10,
        lambda in 1e-2f64..1e2,
        sigma2 in 1e-1f64..1e1,
    ) {
        let mut r = rng(seed);
        let u = gaussian_matrix(&mut r, n, m);
        let k = random_psd(&mut r, m);
        let model = SpectralModel::factorize(&u, &k, sigma2).unwrap();
        let p = BoostingKernel::new(&model, lambda, 1.0).unwrap().matrix_p();
        let direct = &u * &k * u.transpose() * lambda;
        prop_assert!((&p - &direct).norm() <= 1e-9 * (1.0 + direct.norm()));
    }

    #[test]
    fn smoother_is_kernel_over_kernel_plus_noise(
        seed in any::<u64>(),
        lambda in 1e-2f64..1e2,
        sigma2 in 1e-1f64..1e1,
        nu in 1.0f64..6.0,
    ) {
        let (model, _) = model(seed, 10, 6, sigma2);
        let bk = BoostingKernel::new(&model, lambda, nu).unwrap();
        let p = bk.matrix_p();
        // S (P + σ² I) = P without forming an inverse
        let shifted = &p + DMatrix::identity(10, 10) * sigma2;
        let lhs = bk.smoother_matrix() * shifted;
        prop_assert!((lhs - &p).norm() <= 1e-10 * (sigma2 + p.norm()));
    }

    #[test]
    fn prox_satisfies_optimality(loss in any_loss(), t in 1e-3f64..10.0, w in -10.0f64..10.0) {
        let x = loss.prox(t, w);
        let g = (w - x) / t;
        prop_assert!(loss.subgradient(x).distance(g) <= 1e-9 * (1.0 + g.abs()), "{loss}: prox {x}, g {g}");
    }

    #[test]
    fn prox_beats_nearby_points(loss in any_loss(), t in 1e-3f64..10.0, w in -10.0f64..10.0, d in -1.0f64..1.0) {
        let x = loss.prox(t, w);
        let f = |u: f64| loss.scalar(u) + (u - w).powi(2) / (2.0 * t);
        prop_assert!(f(x) <= f(x + d) + 1e-12 * (1.0 + f(x).abs()));
    }

    #[test]
    fn losses_are_convex(loss in any_loss(), a in -10.0f64..10.0, b in -10.0f64..10.0, th in 0.0f64..1.0) {
        let mid = loss.scalar(th * a + (1.0 - th) * b);
        let chord = th * loss.scalar(a) + (1.0 - th) * loss.scalar(b);
        prop_assert!(mid <= chord + 1e-12 * (1.0 + chord.abs()));
    }

    #[test]
    fn fenchel_young_inequality(loss in any_loss(), r in -10.0f64..10.0, u in -3.0f64..3.0) {
        let c = loss.conjugate(u);
        prop_assert!(loss.scalar(r) + c >= r * u - 1e-12);
    }

    #[test]
    fn median_quantile_huber_is_symmetric(kappa in 0.01f64..10.0, r in -20.0f64..20.0) {
        let l = LossSpec::QuantileHuber { tau: 0.5, kappa };
        prop_assert!((l.scalar(r) - l.scalar(-r)).abs() <= 1e-12 * (1.0 + l.scalar(r)));
    }

    #[test]
    fn sure_scales_with_the_data(
        seed in any::<u64>(),
        c in 0.1f64..10.0,
        lambda in 1e-2f64..1e2,
        nu in 1.0f64..30.0,
    ) {
        let mut r = rng(seed);
        let n = r.random_range(2..20);
        let z = gaussian_vector(&mut r, n);
        let spectrum = DVector::from_fn(n, |_, _| log_uniform(&mut r, 1e-2, 1e2));
        let sigma2 = log_uniform(&mut r, 1e-2, 1e1);
        let base = SureSurface::from_parts(z.clone(), spectrum.clone(), sigma2).unwrap();
        let scaled = SureSurface::from_parts(z * c, spectrum, sigma2 * c * c).unwrap();
        let j = base.objective(lambda, nu);
        let js = scaled.objective(lambda * c * c, nu);
        prop_assert!((js - c * c * j).abs() <= 1e-9 * (c * c * j).abs().max(1e-12));
    }

    #[test]
    fn quadratic_boosting_is_linear_in_the_data(
        seed in any::<u64>(),
        c in -5.0f64..5.0,
        lambda in 1e-2f64..1e2,
        nu in 1.0f64..20.0,
    ) {
        let (model, y) = model(seed, 12, 6, 1.0);
        let y2 = gaussian_vector(&mut rng(seed ^ 0x5eed), 12);
        let bk = BoostingKernel::new(&model, lambda, nu).unwrap();
        let lhs = bk.apply(&(&y * c + &y2)).unwrap();
        let rhs = bk.apply(&y).unwrap() * c + bk.apply(&y2).unwrap();
        prop_assert!((lhs - &rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_minimizer_beats_perturbations(
        seed in any::<u64>(),
        loss in regression_loss(),
        scale in 0.01f64..1.0,
    ) {
        let mut r = rng(seed);
        let (n, m) = (r.random_range(3..12), r.random_range(1..8));
        let d = gaussian_matrix(&mut r, n, m);
        let y = gaussian_vector(&mut r, n) * 2.0;
        let p = CompositeProblem::regression(loss, d.clone(), Regularizer::Identity, y.clone()).unwrap();
        let res = solve(&p, &SolveOptions::with_tol(1e-10, 50_000)).unwrap();
        let obj = |x: &DVector<f64>| loss.value((&y - &d * x).iter()) + x.norm_squared();
        prop_assert!((obj(&res.minimizer) - res.objective).abs() <= 1e-8 * (1.0 + res.objective));
        prop_assert!(res.objective <= obj(&DVector::zeros(m)) + 1e-9);
        for _ in 0..5 {
            let x = &res.minimizer + gaussian_vector(&mut r, m) * scale;
            prop_assert!(res.objective <= obj(&x) + 1e-6 * (1.0 + res.objective));
        }
    }

    #[test]
    fn parameter_and_data_space_estimates_agree(
        seed in any::<u64>(),
        loss in regression_loss(),
        lambda in 0.1f64..10.0,
        nu in 1.0f64..5.0,
    ) {
        let mut r = rng(seed);
        let n = r.random_range(3..10);
        let u = gaussian_matrix(&mut r, n, n);
        let k = random_psd(&mut r, n) + DMatrix::identity(n, n) * 0.1;
        let y = gaussian_vector(&mut r, n);
        let model = SpectralModel::factorize(&u, &k, 1.0).unwrap();
        let bk = BoostingKernel::new(&model, lambda, nu).unwrap();
        // the data-space form eigendecomposes B, so it resolves only well-conditioned kernels
        let eigs = bk.eigs().values;
        prop_assume!(eigs.max() <= 1e9 * eigs.min());
        let opts = SolveOptions::with_tol(1e-10, 100_000);
        let one = estimate_theta(&bk, loss, &y, &opts).unwrap();
        let two = estimate_output_data_space(&bk, loss, &y, &opts).unwrap();
        let s1 = one.solve.as_ref().unwrap();
        prop_assert!((&one.fitted - &two.fitted).norm() <= 1e-5 * (1.0 + y.norm()), "obj {} {} conv {} {} res {} {} it {} {}", s1.objective, two.objective, s1.converged, two.converged, s1.residual, two.residual, s1.iterations, two.iterations);
    }
}
