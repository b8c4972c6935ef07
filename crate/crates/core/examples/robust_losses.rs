//! The boosting kernel with piecewise linear-quadratic losses on data with
//! gross outliers.

use kernel_boost::bench::generate::{gen_inverse_problem, stream_rng, InverseSpec};
use kernel_boost::bench::metrics::fit_theta;
use kernel_boost::kernels::{BoostingKernel, SpectralModel};
use kernel_boost::losses::LossSpec;
use kernel_boost::solver::{estimate_theta, SolveOptions};
use kernel_boost::tuning::{tune_sure, SureOptions, SureSurface};
use nalgebra::DMatrix;

fn main() -> kernel_boost::Result<()> {
    let spec = InverseSpec::default();
    let mut p = gen_inverse_problem(&mut stream_rng(11, 0), &spec)?;
    let model = SpectralModel::factorize(&p.u, &DMatrix::identity(spec.m, spec.m), p.sigma2)?;
    // hyperparameters from the clean data, so only the loss differs below
    let tuned = tune_sure(&SureSurface::new(&model, &p.y)?, &SureOptions::default())?;
    let bk = BoostingKernel::new(&model, tuned.lambda.unwrap_or(0.0), tuned.nu)?;
    let sd = p.sigma2.sqrt();
    for i in (0..p.y.len()).step_by(10) {
        p.y[i] += 20.0 * sd;
    }
    let opts = SolveOptions::default();
    let losses = [
        ("quadratic", LossSpec::Quadratic),
        ("huber", LossSpec::Huber { kappa: 2.0 * sd }),
        ("l1", LossSpec::L1),
        ("vapnik", LossSpec::Vapnik { eps: 0.5 * sd }),
        ("quantile huber", LossSpec::QuantileHuber { tau: 0.5, kappa: sd }),
    ];
    println!("lambda {:.3e}, nu {:.2}", bk.lambda, bk.nu);
    println!("{:<16} {:>8} {:>10}", "loss", "fit", "iterations");
    for (name, loss) in losses {
        let t = estimate_theta(&bk, loss, &p.y, &opts)?;
        let iters = t.solve.as_ref().map_or(0, |s| s.iterations);
        println!("{name:<16} {:>8.2} {:>10}", fit_theta(&p.theta, &t.theta)?, iters);
    }
    Ok(())
}
