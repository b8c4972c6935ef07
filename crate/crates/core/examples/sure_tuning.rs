//! SURE picks `(λ, ν)` for one simulated deconvolution problem; ridge
//! regression (`ν = 1`) is shown for comparison.

use kernel_boost::bench::generate::{gen_inverse_problem, stream_rng, InverseSpec};
use kernel_boost::bench::metrics::fit_theta;
use kernel_boost::kernels::{BoostingKernel, SpectralModel};
use kernel_boost::losses::LossSpec;
use kernel_boost::solver::{estimate_theta, SolveOptions};
use kernel_boost::tuning::{tune_sure, SureOptions, SureSurface};
use nalgebra::DMatrix;

fn main() -> kernel_boost::Result<()> {
    let spec = InverseSpec::default();
    let p = gen_inverse_problem(&mut stream_rng(3, 0), &spec)?;
    let model = SpectralModel::factorize(&p.u, &DMatrix::identity(spec.m, spec.m), p.sigma2)?;
    let surface = SureSurface::new(&model, &p.y)?;
    let (lo, hi) = surface.lambda_bounds()?;
    println!("lambda thresholds: {lo:.4e} .. {hi:.4e}");

    for (name, opts) in [("ridge", SureOptions::ridge()), ("boosting", SureOptions::default())] {
        let r = tune_sure(&surface, &opts)?;
        let lambda = r.lambda.unwrap_or(0.0);
        let bk = BoostingKernel::new(&model, lambda, r.nu)?;
        let theta = estimate_theta(&bk, LossSpec::Quadratic, &p.y, &SolveOptions::default())?.theta;
        println!(
            "{name:<9} lambda {lambda:.4e}  nu {:>8.2}  SURE {:.3}  fit {:.2}",
            r.nu,
            r.objective,
            fit_theta(&p.theta, &theta)?
        );
    }
    Ok(())
}
