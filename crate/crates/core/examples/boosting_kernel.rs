//! Iterated weak learners collapse into one smoother built from the boosting
//! kernel, and `ν` may be any real number ≥ 1.

use kernel_boost::bench::generate::stream_rng;
use kernel_boost::classic::run_boost;
use kernel_boost::kernels::{BoostingKernel, KernelSpec, SpectralModel};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

fn main() -> kernel_boost::Result<()> {
    let mut rng = stream_rng(0, 0);
    let (n, m) = (30, 8);
    let u = DMatrix::from_fn(n, m, |_, _| StandardNormal.sample(&mut rng));
    let y = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let model = SpectralModel::from_spec(&u, &KernelSpec::StableSpline { dim: m, alpha: 0.8 }, 0.5)?;
    let lambda = 0.2;

    let trace = run_boost(&model, lambda, &y, 6)?;
    println!("{:>6} {:>14}", "rounds", "max |diff|");
    for (k, pred) in trace.predictions.iter().enumerate() {
        let smoothed = BoostingKernel::new(&model, lambda, (k + 1) as f64)?.apply(&y)?;
        println!("{:>6} {:>14.3e}", k + 1, (pred - smoothed).amax());
    }

    println!("\nshrinkage of the three leading directions");
    for nu in [1.0, 2.5, 6.0, 40.0] {
        let s = BoostingKernel::new(&model, lambda, nu)?.shrinkage();
        println!("nu = {nu:>5}: {:.4} {:.4} {:.4}", s[0], s[1], s[2]);
    }
    Ok(())
}
