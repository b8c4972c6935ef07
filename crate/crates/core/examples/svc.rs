//! Support-vector classification with the boosting kernel, `ν` chosen on a
//! validation set by golden-section search.

use kernel_boost::bench::generate::{gen_classify_mixture, stream_rng};
use kernel_boost::bench::metrics::fit_classification;
use kernel_boost::losses::LossSpec;
use kernel_boost::rkhs::{boost_svc, PointKernel, RkhsProblem};
use kernel_boost::solver::SolveOptions;
use kernel_boost::tuning::golden_section;

fn main() -> kernel_boost::Result<()> {
    let split = gen_classify_mixture(&mut stream_rng(2, 0), 500);
    let kernel = PointKernel::Gaussian { beta: 10.0 };
    let (lambda, sigma2) = (1e-3, 1.0);
    let opts = SolveOptions::with_tol(1e-6, 50_000);
    let p = RkhsProblem::with_kernel(
        kernel,
        split.train.inputs.clone(),
        split.train.y.clone(),
        LossSpec::Hinge,
        sigma2 / lambda,
    )?;

    let search = golden_section(
        |nu| {
            let f = boost_svc(&p, lambda, sigma2, nu, &opts)?;
            Ok(100.0 - fit_classification(&split.validation.y, &f.predict(&split.validation.inputs)?)?)
        },
        1.0,
        2000.0,
        1.0,
    )?;
    println!(
        "nu = {:.1} after {} fits (validation error {:.2}%)",
        search.x, search.evaluations, search.value
    );

    let all = split.train.concat(&split.validation);
    let p = RkhsProblem::with_kernel(kernel, all.inputs, all.y, LossSpec::Hinge, sigma2 / lambda)?;
    let f = boost_svc(&p, lambda, sigma2, search.x, &opts)?;
    let acc = fit_classification(&split.test.y, &f.predict(&split.test.inputs)?)?;
    println!("test accuracy {acc:.2}%");
    Ok(())
}
