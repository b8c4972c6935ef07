//! Function estimation in a Gaussian RKHS: classical boosting needs one solve
//! per round, the boosting kernel needs one solve in total.

use kernel_boost::bench::generate::{gen_franke, stream_rng};
use kernel_boost::bench::metrics::fit_regression;
use kernel_boost::losses::LossSpec;
use kernel_boost::rkhs::{boost_rkhs_classic, boost_rkhs_kernel, PointKernel, RkhsProblem};
use kernel_boost::solver::SolveOptions;

fn main() -> kernel_boost::Result<()> {
    let split = gen_franke(&mut stream_rng(5, 0), 400);
    let train = split.train.concat(&split.validation);
    let (gamma, sigma2) = (100.0, 1.0);
    let p = RkhsProblem::with_kernel(
        PointKernel::Gaussian { beta: 10.0 },
        train.inputs,
        train.y,
        LossSpec::L1,
        gamma,
    )?;
    let opts = SolveOptions::with_tol(1e-6, 50_000);
    let rounds = 40;

    let classic = boost_rkhs_classic(&p, rounds, &opts)?;
    let kernel = boost_rkhs_kernel(&p, sigma2 / gamma, sigma2, rounds as f64, &opts)?;
    for (name, f) in [("classic", &classic), ("boosting kernel", &kernel)] {
        let fit = fit_regression(&split.test.y, &f.predict(&split.test.inputs)?)?;
        println!("{name:<16} test fit {fit:6.2}  solver calls {:>3}", f.solver_calls);
    }
    Ok(())
}
