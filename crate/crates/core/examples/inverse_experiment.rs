//! Runs the low-pass deconvolution study from its TOML description with a
//! reduced run count and prints the summary table.

use std::path::PathBuf;

use kernel_boost::bench::config::ExperimentConfig;
use kernel_boost::bench::experiment::run_experiment;

fn main() -> kernel_boost::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/inverse_lowpass.toml");
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.runs = 5;
    let report = run_experiment(&cfg)?;
    for s in &report.summaries {
        println!(
            "{:<10} median {:6.2}  IQR [{:6.2}, {:6.2}]  mean nu {:8.2}",
            s.name,
            s.median,
            s.q1,
            s.q3,
            s.mean_nu.unwrap_or(f64::NAN)
        );
    }
    print!("{}", report.runs_csv()?);
    Ok(())
}
