//! Reads a linear model from CSV, detrends it and tunes the boosting kernel
//! by SURE, as `bench tune` does.

use std::io::Write;

use kernel_boost::bench::config::{EstimatorConfig, MethodKind, Strategy};
use kernel_boost::bench::experiment::tune_problem;
use kernel_boost::bench::ingest::{ingest_csv, CsvSchema};

fn main() -> kernel_boost::Result<()> {
    let mut file = tempfile::NamedTempFile::new()?;
    writeln!(file, "load,temp,hour,power")?;
    for i in 0..120 {
        let t = i as f64;
        let (load, temp, hour) = ((0.3 * t).sin(), 20.0 + (0.05 * t).cos(), (i % 24) as f64);
        let power = 3.0 * load - 0.5 * temp + 0.1 * hour + 0.2 * (1.7 * t).sin();
        writeln!(file, "{load},{temp},{hour},{power}")?;
    }
    file.flush()?;

    let schema = CsvSchema {
        y: Some("power".into()),
        u: vec!["load".into(), "temp".into(), "hour".into()],
        detrend: true,
        ..CsvSchema::default()
    };
    let problem = ingest_csv(file.path(), &schema)?;
    println!("{} rows", problem.rows());

    let est = EstimatorConfig {
        tuning: Some(Strategy::Sure),
        ..EstimatorConfig::new("boosting", MethodKind::Spectral)
    };
    let o = tune_problem(&est, &problem, None)?;
    let (lambda, nu) = (o.lambda.unwrap_or(f64::NAN), o.nu.unwrap_or(f64::NAN));
    println!("lambda {lambda:.4e}  nu {nu:.2}  solver calls {}", o.solver_calls);
    Ok(())
}
