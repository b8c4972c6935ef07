use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use kernel_boost::bench::config::{EstimatorConfig, ExperimentConfig, MethodKind, Strategy};
use kernel_boost::bench::experiment::{run_experiment, tune_problem};
use kernel_boost::bench::ingest::{ingest_csv, CsvSchema, EstimationProblem};
use kernel_boost::bench::report::FitReport;
use kernel_boost::error::{Error, Result};
use kernel_boost::losses::LossSpec;

const EXIT_CONFIG: u8 = 3;
const EXIT_DATA: u8 = 4;
const EXIT_NUMERIC: u8 = 5;

#[derive(Parser)]
#[command(name = "bench", version, about = "Boosting-kernel experiments and tuning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment described by a TOML file.
    Run {
        config: PathBuf,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for report.json, runs.csv and meta.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Scan every integer ν instead of golden-section search.
        #[arg(long)]
        exhaustive_nu: bool,
    },
    /// Tune hyperparameters on a CSV data set.
    Tune {
        csv: PathBuf,
        /// TOML file with the column roles (y or label, u or inputs, detrend).
        #[arg(long)]
        schema: PathBuf,
        #[arg(long, value_enum)]
        strategy: TuneStrategy,
        /// Estimator for input-location data.
        #[arg(long, value_enum, default_value = "boost-kernel")]
        method: PointMethod,
        #[arg(long, default_value = "quad")]
        loss: LossSpec,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        sigma2: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Gaussian kernel parameter for input-location data.
        #[arg(long, default_value_t = 10.0)]
        beta: f64,
        #[arg(long, default_value_t = 500.0)]
        nu_max: f64,
        #[arg(long)]
        exhaustive_nu: bool,
        /// Also write the result as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a CSV file against a schema and summarize it.
    Ingest {
        csv: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Force mean removal regardless of the schema.
        #[arg(long)]
        detrend: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TuneStrategy {
    Sure,
    Holdout,
}

#[derive(Clone, Copy, ValueEnum)]
enum PointMethod {
    BoostKernel,
    ClassicRkhs,
    KernelRkhs,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Dimension(_) | Error::InvalidParameter(_) => EXIT_CONFIG,
        Error::Data(_) | Error::Parse(_) | Error::Io(_) => EXIT_DATA,
        Error::NotPsd { .. } | Error::NotSymmetric(_) | Error::Degenerate(_) | Error::Numeric(_) => EXIT_NUMERIC,
    }
}

fn load_schema(path: &Path) -> Result<CsvSchema> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let schema: CsvSchema = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    schema.validate()?;
    Ok(schema)
}

fn print_report(report: &FitReport) {
    println!(
        "{:<20} {:>8} {:>8} {:>8} {:>8} {:>10} {:>8}",
        "estimator", "median", "q1", "q3", "mean", "calls", "unconv"
    );
    for s in &report.summaries {
        println!(
            "{:<20} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>10.1} {:>8}",
            s.name, s.median, s.q1, s.q3, s.mean, s.mean_solver_calls, s.unconverged_runs
        );
    }
    if let Some(r) = &report.call_ratio {
        println!(
            "solver calls {} / {} = {:.4} ({:.1}x fewer)",
            r.boost_kernel,
            r.classic,
            r.ratio,
            1.0 / r.ratio
        );
    }
}

fn run(config: &Path, runs: Option<usize>, seed: Option<u64>, out: Option<PathBuf>, exhaustive_nu: bool) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    cfg.override_with(runs, seed, out, exhaustive_nu);
    cfg.validate()?;
    let start = Instant::now();
    let report = run_experiment(&cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    print_report(&report);
    println!("{} runs in {elapsed:.2} s", cfg.runs);
    if let Some(dir) = &cfg.out {
        for path in report.write(dir, elapsed)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn tune(
    csv: &Path,
    schema: &Path,
    strategy: TuneStrategy,
    method: PointMethod,
    loss: LossSpec,
    lambda: Option<f64>,
    sigma2: Option<f64>,
    gamma: Option<f64>,
    beta: f64,
    nu_max: f64,
    exhaustive_nu: bool,
    out: Option<PathBuf>,
) -> Result<()> {
    let problem = ingest_csv(csv, &load_schema(schema)?)?;
    let linear = matches!(problem, EstimationProblem::Linear { .. });
    let method = match (linear, strategy, method) {
        (true, _, _) => MethodKind::Spectral,
        (false, TuneStrategy::Sure, _) => {
            return Err(Error::Config("SURE tuning needs a linear schema (u columns)".into()))
        }
        (false, _, PointMethod::BoostKernel) => MethodKind::BoostKernel,
        (false, _, PointMethod::ClassicRkhs) => MethodKind::ClassicRkhs,
        (false, _, PointMethod::KernelRkhs) => MethodKind::KernelRkhs,
    };
    let est = EstimatorConfig {
        loss,
        tuning: Some(match strategy {
            TuneStrategy::Sure => Strategy::Sure,
            TuneStrategy::Holdout => Strategy::Holdout,
        }),
        beta,
        lambda,
        sigma2,
        gamma,
        nu_max,
        exhaustive_nu,
        ..EstimatorConfig::new("tuned", method)
    };
    est.validate(linear)?;
    let o = tune_problem(&est, &problem, sigma2)?;
    let result = serde_json::json!({
        "method": method,
        "loss": loss,
        "lambda": o.lambda,
        "nu": o.nu,
        "gamma": o.gamma,
        "nu_at_max": o.nu_at_max,
        "solver_calls": o.solver_calls,
        "converged": o.converged,
    });
    let text = serde_json::to_string_pretty(&result).map_err(|e| Error::Numeric(e.to_string()))?;
    println!("{text}");
    if let Some(path) = out {
        std::fs::write(&path, text)?;
    }
    Ok(())
}

fn ingest(csv: &Path, schema: &Path, detrend: bool) -> Result<()> {
    let mut schema = load_schema(schema)?;
    schema.detrend |= detrend;
    match ingest_csv(csv, &schema)? {
        EstimationProblem::Linear { u, y, columns } => {
            println!("linear problem: {} rows, {} regressors", y.len(), u.ncols());
            println!("  y mean {:.6e}", y.mean());
            for (name, col) in columns.iter().zip(u.column_iter()) {
                println!("  {name} mean {:.6e}", col.mean());
            }
        }
        EstimationProblem::Points { inputs, y, labeled } => {
            let dim = inputs.first().map_or(0, Vec::len);
            if labeled {
                let pos = y.iter().filter(|&&v| v > 0.0).count();
                println!(
                    "classification problem: {} rows, input dimension {dim}, {pos} positive",
                    y.len()
                );
            } else {
                println!(
                    "regression problem: {} rows, input dimension {dim}, y mean {:.6e}",
                    y.len(),
                    y.mean()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            runs,
            seed,
            out,
            exhaustive_nu,
        } => run(&config, runs, seed, out, exhaustive_nu),
        Command::Tune {
            csv,
            schema,
            strategy,
            method,
            loss,
            lambda,
            sigma2,
            gamma,
            beta,
            nu_max,
            exhaustive_nu,
            out,
        } => tune(
            &csv,
            &schema,
            strategy,
            method,
            loss,
            lambda,
            sigma2,
            gamma,
            beta,
            nu_max,
            exhaustive_nu,
            out,
        ),
        Command::Ingest { csv, schema, detrend } => ingest(&csv, &schema, detrend),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
