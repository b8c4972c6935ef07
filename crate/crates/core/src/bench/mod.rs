//! Benchmark harness: synthetic data generators, CSV ingestion, fit metrics,
//! Monte Carlo orchestration and report emission.
//!
//! An experiment is described by a TOML file (see [`config`]), run with
//! [`experiment::run_experiment`] and written out by [`report::FitReport::write`].

pub mod config;
pub mod experiment;
pub mod filter;
pub mod generate;
pub mod ingest;
pub mod metrics;
pub mod report;
