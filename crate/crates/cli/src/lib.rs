//! Experiment runner for `kreinlab`: configuration parsing, the model
//! cache, suite orchestration and report output.

pub mod cache;
pub mod cli;
pub mod config;
pub mod plot;
pub mod report;
pub mod runner;

pub use config::{ConfigError, ExperimentConfig};
pub use report::RunReport;
pub use runner::Runner;
