//! Experiment orchestration: configuration, dispatch, artifacts, reporting.

pub mod config;
pub mod criteria;
pub mod report;
pub mod runner;

pub use config::{ExperimentConfig, Grids, ModelConfig, SpdeConfig, EXPERIMENTS};
pub use report::{report, ReportStatus};
pub use runner::{balanced_bump, init_workers, run_experiment, RunOutcome};
