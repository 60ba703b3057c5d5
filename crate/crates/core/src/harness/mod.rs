//! Experiment configuration, runners and result tables.

pub mod config;
pub mod plot;
pub mod runners;
pub mod selftest;
pub mod table;

pub use config::{ExperimentConfig, ExperimentKind, StrategyName};
pub use runners::{run_dmt, run_experiment, run_rate_region, run_scaling, validate};
pub use table::ResultTable;
