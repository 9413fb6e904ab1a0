//! Experiment harness: configuration, the multi-seed driver with CSV
//! output, the selection-cost benchmark, and the self-check bundle.

pub mod bench;
pub mod config;
pub mod experiment;
pub mod properties;

pub use bench::{run_bench, BenchReport, BenchRow};
pub use config::{Config, ConfigError, Metric, SceneKind};
pub use experiment::{
    build_seed_inputs, episode_setup, run_experiment, ExperimentError, MetricSummary, RunOptions,
    RunReport, SeedInputs, SummaryRow,
};
pub use properties::{run_checks, CheckOutcome};
