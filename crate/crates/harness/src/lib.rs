//! Experiment harness for the `implicit_td` core: declarative configs,
//! replicated runs, CSV/JSON artifacts, a property suite and the `itd` CLI.

pub mod config;
mod error;
pub mod experiment;
pub mod formats;
pub mod output;
pub mod repro;
pub mod sweep;
pub mod verify;

pub use config::{AlgorithmConfig, EnvConfig, ExperimentConfig, Family, Metric, ProjectionConfig};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, run_experiment_with_threads, AggregateRow, ExperimentResult, ResultRow};
pub use output::emit_outputs;
pub use sweep::sweep_step_size;
pub use verify::{run_verification_suite, run_verification_suite_with, Fault, VerificationReport};
