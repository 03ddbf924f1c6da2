//! Configuration-driven experiment runner: config parsing with defaults
//! and range checks, command pipelines over the library modules, and
//! deterministic report/CSV emission with an exit-code contract.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{
    CountingConfig, DomainConfig, ExperimentConfig, FieldConfig, GoodLambdaConfig,
};
pub use report::{csv_text, emit, report_document, write_json, write_text, Gate, RunArtifacts};
pub use runner::{configure_threads, exit_code_for, run, Command};
