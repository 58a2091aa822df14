//! Benchmark harness around `ppl-core`: dataset readers, the run
//! configuration, trace and summary output, and the runner behind the
//! `ppl` command.

pub mod config;
pub mod data;
pub mod outputs;
pub mod report;
pub mod runner;

pub use config::{load_config, RunConfig};
pub use runner::{execute, run_suite, run_to_dir, RunOutcome};
