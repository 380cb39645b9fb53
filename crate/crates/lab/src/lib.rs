//! Experiment harness for the noisy-label augmentation lab: INI configuration, run
//! orchestration, metrics files, warm-up probes, grids and the `nlab` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod files;
pub mod grid;
pub mod metrics;
pub mod probe;
pub mod run;

pub use config::ExperimentConfig;
pub use error::{LabError, LabResult};
pub use run::{run, run_seed, RunResult};
