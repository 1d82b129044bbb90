//! Experiment harness for the phase retrieval solvers: config files, sweep
//! drivers, CSV result tables and the `rwf` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod parallel;
pub mod pgm;
pub mod table;

pub use config::{Experiment, ExperimentConfig, Model, NoiseKind};
pub use error::{HarnessError, Result};
pub use experiments::execute;
pub use table::ResultTable;
