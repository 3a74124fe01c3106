//! Experiment harness for `svgd-core`: JSON experiment configs, repeated
//! runs with per-step CSV output and aggregates, the Covertype accuracy
//! pipeline, and the verification audit suites behind the `svgd` binary.

pub mod audit;
pub mod cli;
pub mod config;
pub mod covertype;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
