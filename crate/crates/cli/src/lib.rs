//! Harness for the optimistic learners: TOML configuration, experiment
//! orchestration, CSV and SVG output, and the acceptance suite.

pub mod acceptance;
pub mod cli;
pub mod config;
pub mod output;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use output::{emit_svg, Aggregate};
