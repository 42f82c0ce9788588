//! Experiment configuration and dispatch behind the `mixchain` binary.

pub mod config;
pub mod dispatch;

pub use config::{config_from_header, parse_config, Command, ExperimentConfig};
pub use dispatch::{dispatch, output_header, Outcome};
