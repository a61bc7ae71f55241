//! Experiment runner around `dpmeter-core`: trace corpora on disk, layered
//! configuration, CSV reports and the four subcommands of the `dpmeter`
//! binary.

pub mod catalog;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod error;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
