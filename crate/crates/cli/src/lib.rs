//! Command-line experiment harness: configuration, sweeps and reports.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod sweep;
pub mod theorems;

pub use error::{CliError, Result};
