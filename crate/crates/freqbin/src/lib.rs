//! Files, plots and the command line around `freqbin-core`.
//!
//! The pipeline is `simulate → fit → tomo → report`; `verify` runs the
//! acceptance checks against the built-in `paper-profile` configuration.

pub mod commands;
pub mod config;
mod error;
pub mod formats;
pub mod plot;
pub mod report;
pub mod verify;

pub use error::{CliError, CliResult};
