//! Library side of the `maskdp` command: ingestion, run configurations and
//! the subcommand implementations.

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;

pub use error::{CliError, Result};
