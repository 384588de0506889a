//! Pipeline around `filament`: configuration, data ingestion and the
//! `filament` command set.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;

pub use error::{CliError, Result};
