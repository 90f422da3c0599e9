//! The `msc` command-line tool: configuration, subcommands and file output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{execute, Cli};
pub use config::RunConfig;
pub use error::CliError;
