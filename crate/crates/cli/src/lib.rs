//! Command-line driver for `nonlocal-sharp-core`: argument parsing, study
//! configs, and CSV/JSON output.
//!
//! Exit status is 0 on success, 1 on I/O failure, 2 on invalid input and 3
//! when a numerical method fails.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod study;

pub use cli::Cli;
pub use commands::run;
pub use error::{CliError, CliResult};
