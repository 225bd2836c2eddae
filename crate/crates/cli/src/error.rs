use std::path::PathBuf;

use nonlocal_sharp_core::Error as CoreError;

/// Exit status: 0 success, 1 I/O, 2 validation, 3 numerical failure.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] CoreError),

    /// Numerical failure after diagnostics were written.
    #[error("{0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Config { .. } => 2,
            CliError::Core(e) => core_exit_code(e),
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

pub fn core_exit_code(e: &CoreError) -> i32 {
    match e {
        CoreError::InvalidArgument(_) | CoreError::InvalidInput(_) | CoreError::RoutedToEigenproblem => 2,
        _ => 3,
    }
}

pub type CliResult<T> = Result<T, CliError>;
