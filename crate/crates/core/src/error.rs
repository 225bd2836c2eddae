use alloc::string::String;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A pointwise kernel was evaluated on its diagonal; callers must use
    /// the cell-integrated diagonal instead.
    #[error("kernel evaluated on the diagonal x = y = {0}")]
    DiagonalSingularity(f64),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("bracket construction failed: {0}")]
    BracketFailure(String),

    #[error("fit window holds {found} nodes, at least {required} required")]
    InsufficientWindow { found: usize, required: usize },

    /// `p = 1` is the eigenvalue problem, handled by [`crate::spectral`].
    #[error("p = 1 is the linear eigenvalue problem; use the spectral solver")]
    RoutedToEigenproblem,

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
