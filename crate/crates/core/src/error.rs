use thiserror::Error;

/// Errors raised across the library.
///
/// The variants map one-to-one onto the CLI exit codes (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("solver did not converge after {iterations} iterations (max residual {max_residual:.3e}, method {method})")]
    NoConvergence {
        iterations: usize,
        max_residual: f64,
        method: String,
    },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("bracketing error: {message}")]
    Bracketing {
        message: String,
        /// (omega_c, signed imbalance of the lower polariton, pair gap) per scan point.
        trace: Vec<(f64, f64, f64)>,
    },

    #[error("empty comparison: {0}")]
    EmptyReport(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) => 2,
            Error::NoConvergence { .. } | Error::Numeric(_) | Error::Degenerate(_) | Error::EmptyReport(_) => 3,
            Error::Bracketing { .. } => 4,
            Error::Io(_) => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Usage(_) => "usage",
            Error::NoConvergence { .. } => "solver",
            Error::Numeric(_) => "numeric",
            Error::Degenerate(_) => "degenerate",
            Error::Bracketing { .. } => "bracketing",
            Error::EmptyReport(_) => "empty-report",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
