use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported derivative order ({ox}, {oy}): total order must not exceed 4")]
    UnsupportedOrder { ox: u8, oy: u8 },

    #[error("underdetermined system: {rows} collocation rows for {cols} basis functions (need rows > unknowns)")]
    Underdetermined { rows: usize, cols: usize },

    #[error("non-finite entry while assembling row {row} ({label})")]
    AssemblyFailure { row: usize, label: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("SVD failed to converge")]
    SvdNoConvergence,

    #[error("every singular value fell below the truncation cutoff")]
    RankZero,

    #[error("config error at line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    /// Name of the pipeline stage that produced the error, used to tag CLI diagnostics.
    pub fn module(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => "input",
            Error::UnsupportedOrder { .. } => "rbf",
            Error::Underdetermined { .. } | Error::AssemblyFailure { .. } => "assembly",
            Error::SvdNoConvergence | Error::RankZero => "lsq",
            Error::Config { .. } => "config",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
