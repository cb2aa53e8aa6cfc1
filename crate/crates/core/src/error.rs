use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure categories shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Arities or indices that do not fit together.
    #[error("structural error: {0}")]
    Structure(String),

    /// An input value outside `[0,1]` (or non-finite).
    #[error("domain error: {0}")]
    Domain(String),

    /// A request that exceeds a fixed enumeration or minimization limit.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// A precondition on the semantics of an argument, e.g. a fallback
    /// function that is not coherent.
    #[error("contract error: {0}")]
    Contract(String),

    /// Malformed configuration values.
    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("training diverged at epoch {epoch}: {reason}")]
    Training { epoch: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn structure(msg: impl Into<String>) -> Self {
        Error::Structure(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Short stable identifier, used by the CLI for machine-readable output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Structure(_) => "structure",
            Error::Domain(_) => "domain",
            Error::Capacity(_) => "capacity",
            Error::Contract(_) => "contract",
            Error::Invalid(_) => "invalid",
            Error::Training { .. } => "training",
            Error::Io(_) => "io",
            Error::Format(_) => "format",
            Error::Csv(_) => "csv",
        }
    }
}
