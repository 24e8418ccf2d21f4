use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("qubit index {index} out of range for {n} qubits")]
    QubitIndex { index: usize, n: usize },

    #[error("{requested} qubits exceeds the simulator budget of {max}")]
    QubitBudget { requested: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("malformed data: {0}")]
    Format(String),

    #[error("checkpoint kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },

    #[error("content hash mismatch (expected {expected}, computed {computed})")]
    HashMismatch { expected: String, computed: String },

    #[error("incompatible format version {found} (reader supports {supported})")]
    Version { found: String, supported: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse error classes, used by the CLI to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Dimension { .. }
            | Error::QubitIndex { .. }
            | Error::QubitBudget { .. }
            | Error::InvalidArgument(_)
            | Error::Unsupported(_)
            | Error::Parse(_) => ErrorClass::Config,
            Error::Numeric(_) => ErrorClass::Numeric,
            Error::EmptyDataset
            | Error::Format(_)
            | Error::KindMismatch { .. }
            | Error::HashMismatch { .. }
            | Error::Version { .. }
            | Error::Io(_)
            | Error::Json(_) => ErrorClass::Data,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension { expected, actual })
    }
}
