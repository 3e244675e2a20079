use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QemError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("operator is not Hermitian")]
    NotHermitian,
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("circuit contains a non-unitary layer")]
    NonUnitary,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("fit did not converge: {0}")]
    FitFailure(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl QemError {
    /// True for errors caused by numerics rather than malformed input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, QemError::Numeric(_) | QemError::FitFailure(_))
    }
}

pub type Result<T> = std::result::Result<T, QemError>;
