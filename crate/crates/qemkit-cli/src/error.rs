use qemkit::QemError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}:{line}:{column}: {msg}")]
    Config { origin: String, line: usize, column: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numeric(QemError),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    /// 1 for bad input, 2 for failures during the computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Invalid(_) | CliError::Input(_) => 1,
            CliError::Numeric(_) | CliError::Output(_) => 2,
        }
    }
}

impl From<QemError> for CliError {
    fn from(e: QemError) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e)
        } else {
            CliError::Invalid(e.to_string())
        }
    }
}
