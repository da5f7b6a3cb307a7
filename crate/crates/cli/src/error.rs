use plmm::PlmmError;
use thiserror::Error;

/// Command failure, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input, configuration or file contents (exit 2).
    #[error("{0}")]
    Validation(String),
    /// Failure while running a valid request (exit 3).
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<PlmmError> for CliError {
    fn from(e: PlmmError) -> Self {
        match e {
            PlmmError::DimensionMismatch { .. }
            | PlmmError::NotOnSimplex(_)
            | PlmmError::EmptyData(_)
            | PlmmError::TooFewSamples { .. }
            | PlmmError::InvalidValue(_)
            | PlmmError::InvalidConfig(_)
            | PlmmError::Parse { .. }
            | PlmmError::Schema(_)
            | PlmmError::Json(_) => CliError::Validation(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}
