use thiserror::Error;
use vmlimit_core::{FieldsError, SolverError, SpectralError};
use vmlimit_transport::TransportError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Process exit code: 2 for invalid input, 3 for numerical aborts, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) | Self::Toml(_) => 2,
            Self::Numerical(_) => 3,
            Self::Io(_) | Self::Json(_) => 1,
        }
    }
}

impl From<SolverError> for HarnessError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Validation(m) => Self::Validation(m),
            other => Self::Numerical(other.to_string()),
        }
    }
}

impl From<FieldsError> for HarnessError {
    fn from(e: FieldsError) -> Self {
        match e {
            FieldsError::Validation(m) => Self::Validation(m),
            other => Self::Numerical(other.to_string()),
        }
    }
}

impl From<SpectralError> for HarnessError {
    fn from(e: SpectralError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<TransportError> for HarnessError {
    fn from(e: TransportError) -> Self {
        match e {
            TransportError::InvalidMeasure(m) | TransportError::InvalidDensity(m) => Self::Validation(m),
            other => Self::Numerical(other.to_string()),
        }
    }
}
