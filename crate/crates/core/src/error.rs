use thiserror::Error;

/// Errors raised by model validation, the tail programs and the estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An exponential moment that the computation needs is infinite.
    #[error("moment diverges: {0}")]
    MomentDiverges(String),

    #[error("unsupported case: {0}")]
    Unsupported(String),

    /// Not enough exceedances (or retained tail) to form the estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Short machine-readable kind, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) => "invalid_model",
            Error::InvalidInput(_) => "invalid_input",
            Error::MomentDiverges(_) => "moment_diverges",
            Error::Unsupported(_) => "unsupported",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Numerical(_) => "numerical",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
