use thiserror::Error;

/// Errors raised anywhere in the simulator or the analysis layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quadrature or truncation could not reach its tolerance.
    #[error("accuracy error: {what} (estimated error {estimate:.3e} exceeds tolerance {tolerance:.3e})")]
    Accuracy {
        what: String,
        estimate: f64,
        tolerance: f64,
    },

    #[error("index {index} out of range (limit {limit})")]
    Bounds { index: usize, limit: usize },

    #[error("configuration error: {0}")]
    Config(String),

    /// Aggregated violations found while validating a configuration document.
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    InvalidConfig(Vec<String>),

    /// A non-finite value appeared in the field.
    #[error("blow-up at t = {time} (cell {cell})")]
    BlowUp { time: f64, cell: usize },

    #[error("data error: {0}")]
    Data(String),

    /// The sample has no spread, so no density can be estimated.
    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("run aborted: {failed} of {total} replicas failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
