use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index out of range: {0}")]
    Range(String),
    #[error("structure violation: {0}")]
    Structure(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("nonlinearity rejected: {0}")]
    Hypothesis(String),
    #[error("capability exceeded: {0}")]
    Capability(String),
    #[error("representation error: {0}")]
    Representation(String),
    #[error("small-data assumption violated: {0}")]
    SmallData(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("small divisor {value:e} below floor {floor:e} at tuple {tuple}")]
    SmallDivisor { value: f64, floor: f64, tuple: String },
    #[error("measurement failed: {0}")]
    Measurement(String),
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
    #[error("step failure at t={t}: {reason}")]
    StepFailure { t: f64, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
