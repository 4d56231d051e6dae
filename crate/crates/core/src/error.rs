use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("gap {index} is negative ({value:e})")]
    NegativeGap { index: usize, value: f64 },

    #[error("frequency vector leaves the gap cone: gap {index} would be {value:e}")]
    InvalidFrequency { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("chart domain violated at mode {index}: I + gamma* = {value:e}")]
    ChartDomain { index: usize, value: f64 },

    #[error("division guard tripped: {0}")]
    DivisionGuard(&'static str),

    #[error("blow-up detected at t = {time}")]
    BlowupDetected { time: f64 },

    #[error("unsupported perturbation: {0}")]
    UnsupportedPerturbation(String),

    #[error("parameter out of domain: {0}")]
    ParamDomain(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("truncation size {size} too small (need at least {min})")]
    SizeTooSmall { size: usize, min: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
