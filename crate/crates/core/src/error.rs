use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("regime refused: {0}")]
    Regime(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("state outside the domain of {chart}: {reason}")]
    Domain { chart: &'static str, reason: String },
    #[error("chart transfer {from} -> {to} undefined: {reason}")]
    ChartTransfer {
        from: &'static str,
        to: &'static str,
        reason: String,
    },
    #[error("branch unavailable: {0}")]
    Branch(String),
    #[error("no bracket: {0}")]
    NoBracket(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
