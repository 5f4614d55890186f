use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("register label collision: {0}")]
    LabelCollision(String),
    #[error("unknown register label: {0}")]
    UnknownLabel(String),
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("channel is not CPTP: {0}")]
    NotCptp(String),
    #[error("dimension cap exceeded: {0}")]
    DimensionCap(String),
    #[error("register is not classical: {0}")]
    NotClassical(String),
    #[error("zero-probability event")]
    ZeroProbability,
    #[error("support violation: {0}")]
    SupportViolation(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("field mismatch: {0}")]
    FieldMismatch(String),
    #[error("wrong key length: expected {expected}, got {got}")]
    KeyLength { expected: usize, got: usize },
    #[error("search space too large: {0}")]
    SearchSpace(String),
    #[error("unauthorized set: need at least {need} shares, got {got}")]
    Unauthorized { need: usize, got: usize },
    #[error("unknown adversary: {0}")]
    UnknownAdversary(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("leakage budget violation: {0}")]
    LeakageBudget(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
