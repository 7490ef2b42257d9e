use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite input")]
    NonFinite,

    #[error("precision loss: {0}")]
    PrecisionLoss(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("memory guard: net of {size} points exceeds cap {cap}")]
    NetTooLarge { size: f64, cap: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config: {0}")]
    Config(String),

    #[error("unknown format `{0}`")]
    UnknownFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParam(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
