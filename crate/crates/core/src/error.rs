use thiserror::Error;

/// Toolkit-wide error type.
#[derive(Debug, Error)]
pub enum ToxgenError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema error in {path}: {message}")]
    Schema { path: String, message: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("unknown label: {0}")]
    UnknownLabel(String),

    #[error("http error: {0}")]
    Http(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, ToxgenError>;
