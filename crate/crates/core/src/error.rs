use thiserror::Error;

/// Crate-wide error type. Structured variants carry enough context to point
/// at the offending input (byte offsets for parsers, names for checks).
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("decoration {found} out of range (max allowed {max})")]
    DecorationRange { found: u8, max: u8 },

    #[error("resource cap exceeded: {message}")]
    Resource { message: String },

    #[error("truncation mismatch: left operand has N={left}, right has N={right}")]
    TruncationMismatch { left: u32, right: u32 },

    #[error("precondition violated: {message}")]
    Precondition { message: String },

    #[error("alphabet not admissible: {message}")]
    Inadmissible { message: String },

    #[error("rule rejected for tree {tree}: {message}")]
    RuleRejected { tree: String, message: String },

    #[error("map failed verification: {message}")]
    NotAccepted { message: String },

    #[error("grid mismatch: {message}")]
    GridMismatch { message: String },

    #[error("invalid configuration: {message}")]
    Config { message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed input: {message}")]
    Format { message: String },
}

impl Error {
    pub fn precondition(message: impl Into<String>) -> Self {
        Error::Precondition { message: message.into() }
    }

    pub fn format(message: impl Into<String>) -> Self {
        Error::Format { message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
