use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// Variants split into two classes that the CLI maps to exit codes:
/// usage/spec problems (exit 2) and mathematical/budget failures (exit 3).
#[derive(Debug, Error)]
pub enum Error {
    #[error("interval unions live in different windows")]
    WindowMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("family index {index} is out of range: {reason}")]
    IndexOutOfRange { index: u64, reason: String },

    #[error("iteration cap of {cap} exceeded while {context}")]
    IterationCap { cap: u64, context: String },

    #[error("size cap exceeded while {context}")]
    SizeCap { context: String },

    #[error("system depth {depth} is insufficient: {reason}")]
    DepthInsufficient { depth: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit code class for the CLI: 2 for usage/spec errors, 3 for
    /// mathematical or budget failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::WindowMismatch
            | Error::InvalidParameter(_)
            | Error::Malformed(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::IndexOutOfRange { .. }
            | Error::IterationCap { .. }
            | Error::SizeCap { .. }
            | Error::DepthInsufficient { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
