//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
///
/// Variants map 1:1 onto the CLI's exit-code classes (see the README):
/// config/usage problems, data problems, I/O, checkpoint container
/// problems, and numeric failures.
#[derive(Debug, Error)]
pub enum Error {
    /// Shape or dimension mismatch between tensors.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A precondition on an operation's input was violated.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Bad configuration: unknown key, unparsable value, incompatible settings.
    #[error("config error: {0}")]
    Config(String),

    /// Dataset or label problem.
    #[error("data error: {0}")]
    Data(String),

    /// A text format could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A value that must be finite was NaN or infinite.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Checkpoint container is corrupt, truncated, or incompatible.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for this error class. Codes are disjoint per
    /// class so scripts can branch on them; 0 is success, 1 is unused
    /// (many shells overload it), and clap already reserves 2 for usage
    /// errors, which are config errors in spirit.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Parse { .. } => 3,
            Error::Io(_) => 4,
            Error::Checkpoint(_) => 5,
            Error::Numeric(_) => 6,
            Error::Shape(_) | Error::Invalid(_) => 7,
        }
    }

    /// Short machine-greppable tag printed before the message on stderr.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::Config(_) => "E_CONFIG",
            Error::Data(_) | Error::Parse { .. } => "E_DATA",
            Error::Io(_) => "E_IO",
            Error::Checkpoint(_) => "E_CHECKPOINT",
            Error::Numeric(_) => "E_NUMERIC",
            Error::Shape(_) | Error::Invalid(_) => "E_INTERNAL",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
