use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid timestamp {0:?}: expected YYYY-MM-DD HH:MM:SS")]
    Timestamp(String),

    #[error("unknown admission type {0:?}")]
    AdmissionType(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("missing class {0} in labels")]
    MissingClass(u8),

    #[error("invalid pattern {pattern:?}: {reason}")]
    Pattern { pattern: String, reason: String },

    #[error("training diverged at iteration {iteration}: loss {loss}")]
    Diverged { iteration: usize, loss: f64 },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("wrong model kind: expected {expected}, got {actual}")]
    ModelKind {
        expected: &'static str,
        actual: &'static str,
    },
}
