use thiserror::Error;

/// Errors raised by the engine.
///
/// `Truncation` is the "raise the cap" signal: the requested computation needs
/// coordinates or generators beyond the finite part of the pro-finite patch.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("slot {slot} out of range 1..={arity}")]
    SlotOutOfRange { slot: usize, arity: usize },

    #[error("truncation: {what} needs jet order {needed} (raise the order cap to at least {needed})")]
    Truncation { what: String, needed: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("non-squaring differential: {0}")]
    NonComplex(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn is_truncation(&self) -> bool {
        matches!(self, Error::Truncation { .. })
    }
}
