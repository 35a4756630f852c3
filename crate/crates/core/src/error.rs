use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A caller broke an operation's documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A quantizer input is outside the admissible set (norm bound, range).
    #[error("input outside quantizer domain: {0}")]
    Input(String),
    /// A message could not have been produced by the matching encoder.
    #[error("corrupt message: {0}")]
    Corrupt(String),
    /// Oracle, quantizer and algorithm parameters do not fit together.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("internal invariant broken: {0}")]
    Internal(String),
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
