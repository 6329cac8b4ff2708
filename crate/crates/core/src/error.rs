use thiserror::Error;

/// Errors raised by the sequence, distribution and integral-form machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index out of range: k + s = {needed} exceeds sequence length {len}")]
    IndexOutOfRange { needed: usize, len: usize },

    #[error("sequence too short: length {len}, at least {min} values required")]
    SequenceTooShort { len: usize, min: usize },

    #[error("quantile is not integrable: {0}")]
    NonIntegrable(String),

    #[error("divergent integral near {region}")]
    DivergentIntegral { region: String },

    #[error("unknown catalog entry `{0}`")]
    UnknownName(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("distribution is not in class F: {0}")]
    ClassFViolation(String),

    #[error("h1 is not strictly positive: {0}")]
    PositivityViolation(String),

    #[error("reconstructed quantile has divergent mean: {0}")]
    DivergentMean(String),

    #[error("Hoeffding construction invalid: beta[{i}] >= beta[{next}] at level n = {n}")]
    ConstructionInvalid { n: usize, i: usize, next: usize },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
