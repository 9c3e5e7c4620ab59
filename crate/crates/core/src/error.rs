use thiserror::Error;

/// Errors raised by parameter validation and the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("target {target} is unreachable: {reason}")]
    Unreachable { target: f64, reason: String },

    #[error("codebook with 2^{bits} messages is too large to enumerate (limit 2^{limit})")]
    CodebookTooLarge { bits: u32, limit: u32 },

    #[error("symbol {symbol} out of range for alphabet size {q}")]
    SymbolOutOfRange { symbol: usize, q: usize },

    #[error("empty candidate list")]
    EmptyList,

    #[error("io: {0}")]
    Io(String),

    #[error("malformed frame dump: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
