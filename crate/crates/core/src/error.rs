use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or distribution parameter violates its constraints.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// The attachment normalizer vanished; no node can reproduce.
    #[error("zero partition function")]
    ZeroPartition,

    /// Closed form requested outside its domain.
    #[error("{0}")]
    Domain(String),

    /// A configuration entry is missing or malformed.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidSpec(msg.into())
    }

    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
