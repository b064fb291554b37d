use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NdsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("empty point set")]
    EmptySet,
    #[error("config error: {0}")]
    Config(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, NdsError>;

impl From<std::io::Error> for NdsError {
    fn from(e: std::io::Error) -> Self {
        NdsError::Io(e.to_string())
    }
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(NdsError::Config(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(NdsError::Domain(msg.into()))
}
