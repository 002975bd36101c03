use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("verification failed at {location}: {reason}")]
    Verification { location: String, reason: String },
}

impl Error {
    pub fn verification(location: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Verification {
            location: location.into(),
            reason: reason.into(),
        }
    }
}
