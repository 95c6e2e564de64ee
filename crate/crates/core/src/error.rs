use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("excluded parameter: {0}")]
    ExcludedParameter(String),
    #[error("degenerate pair: x and y coincide")]
    DegeneratePair,
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("unsupported field: {0}")]
    UnsupportedField(String),
    #[error("support touches the boundary x_d = 0 (gap {0})")]
    BoundaryContact(f64),
    #[error("null seminorm: ratio undefined")]
    NullSeminorm,
    #[error("serialization: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
