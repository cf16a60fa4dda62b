use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("singular information matrix: {0}")]
    Singular(String),

    #[error("unsupported scenario for analytic approximation: {0}")]
    Unsupported(String),

    #[error("invalid scenario field `{field}`: {message}")]
    Invalid { field: String, message: String },

    #[error("p-value underflow: {0}")]
    Underflow(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid { field: field.into(), message: message.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
