use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    Shape {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("class index {index} out of range for {n_classes} classes")]
    ClassIndex { index: usize, n_classes: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error(
        "{n} features exceed the exact enumeration limit of {max}; use shapley sampling instead"
    )]
    TooManyFeatures { n: usize, max: usize },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("parse error in field `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }
}
