use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}, column `{column}`: {message}")]
    Schema {
        line: u64,
        column: String,
        message: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot fit {model}: {reason}")]
    Fit { model: String, reason: String },

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn fit(model: &str, reason: impl Into<String>) -> Self {
        Error::Fit {
            model: model.to_string(),
            reason: reason.into(),
        }
    }
}
