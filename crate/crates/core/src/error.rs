use thiserror::Error;

/// Errors raised by the precoding library.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates a structural constraint.
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// The system dimensions leave too little room for interference nulling.
    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    /// A normal-equation matrix could not be factorized.
    #[error("singular system in {context}; retry with admm.ridge > 0")]
    Singular { context: &'static str },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unsupported architecture: {0}")]
    UnsupportedArchitecture(String),

    #[error("failed to parse `{path}`: {reason}")]
    Parse { path: String, reason: String },

    #[error("no result rows to write")]
    EmptyResults,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
