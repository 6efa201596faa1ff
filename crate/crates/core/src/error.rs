use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Vector lengths or dimensions disagree with a declared structure.
    #[error("structural mismatch: {0}")]
    Structure(String),

    /// A state or action outside the domain of a dynamics function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("rollout produced a non-finite value at step {step}")]
    NonFinite { step: usize },

    #[error("rollout from start state {start} failed: {source}")]
    Rollout {
        start: usize,
        #[source]
        source: Box<Error>,
    },

    /// Configuration rejected by validation; `field` names the offending key.
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("toml: {0}")]
    Toml(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn structure(msg: impl Into<String>) -> Self {
        Error::Structure(msg.into())
    }
}
