use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("scene generation failed after {attempts} attempts: {reason}")]
    Generation { attempts: u32, reason: String },

    #[error("scene format: {0}")]
    SceneFormat(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("no path from {from:?} to {to:?}")]
    NoPath {
        from: crate::grid::Cell,
        to: crate::grid::Cell,
    },

    #[error("vote oracle: {0}")]
    Oracle(#[from] crate::language::OracleError),

    #[error("config: {0}")]
    Config(String),

    #[error("report: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
