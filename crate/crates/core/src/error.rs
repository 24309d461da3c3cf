use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A formula was asked for outside the parameter regime where it holds.
    #[error("regime violation: {constraint} required (got {detail})")]
    Regime {
        constraint: &'static str,
        detail: String,
    },

    /// The requested Monte Carlo job exceeds the desk-scale limits.
    #[error("refused: {0}")]
    Refused(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn regime(constraint: &'static str, detail: impl Into<String>) -> Self {
        Error::Regime {
            constraint,
            detail: detail.into(),
        }
    }
}
