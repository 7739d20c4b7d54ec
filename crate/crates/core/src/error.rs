use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A state or measurement violates one of its structural invariants.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("state is not genuinely multipartite entangled (fails across {0})")]
    NotGme(String),

    /// No angle on the scanned grid clears all three residual margins.
    #[error("no grid angle satisfies the residual margins (best score {best_score:.3e})")]
    SelectionFailure { best_score: f64 },

    /// An intermediate vector of the Hardy construction vanished.
    #[error("degenerate measurement geometry at {step}: norm {norm:.3e}")]
    DegenerateGeometry { step: &'static str, norm: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed input in field `{field}`: {reason}")]
    Parse { field: String, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
