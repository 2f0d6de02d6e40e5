use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// The k-th and (k+1)-th largest scores coincide, so no intercept selects
    /// exactly k instances.
    #[error("tied scores at the selection threshold (score {score})")]
    Tie { score: f64 },

    #[error("capacity exceeded: {what} is {got}, limit is {limit}")]
    Capacity {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error("model predicts {positives} test instances positive, expected exactly {k}")]
    Infeasible { positives: usize, k: usize },

    #[error("sign assignment cannot be satisfied (worst violation {violation:e})")]
    InfeasibleAssignment { violation: f64 },

    #[error("degenerate gradient (norm {0:e})")]
    DegenerateGradient(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
