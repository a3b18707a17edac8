use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, PlanError>;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("{what} is not positive definite")]
    NotPositiveDefinite { what: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("observation of unregistered landmark {0} during planning")]
    UnregisteredLandmark(usize),

    #[error("roadmap start and goal are disconnected after {attempts} attempts")]
    Disconnected { attempts: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("lace {lace} is not refined to the exact level")]
    NotExact { lace: usize },

    #[error("belief update failed while expanding lace {lace} at depth {depth}: {source}")]
    Expansion {
        lace: usize,
        depth: usize,
        #[source]
        source: Box<PlanError>,
    },

    #[error("scenario {path}: {message}")]
    Scenario { path: PathBuf, message: String },

    #[error("runs are not comparable: {0}")]
    MismatchedRuns(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
