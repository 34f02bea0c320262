use std::path::PathBuf;

/// Errors produced by the clustering library and the benchmark harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A linear solve met a pivot below tolerance.
    #[error("singular or indefinite matrix: pivot {pivot} is {value:e}")]
    Singular { pivot: usize, value: f64 },

    /// A cluster lost all of its membership mass.
    #[error("degenerate cluster {cluster}")]
    DegenerateCluster { cluster: usize },

    /// Failure inside an iterative fit, tagged with where it happened.
    #[error("cluster {cluster} failed at iteration {iteration}: {source}")]
    Fit {
        cluster: usize,
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn in_fit(self, cluster: usize, iteration: usize) -> Self {
        match self {
            e @ Error::Fit { .. } => e,
            e => Error::Fit {
                cluster,
                iteration,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
