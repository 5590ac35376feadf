use thiserror::Error;

pub type Result<T> = std::result::Result<T, DgpcError>;

#[derive(Debug, Error)]
pub enum DgpcError {
    /// Invalid run configuration. Carries every offending field.
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    /// An operation was called with arguments that violate its contract.
    #[error("usage error: {0}")]
    Usage(String),

    /// The Gram matrix of the current measure could not be factored even
    /// after diagonal regularization.
    #[error("degenerate measure: Cholesky breakdown at pivot {pivot} (index {index})")]
    DegenerateMeasure { pivot: usize, index: String },

    /// A KL mode has (numerically) zero variance and cannot be normalized.
    #[error("rank deficiency: KL mode {mode} has eigenvalue {eigenvalue:e}")]
    RankDeficient { mode: usize, eigenvalue: f64 },

    #[error("non-finite values in solution at t = {time}")]
    BlowUp { time: f64 },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error("restart {restart}: {source}")]
    AtRestart {
        restart: usize,
        #[source]
        source: Box<DgpcError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DgpcError {
    pub fn usage(msg: impl Into<String>) -> Self {
        DgpcError::Usage(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        DgpcError::Config(vec![msg.into()])
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        DgpcError::Internal(msg.into())
    }

    pub(crate) fn at_restart(self, restart: usize) -> Self {
        match self {
            e @ DgpcError::AtRestart { .. } => e,
            e => DgpcError::AtRestart {
                restart,
                source: Box::new(e),
            },
        }
    }
}
