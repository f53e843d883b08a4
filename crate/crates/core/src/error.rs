use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SadaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SadaError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("graph contains a directed cycle")]
    Cycle,

    #[error("variable {id} out of range for {n} variables")]
    UnknownVariable { id: usize, n: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Too few samples for the requested conditioning set.
    #[error("insufficient samples: {samples} samples cannot support a conditioning set of size {cond_size}")]
    InsufficientSamples { samples: usize, cond_size: usize },

    #[error("singular conditioning set: columns are (nearly) collinear")]
    SingularConditioning,

    /// Contingency table too sparse for a trustworthy G² statistic.
    #[error("unreliable test: {cells} contingency cells for {samples} samples")]
    UnreliableTest { cells: usize, samples: usize },

    #[error("rank-deficient regression: {regressors} regressors with {samples} samples")]
    RankDeficient { regressors: usize, samples: usize },

    #[error("data kind mismatch: {0}")]
    DataKind(String),

    #[error("undefined error model: {0}")]
    UndefinedModel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
