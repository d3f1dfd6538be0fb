use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value in layer {layer}")]
    NonFiniteLayer { layer: usize },
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("rollout diverged at step {step} (|s| > 1e9)")]
    Diverged { step: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),
    #[error("config parse error: {0}")]
    ConfigParse(String),
    #[error("invalid config field `{field}`: {reason}")]
    ConfigField { field: String, reason: String },
    #[error("missing artifact {}: {hint}", path.display())]
    MissingArtifact { path: PathBuf, hint: String },
    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            actual,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
