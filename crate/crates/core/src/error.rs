use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("index {index} out of range for cloud of {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("duplicate points at indices {0} and {1}")]
    DuplicatePoint(usize, usize),

    #[error("incompatible metric spaces: {0}")]
    IncompatibleMetric(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("exact solver accepts at most {cutoff} points, got {len}")]
    ExactCutoff { len: usize, cutoff: usize },

    #[error("invalid scale window: {0}")]
    InvalidWindow(String),

    #[error("family does not verify ({0} violations)")]
    UnverifiedFamily(usize),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for failures of the filesystem rather than of the input data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
