use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("input contains no data rows")]
    Empty,

    #[error("series length {len} is not divisible by p = {p} (remainder {remainder})")]
    NotDivisible { len: usize, p: usize, remainder: usize },

    #[error("negative value {value} at curve {curve}, point {point}")]
    Domain { curve: usize, point: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("{needed} observations required, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("collinear {0}")]
    Collinear(&'static str),

    #[error("robust fit degenerate: only {retained} curve(s) kept")]
    RobustDegenerate { retained: usize },

    #[error("VAR specification is not stationary (spectral radius {0:.4})")]
    NonStationary(f64),

    #[error("replicate {index}: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(expected: impl ToString, got: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_replicate(self, index: usize) -> Self {
        Error::Replicate {
            index,
            source: Box::new(self),
        }
    }
}
