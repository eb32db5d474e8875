use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("raw label {0} is not present in the class map")]
    UnknownLabel(u16),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite coordinate ({x}, {y})")]
    NonFiniteCoordinate { x: f64, y: f64 },

    #[error("invalid grid spec: {0}")]
    InvalidGridSpec(String),

    #[error("invalid pose: {0}")]
    InvalidPose(String),

    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("malformed probability row at point {index}: {reason}")]
    MalformedProbabilities { index: usize, reason: String },

    #[error("point cloud has neither labels nor probabilities")]
    MissingPredictions,

    #[error("grid specs do not match")]
    SpecMismatch,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate ray: origin equals endpoint")]
    DegenerateRay,

    #[error("semantic grid mode mismatch: expected {expected}, found {found}")]
    ModeMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("every class IoU is undefined")]
    NoDefinedClasses,

    #[error("ground truth contains no labeled cells")]
    NothingToEvaluate,

    #[error("training diverged at epoch {epoch}: loss {loss} ({detail})")]
    Diverged {
        epoch: usize,
        loss: f64,
        detail: String,
    },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("scan sequence: {0}")]
    Sequence(String),

    #[error("truncated input at byte offset {offset}: {reason}")]
    Truncated { offset: u64, reason: String },

    #[error("non-finite value at byte offset {offset}")]
    NonFiniteValue { offset: u64 },

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("invalid container: {0}")]
    Container(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach a file path to an error raised while decoding that file.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
