use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic: not a feature file")]
    BadMagic,

    #[error("unsupported file version {0}")]
    UnsupportedVersion(u8),

    #[error("truncated file: header promises {expected} bytes, found {found}")]
    TruncatedFile { expected: usize, found: usize },

    #[error("{0} unexpected trailing bytes after payload")]
    TrailingBytes(usize),

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: u32, num_classes: u32 },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("cannot split {classes} classes into {tasks} tasks")]
    TooManyTasks { tasks: usize, classes: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("symmetric eigendecomposition failed")]
    EigDecompositionFailure,

    #[error("linear system is singular (lambda = 0 and Gram matrix rank-deficient)")]
    SingularSystem,

    #[error("target width cannot shrink from {current} to {requested} columns")]
    ShrinkingTargets { current: usize, requested: usize },

    #[error("vector {0} has zero norm")]
    ZeroVector(usize),

    #[error("basis is not orthonormal (max deviation {0:.3e})")]
    NonOrthonormalBasis(f64),

    #[error("need at least 2 classes, have {0}")]
    TooFewClasses(usize),

    #[error("class {0} is missing from the class statistics")]
    StatsOutOfSync(u32),

    #[error("model is not fitted")]
    NotFitted,

    #[error("unknown class {0}")]
    UnknownClass(u32),

    #[error("class {0} was already learned in an earlier task")]
    RepeatedClass(u32),

    #[error("unknown task {task} (learned {learned})")]
    UnknownTask { task: usize, learned: usize },

    #[error("baseline accuracy {0} leaves no error to reduce")]
    DegenerateBaseline(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
