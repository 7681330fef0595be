use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty mask")]
    EmptyMask,

    #[error("degenerate region: {0}")]
    DegenerateRegion(&'static str),

    #[error("negative edge weight {weight} between {a} and {b}")]
    NegativeWeight { a: usize, b: usize, weight: f64 },

    #[error("histogram bin layouts differ ({0} vs {1})")]
    BinMismatch(usize, usize),

    #[error("training set has no {0} samples")]
    EmptyClass(&'static str),

    #[error("unsupported model version `{0}`")]
    ModelVersion(String),

    #[error("model parse error at line {line}: {message}")]
    ModelParse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{0}")]
    Data(String),
}
