use std::io;

use thiserror::Error;

pub type Result<T, E = CdpError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CdpError {
    #[error("invalid weight {value} at ({row}, {col}): weights must be finite and nonnegative")]
    InvalidWeight { row: usize, col: usize, value: f64 },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("need at least {min} vertices, got {n}")]
    TooFewVertices { n: usize, min: usize },

    #[error("snapshot has no edges")]
    EmptyGraph,

    #[error("shape is degenerate: centered matrix has zero norm")]
    DegenerateShape,

    #[error("embedding dimension {d} exceeds target dimension {d_max}")]
    DimensionError { d: usize, d_max: usize },

    #[error("shape mismatch: expected {expected}, got {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("power-law shape must exceed 1, got {0}")]
    InvalidShape(f64),

    #[error("block probability {value} at ({row}, {col}) is outside [0, 1]")]
    InvalidProbability { row: usize, col: usize, value: f64 },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("score partition is empty")]
    EmptyPartition,

    #[error("sign test undefined: every pair is tied")]
    Undefined,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("at t={t}: {source}")]
    AtTime {
        t: usize,
        #[source]
        source: Box<CdpError>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CdpError {
    pub(crate) fn at(t: usize) -> impl FnOnce(CdpError) -> CdpError {
        move |e| match e {
            already @ CdpError::AtTime { .. } => already,
            other => CdpError::AtTime {
                t,
                source: Box::new(other),
            },
        }
    }

    /// The innermost error, with any time context stripped.
    pub fn root(&self) -> &CdpError {
        match self {
            CdpError::AtTime { source, .. } => source.root(),
            other => other,
        }
    }

    /// Time index attached to this error, if any.
    pub fn time(&self) -> Option<usize> {
        match self {
            CdpError::AtTime { t, .. } => Some(*t),
            _ => None,
        }
    }
}
