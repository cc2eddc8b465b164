use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh is empty")]
    EmptyMesh,

    #[error("mesh is not a topological disk (euler characteristic {euler}, {loops} boundary loops, {nonmanifold} non-manifold edges)")]
    NotDisk {
        euler: i64,
        loops: usize,
        nonmanifold: usize,
    },

    #[error("boundary loop with {0} vertices cannot be closed")]
    ShortLoop(usize),

    #[error("plane fit is singular: (x, y) projections are collinear")]
    CollinearPoints,

    #[error("linear solver did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("no foreground class is present in prediction or ground truth")]
    NoForeground,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
