//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("mesh parse error at {path}:{line}: {msg}")]
    MeshParse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("mesh validation failed: {0}")]
    InvalidMesh(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("scenario parse error at {path}:{line}: {msg}")]
    ScenarioParse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("scenario validation failed: {0}")]
    InvalidScenario(String),

    #[error("degenerate element {element}: {msg}")]
    DegenerateElement { element: usize, msg: String },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("invalid field input: {0}")]
    InvalidField(String),

    #[error("maneuver optimization infeasible: {0}")]
    ManeuverInfeasible(String),

    #[error("simulation invariant violated at t={t}: {msg}")]
    InvariantViolation { t: f64, msg: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
