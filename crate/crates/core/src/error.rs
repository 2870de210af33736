use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("invalid track `{track}`: {reason}")]
    InvalidTrack { track: String, reason: String },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("infeasible assignment: {0}")]
    Infeasible(String),
    #[error("missing cost component: {0}")]
    MissingComponent(String),
    #[error("spline knots collide at t={t}: {detail}")]
    DuplicateKnot { t: i64, detail: String },
    #[error("empty positive bag for track {0}: no in-window candidate")]
    EmptyBag(usize),
    #[error("instance too large for exhaustive search ({n_a}x{n_b}, limit 8x8)")]
    TooLarge { n_a: usize, n_b: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn track(track: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidTrack {
            track: track.into(),
            reason: reason.into(),
        }
    }
}
