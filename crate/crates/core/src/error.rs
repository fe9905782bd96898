use std::path::PathBuf;

use crate::spectral::Mode;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("size mismatch: expected {expected} entries, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("mode {0} is not in the grid's index set")]
    ModeOutOfRange(Mode),

    #[error("the zero mode is excluded here")]
    ZeroMode,

    #[error("mode {mode}: sign argument sin(n h) + h lambda rho^2 cos(n h) vanishes")]
    DegenerateSign { mode: Mode },

    #[error("mode {mode} is linearly unstable (|Re alpha| = {re_alpha})")]
    UnstableMode { mode: Mode, re_alpha: f64 },

    #[error("tan(n h)/h needs n h in (0, pi/2), got n h = {nh}")]
    Domain { nh: f64 },

    #[error("mode {mode}: mu^2 + 2 lambda sigma mu = {value} is negative")]
    NegativeDiscriminant { mode: Mode, value: f64 },

    #[error("diagonalizer normalizer is not positive at mode {mode}")]
    NotLinearlyStable { mode: Mode },

    #[error("carrier mode vanishes, polar angle undefined")]
    ZeroCarrierMode,

    #[error("perturbation mass exceeds rho^2 by {excess}")]
    MassDeficit { excess: f64 },

    #[error("super-action class sets differ")]
    ClassMismatch,

    #[error("observer aborted at step {step}: {message}")]
    Observer { step: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
