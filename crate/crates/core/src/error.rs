use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice specification: {0}")]
    InvalidSpec(String),

    #[error("vertex {vertex} on the bottom edge has no partner on the left edge")]
    MissingPartner { vertex: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate cell{}: bond length {length:.3e} below floor", triangle.map(|t| format!(" in triangle {t}")).unwrap_or_default())]
    DegenerateCell {
        triangle: Option<usize>,
        length: f64,
    },

    #[error("energy is not finite ({0})")]
    NonFiniteEnergy(f64),

    #[error("matrix is not positive definite (pivot {pivot} at column {column})")]
    NotPositiveDefinite { column: usize, pivot: f64 },

    #[error("Newton system remained singular after regularization reached tau = {tau:.3e}")]
    SingularSystem { tau: f64 },

    #[error("line search failed to find a descent step at iteration {iteration}")]
    LineSearchFailed { iteration: usize },

    #[error("Newton did not converge within {iterations} iterations (gradient {grad_inf:.3e})")]
    MaxIterExceeded { iterations: usize, grad_inf: f64 },

    #[error("at eps = 2^-{eps_exp}: {source}")]
    AtLevel {
        eps_exp: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid angle {phi}: {reason}")]
    InvalidAngle { phi: f64, reason: &'static str },

    #[error("fold count {folds} out of range for N = {n}")]
    FoldOutOfRange { folds: usize, n: usize },

    #[error("incompatible lattices: coarse N = {coarse}, fine N = {fine}")]
    IncompatibleLattices { coarse: usize, fine: usize },

    #[error("energy differences are not monotone (ratio {ratio})")]
    NonMonotone { ratio: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn at_level(self, eps_exp: u32) -> Self {
        Error::AtLevel {
            eps_exp,
            source: Box::new(self),
        }
    }
}
