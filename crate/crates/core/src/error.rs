use std::path::PathBuf;

use thiserror::Error;

/// Three rows from three distinct objects whose correspondences are not
/// transitive: `rows[0]~rows[1]` and `rows[1]~rows[2]` hold but
/// `rows[0]~rows[2]` does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleWitness {
    pub objects: [usize; 3],
    pub rows: [usize; 3],
}

impl std::fmt::Display for CycleWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "cycle ({}, {}, {}) through global rows ({}, {}, {})",
            self.objects[0], self.objects[1], self.objects[2], self.rows[0], self.rows[1], self.rows[2]
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("blocks ({i},{j}) and ({j},{i}) are not mutual transposes")]
    AsymmetricInput { i: usize, j: usize },

    #[error("diagonal block {0} is not the identity")]
    NonIdentityDiagonal(usize),

    #[error("block ({i},{j}) is not doubly sub-stochastic")]
    NotSubstochastic { i: usize, j: usize },

    #[error("operation requires a binary block matrix")]
    NotBinary,

    #[error("map collection is not cycle-consistent: {0}")]
    Inconsistent(CycleWitness),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("map graph has no edges")]
    EmptyGraph,

    #[error("spectrum carries no usable eigengap")]
    DegenerateSpectrum,

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("non-finite value in ADMM iterate at iteration {iteration}")]
    NumericalBreakdown { iteration: usize },

    #[error("rounding rank {r} outside 1..={order}")]
    InvalidR { r: usize, order: usize },

    #[error("time limit exceeded after {iterations} iterations")]
    Timeout { iterations: usize },

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

    #[error("{context}: {message}")]
    Config { context: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit status for this error class.
    ///
    /// | code | class |
    /// |------|-------|
    /// | 2 | invalid parameters or configuration |
    /// | 3 | numerical breakdown or eigensolver failure |
    /// | 4 | file system |
    /// | 5 | malformed or inconsistent input data |
    /// | 6 | no usable eigengap |
    /// | 7 | time limit |
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParams(_) | Error::InvalidR { .. } | Error::Config { .. } => 2,
            Error::NumericalBreakdown { .. } | Error::NoConvergence { .. } => 3,
            Error::Io { .. } => 4,
            Error::Parse { .. }
            | Error::ShapeMismatch(_)
            | Error::AsymmetricInput { .. }
            | Error::NonIdentityDiagonal(_)
            | Error::NotSubstochastic { .. }
            | Error::NotBinary
            | Error::Inconsistent(_)
            | Error::EmptyGraph => 5,
            Error::DegenerateSpectrum => 6,
            Error::Timeout { .. } => 7,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
