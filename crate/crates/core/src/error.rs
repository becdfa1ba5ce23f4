use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("subset index {index} is out of range for a ground set of size {n}")]
    InvalidSubset { index: usize, n: usize },

    #[error("{what}: ground set of size {n} exceeds the enumeration limit of {limit}")]
    EnumerationLimit {
        what: &'static str,
        n: usize,
        limit: usize,
    },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid value for {field}: {reason}")]
    InvalidValue { field: &'static str, reason: String },

    #[error("vector is not a member of the polyhedron")]
    NotAMember,

    #[error("vector is not a base of the polyhedron")]
    NotABase,

    #[error("tight-set lattice violated: {0}")]
    LatticeViolation(String),

    #[error("solver did not converge after {iterations} iterations (best gap {gap:e})")]
    SolverFailure {
        iterations: usize,
        gap: f64,
        best: Vec<f64>,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidValue {
            field,
            reason: reason.into(),
        }
    }
}
