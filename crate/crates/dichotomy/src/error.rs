use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DichotomyError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix has {entries} entries, expected {dim}x{dim}")]
    BadShape { dim: usize, entries: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("operator is not positive semidefinite (eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("trace {0} is not 1")]
    BadTrace(f64),

    #[error("second state must have full rank (smallest eigenvalue {0:e})")]
    NotFullRank(f64),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("quantity undefined: {0}")]
    Undefined(String),

    #[error("oracle inconsistency: {0}")]
    OracleInconsistency(String),
}

pub type Result<T> = std::result::Result<T, DichotomyError>;
