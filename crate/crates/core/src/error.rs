use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular: pivot {pivot:e} in column {column}")]
    SingularMatrix { column: usize, pivot: f64 },
    #[error("matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid dimension: {0}")]
    InvalidDimension(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("empty input")]
    EmptyInput,
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
