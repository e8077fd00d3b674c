use thiserror::Error;

use crate::ncpoly::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("generator count mismatch: {left} vs {right}")]
    GeneratorMismatch { left: usize, right: usize },

    #[error("generator index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("degree {degree} exceeds truncation bound {bound}")]
    DegreeOverflow { degree: usize, bound: usize },

    #[error("invalid covariance model: {0}")]
    InvalidModel(String),

    #[error("conjugate variable {index} has degree {degree}; only linear conjugates preserve the truncated space")]
    NonLinearConjugate { index: usize, degree: usize },

    #[error("conjugate vector has {got} components, expected {expected}")]
    ConjugateLength { got: usize, expected: usize },

    #[error("potential is not self-adjoint")]
    NotSelfAdjoint,

    #[error("matrix is singular")]
    Singular,

    #[error("input vectors are rank deficient")]
    RankDeficient,

    #[error("matrix is not orthogonal (residual {0:e})")]
    NotOrthogonal(f64),

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("identity violated: {0}")]
    IdentityViolation(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
