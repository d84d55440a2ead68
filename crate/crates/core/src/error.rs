use thiserror::Error;

pub type Result<T> = std::result::Result<T, ArhError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArhError {
    #[error("invalid interval: a = {a}, b = {b}, step = {step}")]
    InvalidInterval { a: f64, b: f64, step: f64 },

    #[error("basis of {m} functions aliases on this grid: gram defect {defect:.3e} > tolerance {tolerance:.3e}")]
    Aliasing { m: usize, defect: f64, tolerance: f64 },

    #[error("curves live on different grids")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid scenario: {0}")]
    InvalidSpec(String),

    #[error("autocorrelation operator is not a contraction: norm {norm:.6} >= 1")]
    Instability { norm: f64 },

    #[error("innovation covariance is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("covariance eigenvalues are not strictly decreasing at index {index}")]
    Monotonicity { index: usize },

    #[error("sample size {0} is too small")]
    InvalidN(usize),

    #[error("component {component} has zero empirical energy")]
    ZeroEnergy { component: usize },

    #[error("eigendecomposition failed: {0}")]
    DecompositionFailure(String),

    #[error("truncation k_n = {k_n} too deep: eigenvalue {eigenvalue:.3e} is not positive")]
    TruncationTooDeep { k_n: usize, eigenvalue: f64 },

    #[error("signal length {0} is not a power of two")]
    NonDyadicLength(usize),

    #[error("rank deficiency: {0}")]
    RankDeficiency(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
