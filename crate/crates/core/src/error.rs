use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatError {
    #[error("matrix is not hyperbolic (|trace| = {trace} <= 2)")]
    NonHyperbolic { trace: i64 },
    #[error("trace {trace} < -2: the matrix has no real logarithm")]
    NegativeSpectrum { trace: i64 },
    #[error("matrix determinant is {det}, expected 1")]
    NotUnimodular { det: i64 },
    #[error("h must be positive, got {0}")]
    NonPositiveH(f64),
    #[error("states carry different h ({0} vs {1})")]
    MismatchedH(f64, f64),
    #[error("N = {0} must be a positive even integer with h = 1/N")]
    OddN(i64),
    #[error("upper-left matrix coefficient vanishes; the kernel formula is undefined")]
    ZeroACoefficient,
    #[error("quadrature did not reach tolerance {tol:e} (last change {delta:e})")]
    QuadratureNonConvergence { tol: f64, delta: f64 },
    #[error("lattice truncation needs {needed} terms, cap is {cap}")]
    TruncationOverflow { needed: u64, cap: u64 },
    #[error("N = {0} is not a perfect square")]
    NotPerfectSquare(i64),
    #[error("n = {n} is below the validity threshold {threshold:.4}")]
    ThresholdViolation { n: u32, threshold: f64 },
    #[error("Schur iteration on a {dim}x{dim} matrix did not converge in {max_iter} sweeps")]
    EigenNonConvergence { dim: usize, max_iter: usize },
    #[error("shape parameter has non-positive imaginary part {0}")]
    NotNormalizable(f64),
}

pub type Result<T> = std::result::Result<T, CatError>;
