use thiserror::Error;

/// Errors surfaced by assembly, setup, and solve routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid matrix structure: {0}")]
    InvalidStructure(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero or missing diagonal at row {0}")]
    ZeroDiagonal(usize),

    #[error("insufficient nonzero test vectors: kept {kept} of {requested}")]
    InsufficientTestVectors { kept: usize, requested: usize },

    #[error("non-positive Rayleigh quotient ({value:.3e}) for test vector {index}; matrix is not SPD")]
    NonPositiveRayleigh { index: usize, value: f64 },

    #[error("initial iterate vanishes on the F-points")]
    ZeroInitialIterate,

    #[error("compatible relaxation stalled: rho_f={rho_f:.3} > delta={delta:.3} after {rounds} rounds")]
    CoarseningStalled { rho_f: f64, delta: f64, rounds: usize },

    #[error("empty coarse neighborhood for F-point {point} at depth {depth}")]
    EmptyCoarseNeighborhood { point: usize, depth: usize },

    #[error("all candidate interpolatory sets degenerate for F-point {0}")]
    DegenerateInterpolatorySet(usize),

    #[error("degenerate least-squares system: {0}")]
    DegenerateLeastSquares(String),

    #[error("coarse matrix of size {0} too large for a dense direct solve")]
    CoarseTooLarge(usize),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("iteration diverged: {0}")]
    Diverged(String),

    #[error("did not reach tolerance {tol:.1e} in {iterations} iterations (relative residual {residual:.3e})")]
    MaxIterations {
        iterations: usize,
        tol: f64,
        residual: f64,
    },

    #[error("matrix market parse error: {0}")]
    MatrixMarket(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
