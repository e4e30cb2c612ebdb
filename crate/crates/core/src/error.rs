use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: max |M - M^dagger| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("Hermitian eigensolver did not converge")]
    NoConvergence,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cannot normalize a vector of norm {norm:e}")]
    ZeroVector { norm: f64 },

    #[error("non-finite value produced by {context}")]
    NonFinite { context: &'static str },

    #[error("truncation dimension {dim} is too small (minimum {min})")]
    InvalidDimension { dim: usize, min: usize },

    #[error("Fock index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("guard band violated: |alpha|^2 = {alpha_sq} exceeds N/8 = {limit} (N = {dim})")]
    GuardBand {
        alpha_sq: f64,
        limit: f64,
        dim: usize,
    },

    #[error("{} grid point(s) exceed the guard band |alpha|^2 <= {limit} (N = {dim})", points.len())]
    GridGuard {
        points: Vec<(f64, f64)>,
        limit: f64,
        dim: usize,
    },

    #[error("truncation unsafe: population {population:e} in top quarter of the Fock basis exceeds {tolerance:e}")]
    Truncation { population: f64, tolerance: f64 },

    #[error("measurement outcome impossible: probability {probability:e}")]
    ImpossibleOutcome { probability: f64 },

    #[error(
        "displacement sign could not be resolved (residuals: +1 -> {plus:e}, -1 -> {minus:e})"
    )]
    SignResolution { plus: f64, minus: f64 },

    #[error("population outside the qubit span {leak:e} exceeds {tolerance:e}")]
    Leakage { leak: f64, tolerance: f64 },

    #[error("closed-form qubit amplitudes disagree with pipeline by {deviation:e}")]
    ClosedFormMismatch { deviation: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// True for failures of a numerical guard (truncation, probability,
    /// leakage) as opposed to bad input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::GuardBand { .. }
                | Error::GridGuard { .. }
                | Error::Truncation { .. }
                | Error::ImpossibleOutcome { .. }
                | Error::SignResolution { .. }
                | Error::Leakage { .. }
                | Error::ClosedFormMismatch { .. }
                | Error::NoConvergence
                | Error::NonFinite { .. }
        )
    }
}
