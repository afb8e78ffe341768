use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("medium violates q > -1 at x = {x}: q = {q}")]
    MediumBelowMinusOne { x: f64, q: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is singular to working precision at pivot {pivot}")]
    SingularMatrix { pivot: usize },

    #[error("linear solve missed its residual contract: relative residual {relative_residual:e}")]
    InaccurateSolve { relative_residual: f64 },

    #[error("eigenvalue iteration failed to converge after {sweeps} QR sweeps ({remaining} eigenvalues undeflated)")]
    EigenNoConvergence { sweeps: usize, remaining: usize },

    #[error("matrix dimension {n} exceeds eigensolver cap {cap}")]
    EigenCapExceeded { n: usize, cap: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("bound not applicable: {0}")]
    NotApplicable(String),

    #[error("degenerate preconditioner parameters: {0}")]
    DegenerateParameters(String),

    #[error("angle wrap: Re(e^(i alpha)(1 - omega)) = {re} <= 0 at t = {t}; alpha too small for this locus")]
    AngleWrap { re: f64, t: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of a numerical algorithm (as opposed to rejected inputs).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularMatrix { .. }
                | Error::InaccurateSolve { .. }
                | Error::EigenNoConvergence { .. }
                | Error::NonFinite(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
