use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch or invalid dimension: {0}")]
    Dimension(String),

    #[error("signature parity violation: {0}")]
    Parity(String),

    #[error("tensor is not in the constrained space (membership residual {residual:.3e})")]
    NotInHSpace { residual: f64 },

    #[error("tensor is not in U3 (residual {residual:.3e})")]
    NotInU3 { residual: f64 },

    #[error("endomorphism-valued one-form is not skew-adjoint (residual {residual:.3e})")]
    NotSkewAdjoint { residual: f64 },

    #[error("endomorphism-valued one-form does not commute with J0 (residual {residual:.3e})")]
    NotCommuting { residual: f64 },

    #[error("malformed invariant string: {0}")]
    MalformedString(String),

    #[error("reconstruction residual {residual:.3e} exceeds tolerance budget")]
    Tolerance { residual: f64 },

    #[error("least-squares system is rank deficient for this target (residual {residual:.3e})")]
    RankDeficient { residual: f64 },

    #[error("point outside chart domain: {0}")]
    Domain(String),

    #[error("metric is singular at the sampled point (|det| = {det:.3e})")]
    SingularMetric { det: f64 },

    #[error("chart kinds do not match")]
    KindMismatch,

    #[error("realization did not converge: achieved error {error:.3e} exceeds {threshold:.3e}")]
    Convergence { error: f64, threshold: f64 },

    #[error("invalid job specification: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;
