//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model validation, solvers and estimators.
#[derive(Debug, Error)]
pub enum Error {
    /// A user-supplied parameter is outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A configuration file or CLI argument failed validation.
    #[error("config error: {0}")]
    Config(String),

    /// Continuous covariate whose marginal variance cannot absorb the
    /// genotype-induced variance (sigma_E^2 <= gamma_G^2 * Var(G)).
    #[error("covariate '{name}': infeasible variance; sigma_E^2 = {sigma_sq} must exceed gamma_G^2 * Var(G) = {explained}")]
    InfeasibleVariance {
        name: String,
        sigma_sq: f64,
        explained: f64,
    },

    /// Root finder could not bracket or converge on a sign change.
    #[error("root finding failed: {0}")]
    RootFinding(String),

    /// Design matrix is rank deficient.
    #[error("singular design matrix (collinear columns)")]
    SingularDesign,

    /// A symmetric matrix was not positive definite when a factorization
    /// was required.
    #[error("matrix is not positive definite")]
    SingularMatrix,

    /// Wald test requested on a fit that did not converge.
    #[error("fit did not converge; no covariance available")]
    NotConverged,

    /// Dataset has only one outcome class.
    #[error("degenerate dataset: needs at least one row with y=0 and one with y=1")]
    DegenerateOutcome,

    /// Monte Carlo information estimate could not be inverted.
    #[error("degenerate Monte Carlo information estimate; increase B (currently {b})")]
    DegenerateSample { b: u64 },

    /// Observed covariates are collinear (e.g. constant genotype column).
    #[error("collinear observed covariates: {0}")]
    Collinear(String),

    /// Operation not supported for this covariate space.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An internal cross-check failed; indicates a construction bug.
    #[error("internal consistency check failed: {0}")]
    InternalCheck(String),

    /// Requested power is unattainable (e.g. beta_G = 0).
    #[error("unattainable power: {0}")]
    Unattainable(String),

    /// Sample size search exceeded the configured cap.
    #[error("required sample size exceeds cap of {cap}")]
    SampleSizeCapped { cap: u64 },

    /// Case/control quotas could not be filled by rejection sampling.
    #[error("case-control quotas unreachable after {draws} draws")]
    QuotaUnreachable { draws: u64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
