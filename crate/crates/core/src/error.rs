use thiserror::Error;

/// Errors raised by the modelling, estimation and distribution routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model is not stationary and invertible (minimal root modulus {min_root_modulus:.6})")]
    NotAdmissible { min_root_modulus: f64 },

    #[error("series too short: {len} values, at least {required} required")]
    SeriesTooShort { len: usize, required: usize },

    #[error("series contains a non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("degenerate series: zero variance")]
    Degenerate,

    #[error("residual autocorrelation undefined: sum of squared residuals is zero")]
    ZeroResidualVariance,

    #[error("autocorrelation matrix is not positive definite (first failure at lag {lag})")]
    NotPositiveDefinite { lag: usize, leading_minor: f64 },

    #[error("chi-squared reference has {df} degrees of freedom (m = {m}, fitted parameters = {fit_count})")]
    NoDegreesOfFreedom { m: usize, fit_count: usize, df: i64 },

    #[error("regressor matrix is rank deficient ({detail})")]
    RankDeficient { detail: String },

    #[error("negative eigenvalue {value:e} beyond roundoff tolerance")]
    NegativeEigenvalue { value: f64 },

    #[error("all eigenvalues are zero; the quadratic form is degenerate")]
    DegenerateSpectrum,

    #[error("gamma approximation infeasible for m = {m}, p+q = {fit_count}; minimal feasible m is {min_m}")]
    GammaInfeasible { m: usize, fit_count: usize, min_m: usize },

    #[error("too many refit failures ({failures}) for {replicates} replicates")]
    TooManyFailures { failures: usize, replicates: usize },

    #[error("fit failed: {0}")]
    FitFailed(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
