//! Generalized-variance portmanteau diagnostics for fitted ARMA models.
//!
//! The crate provides
//!
//! * ARMA specification, admissibility checks and ψ-weights ([`model`]),
//! * Gaussian simulation of ARMA, GARCH and fractional noise on
//!   reproducible random substreams ([`generators`]),
//! * conditional-sum-of-squares estimation ([`estimation`]),
//! * residual autocorrelations and the Ljung-Box, Box-Pierce, D̂_m and
//!   D_m statistics ([`diagnostics`]),
//! * the asymptotic null distribution of D̂_m, evaluated by Imhof's
//!   method, and its gamma approximation ([`asymptotic`]),
//! * the Monte-Carlo test with p-value `(k+1)/(N+1)` ([`mc`]).
//!
//! MA coefficients follow the minus-sign convention
//! `(1 - φ1 B - ...)X_t = (1 - θ1 B - ...)a_t` throughout.

pub mod asymptotic;
pub mod diagnostics;
pub mod error;
pub mod estimation;
pub mod generators;
pub mod imhof;
pub mod levinson;
pub mod mc;
pub mod model;
mod optim;
pub mod quadrature;

pub use asymptotic::{
    gamma_distortion, gamma_params, gamma_tail, imhof_cdf, lambda_spectrum, CovarianceForm, EigenSpectrum, GammaApprox,
};
pub use diagnostics::{
    box_pierce, d_hat, d_mod, ljung_box, residual_acf, toeplitz_corr_det, PortmanteauValue, ResidualAcf, StatisticKind,
};
pub use error::{Error, Result};
pub use estimation::{css_residuals, fit_arma, FitOptions, FittedModel};
pub use generators::{
    fn_autocorrelation, simulate_arma, simulate_fractional_noise, simulate_garch, FractionalNoiseSpec, GarchSpec,
    RngStream,
};
pub use mc::{mc_portmanteau, mc_portmanteau_test, mc_test_batch, McConfig, McJob, McReport, McTestResult, NullModel};
pub use model::{check_admissible, psi_weights_reciprocal, theoretical_acvf, ArmaSpec};
