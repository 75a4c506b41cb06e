//! Simulation studies for the generalized-variance portmanteau test: gamma
//! distortion grids, convergence to the asymptotic law, Monte-Carlo test size,
//! and power against GARCH, fractional-noise and ARMA alternatives.
//!
//! A study is described by a [`StudyConfig`] (TOML) and produces a
//! [`StudyReport`], written as CSV plus a JSON mirror.

pub mod config;
pub mod report;
mod runner;

pub use config::{Ar2Sweep, Arma11Grid, FittedOrder, ModelSpec, StudyConfig, StudyKind, QQ_PROBABILITIES};
pub use report::{binomial_stderr, Cell, Metadata, OutputPaths, QqSeries, StudyReport, SweepPoint};
pub use runner::{
    empirical_quantile, run_convergence_study, run_gamma_distortion_study, run_power_study, run_size_study, run_study,
    RunOptions,
};

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Numerical(#[from] gvport::Error),
}
