//! Conditional-sum-of-squares (CSS) fitting of ARMA(p, q) models.
//!
//! The mean is fixed at the sample mean. AR and MA coefficients are searched
//! through their partial autocorrelations, each mapped from the real line by
//! `tanh`, so every point visited by the optimizer is an admissible model.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::RngStream;
use crate::levinson::durbin_levinson;
use crate::model::{check_admissible, coefficients_from_partials, ArmaSpec};
use crate::optim::{nelder_mead, NelderMeadOptions};

/// Partial autocorrelations are kept inside `(-PARTIAL_LIMIT, PARTIAL_LIMIT)`.
const PARTIAL_LIMIT: f64 = 1.0 - 1e-7;
const START_PARTIAL_LIMIT: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Relative tolerance on the CSS objective.
    pub tolerance: f64,
    pub max_evaluations: usize,
    /// Perturbed restarts tried when the first search does not converge.
    pub restarts: usize,
    /// Seed for restart perturbations.
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_evaluations: 4000, restarts: 3, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ArmaSpec,
    pub residuals: Vec<f64>,
    pub css: f64,
    pub converged: bool,
    pub iterations: usize,
    pub n: usize,
}

/// CSS residuals `â_t = x_t - Σ φ_i x_{t-i} + Σ θ_j â_{t-j}` with `x = X - μ`
/// and zero presample values.
pub fn css_residuals(series: &[f64], spec: &ArmaSpec) -> Result<Vec<f64>> {
    spec.ensure_admissible()?;
    let k = spec.fit_count();
    if series.len() <= k {
        return Err(Error::SeriesTooShort { len: series.len(), required: k + 1 });
    }
    let x: Vec<f64> = series.iter().map(|v| v - spec.mean).collect();
    let mut resid = vec![0.0; x.len()];
    css_fill(&x, &spec.ar, &spec.ma, &mut resid);
    Ok(resid)
}

/// Writes residuals of the centred series into `resid` and returns their sum of squares.
fn css_fill(x: &[f64], ar: &[f64], ma: &[f64], resid: &mut [f64]) -> f64 {
    let mut ss = 0.0;
    for t in 0..x.len() {
        let mut a = x[t];
        for (i, phi) in ar.iter().enumerate() {
            if t > i {
                a -= phi * x[t - i - 1];
            }
        }
        for (j, theta) in ma.iter().enumerate() {
            if t > j {
                a += theta * resid[t - j - 1];
            }
        }
        resid[t] = a;
        ss += a * a;
    }
    ss
}

fn validate_series(series: &[f64], p: usize, q: usize) -> Result<()> {
    let required = 30.max(5 * (p + q));
    if series.len() < required {
        return Err(Error::SeriesTooShort { len: series.len(), required });
    }
    if let Some(index) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let first = series[0];
    if series.iter().all(|&v| v == first) {
        return Err(Error::Degenerate);
    }
    Ok(())
}

fn to_free(partial: f64) -> f64 {
    (partial / PARTIAL_LIMIT).clamp(-0.999_999, 0.999_999).atanh()
}

fn to_partials(free: &[f64]) -> Vec<f64> {
    free.iter().map(|u| PARTIAL_LIMIT * u.tanh()).collect()
}

/// Yule-Walker partial autocorrelations of the centred series, clamped for use as a start.
fn moment_start(x: &[f64], p: usize) -> Vec<f64> {
    if p == 0 {
        return Vec::new();
    }
    let n = x.len();
    let c0: f64 = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let mut acvf = vec![c0];
    for k in 1..=p {
        acvf.push(x[k..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / n as f64);
    }
    match durbin_levinson(&acvf) {
        Ok(lev) => lev.partials.iter().map(|v| v.clamp(-START_PARTIAL_LIMIT, START_PARTIAL_LIMIT)).collect(),
        Err(_) => vec![0.0; p],
    }
}

/// Fits ARMA(p, q) by minimizing the conditional sum of squares.
///
/// Non-convergence after the restarts is not an error: the best point is
/// returned with `converged = false`.
pub fn fit_arma(series: &[f64], p: usize, q: usize, options: &FitOptions) -> Result<FittedModel> {
    validate_series(series, p, q)?;
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let mut scratch = vec![0.0; n];

    if p + q == 0 {
        let css: f64 = x.iter().map(|v| v * v).sum();
        let spec = ArmaSpec::new(Vec::new(), Vec::new(), css / n as f64, mean)?;
        return Ok(FittedModel { spec, residuals: x, css, converged: true, iterations: 0, n });
    }

    let mut objective = |free: &[f64]| {
        let partials = to_partials(free);
        let ar = coefficients_from_partials(&partials[..p]);
        let ma = coefficients_from_partials(&partials[p..]);
        css_fill(&x, &ar, &ma, &mut scratch)
    };

    let mut start: Vec<f64> = moment_start(&x, p).into_iter().map(to_free).collect();
    start.extend(std::iter::repeat_n(0.0, q));

    let nm =
        NelderMeadOptions { ftol: options.tolerance, max_evaluations: options.max_evaluations, ..Default::default() };
    let mut best = nelder_mead(&mut objective, &start, &nm);
    let mut iterations = best.iterations;
    if best.converged && p + q > 1 {
        // fresh simplex around the optimum guards against a collapsed simplex
        let polish = nelder_mead(&mut objective, &best.x, &NelderMeadOptions { initial_step: 0.05, ..nm });
        iterations += polish.iterations;
        if polish.value <= best.value {
            best = polish;
        }
    }

    if !best.converged && options.restarts > 0 {
        let mut rng = RngStream::new(options.seed, 0).rng();
        let jitter = Normal::new(0.0, 0.5).expect("valid normal");
        for _ in 0..options.restarts {
            let perturbed: Vec<f64> = start.iter().map(|s| s + jitter.sample(&mut rng)).collect();
            let attempt = nelder_mead(&mut objective, &perturbed, &nm);
            iterations += attempt.iterations;
            let better =
                attempt.value < best.value || (attempt.converged && attempt.value <= best.value * (1.0 + 1e-6));
            if better {
                best = attempt;
            }
            if best.converged {
                break;
            }
        }
    }

    let mut partials = to_partials(&best.x);
    let mut spec = ArmaSpec::new(
        coefficients_from_partials(&partials[..p]),
        coefficients_from_partials(&partials[p..]),
        1.0,
        mean,
    )?;
    while !check_admissible(&spec) {
        for v in partials.iter_mut() {
            *v *= 0.999;
        }
        spec.ar = coefficients_from_partials(&partials[..p]);
        spec.ma = coefficients_from_partials(&partials[p..]);
    }

    let mut residuals = vec![0.0; n];
    let css = css_fill(&x, &spec.ar, &spec.ma, &mut residuals);
    if !css.is_finite() {
        return Err(Error::FitFailed("objective is not finite at the optimum".into()));
    }
    spec.sigma2 = (css / n as f64).max(f64::MIN_POSITIVE);
    Ok(FittedModel { spec, residuals, css, converged: best.converged, iterations, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::simulate_arma;

    #[test]
    fn css_residual_examples() {
        let wn = ArmaSpec::new(vec![], vec![], 1.0, 2.0).unwrap();
        assert_eq!(css_residuals(&[1.0, 2.0, 3.0], &wn).unwrap(), vec![-1.0, 0.0, 1.0]);

        let ar = ArmaSpec::ar1(0.5);
        assert_eq!(css_residuals(&[1.0, 2.0, 3.0], &ar).unwrap(), vec![1.0, 1.5, 2.0]);

        let ma = ArmaSpec::new(vec![], vec![0.5], 1.0, 0.0).unwrap();
        assert_eq!(css_residuals(&[1.0, 0.0, 0.0], &ma).unwrap(), vec![1.0, 0.5, 0.25]);
    }

    #[test]
    fn css_residuals_preconditions() {
        let ar = ArmaSpec::new(vec![0.5, 0.1], vec![0.2], 1.0, 0.0).unwrap();
        assert!(matches!(css_residuals(&[1.0, 2.0, 3.0], &ar), Err(Error::SeriesTooShort { .. })));
        assert!(css_residuals(&[1.0, 2.0], &ArmaSpec::ar1(1.5)).is_err());
    }

    #[test]
    fn white_noise_fit() {
        let series: Vec<f64> = (0..40).map(|i| ((i * 7919) % 31) as f64).collect();
        let fit = fit_arma(&series, 0, 0, &FitOptions::default()).unwrap();
        let mean = series.iter().sum::<f64>() / 40.0;
        let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 40.0;
        assert!(fit.spec.ar.is_empty() && fit.spec.ma.is_empty());
        assert!((fit.spec.sigma2 - var).abs() < 1e-12);
        assert!((fit.spec.mean - mean).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_short_series_rejected() {
        assert_eq!(fit_arma(&[3.0; 50], 1, 0, &FitOptions::default()).unwrap_err(), Error::Degenerate);
        assert!(matches!(fit_arma(&[1.0; 10], 1, 0, &FitOptions::default()), Err(Error::SeriesTooShort { .. })));
        let mut s: Vec<f64> = (0..40).map(|i| i as f64).collect();
        s[3] = f64::NAN;
        assert_eq!(fit_arma(&s, 1, 0, &FitOptions::default()).unwrap_err(), Error::NonFinite { index: 3 });
    }

    #[test]
    fn ar1_estimate_within_three_standard_errors() {
        let n = 2000;
        let x = simulate_arma(&ArmaSpec::ar1(0.7), n, RngStream::new(101, 0)).unwrap();
        let fit = fit_arma(&x, 1, 0, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        let bound = 3.0 * ((1.0 - 0.49) / n as f64).sqrt();
        assert!((fit.spec.ar[0] - 0.7).abs() < bound, "phi = {}", fit.spec.ar[0]);
        assert!((bound - 0.0479).abs() < 1e-3);
        assert_eq!(fit.residuals.len(), n);
        assert!(fit.spec.is_admissible());
    }

    #[test]
    fn arma11_fit_recovers_parameters() {
        let spec = ArmaSpec::new(vec![0.6], vec![-0.4], 1.0, 5.0).unwrap();
        let x = simulate_arma(&spec, 3000, RngStream::new(202, 1)).unwrap();
        let fit = fit_arma(&x, 1, 1, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.spec.ar[0] - 0.6).abs() < 0.08, "{:?}", fit.spec);
        assert!((fit.spec.ma[0] + 0.4).abs() < 0.08, "{:?}", fit.spec);
        assert!((fit.spec.sigma2 - 1.0).abs() < 0.1);
    }

    #[test]
    fn fitted_css_matches_residuals() {
        let spec = ArmaSpec::new(vec![0.5, -0.3], vec![0.3], 1.0, 0.0).unwrap();
        let x = simulate_arma(&spec, 500, RngStream::new(3, 3)).unwrap();
        let fit = fit_arma(&x, 2, 1, &FitOptions::default()).unwrap();
        let resid = css_residuals(&x, &fit.spec).unwrap();
        let ss: f64 = resid.iter().map(|a| a * a).sum();
        assert!((ss - fit.css).abs() < 1e-9 * fit.css);
        assert!((fit.spec.sigma2 - fit.css / 500.0).abs() < 1e-12);
    }
}
