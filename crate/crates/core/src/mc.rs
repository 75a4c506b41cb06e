//! Monte-Carlo (parametric bootstrap) portmanteau test.
//!
//! 1. Fit ARMA(p, q) to the series and compute the observed statistic.
//! 2. For replicates i = 1..N, simulate the fitted model at the same length
//!    on substream `(master_seed, i)`, refit, and recompute the statistic.
//! 3. Count the replicates whose statistic is `>=` the observed one (`k`);
//!    the p-value is `(k + 1)/(N + 1)`.
//!
//! A replicate whose refit or statistic fails is redrawn on a child
//! substream and counted in `failed_replicates`. Replicates run on the
//! current rayon pool; results do not depend on the number of threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{residual_acf, statistic, PortmanteauValue, StatisticKind};
use crate::error::{Error, Result};
use crate::estimation::{css_residuals, fit_arma, FitOptions, FittedModel};
use crate::generators::{simulate_arma, RngStream};
use crate::model::ArmaSpec;

/// How the null model is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullModel {
    /// Estimate by CSS on the observed series and on every replicate.
    Estimated,
    /// Known parameters: no estimation anywhere, residuals from the true model.
    Known(ArmaSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub p: usize,
    pub q: usize,
    /// Lags at which statistics are computed; all share the same replicates.
    pub m_values: Vec<usize>,
    pub kinds: Vec<StatisticKind>,
    pub replicates: usize,
    pub master_seed: u64,
    pub fit: FitOptions,
    pub null: NullModel,
}

impl McConfig {
    pub fn new(p: usize, q: usize, m: usize, replicates: usize, kind: StatisticKind, master_seed: u64) -> Self {
        Self {
            p,
            q,
            m_values: vec![m],
            kinds: vec![kind],
            replicates,
            master_seed,
            fit: FitOptions::default(),
            null: NullModel::Estimated,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("number of Monte-Carlo replicates N must be at least 1".into()));
        }
        if self.m_values.is_empty() || self.kinds.is_empty() {
            return Err(Error::InvalidArgument("at least one lag and one statistic are required".into()));
        }
        if let Some(&m) = self.m_values.iter().find(|&&m| m == 0 || m >= n) {
            return Err(Error::InvalidArgument(format!("lag m = {m} must satisfy 1 <= m < n = {n}")));
        }
        if let NullModel::Known(spec) = &self.null {
            spec.ensure_admissible()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McTestResult {
    pub observed: PortmanteauValue,
    pub replicates: usize,
    pub exceedances: usize,
    pub p_value: f64,
    pub failed_replicates: usize,
    pub kind: StatisticKind,
    pub master_seed: u64,
}

/// Results of one Monte-Carlo run, one entry per (kind, m) in config order
/// (kinds outer, lags inner).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub null_spec: ArmaSpec,
    pub observed_converged: bool,
    pub results: Vec<McTestResult>,
    pub failed_replicates: usize,
}

impl McReport {
    pub fn get(&self, kind: StatisticKind, m: usize) -> Option<&McTestResult> {
        self.results.iter().find(|r| r.kind == kind && r.observed.m == m)
    }
}

/// `#{replicates >= observed}`; ties count as exceedances.
pub fn count_exceedances(observed: f64, replicates: &[f64]) -> usize {
    replicates.iter().filter(|&&v| v >= observed).count()
}

/// `(k + 1)/(N + 1)`.
pub fn mc_p_value(exceedances: usize, replicates: usize) -> f64 {
    (exceedances + 1) as f64 / (replicates + 1) as f64
}

fn statistics_for(residuals: &[f64], config: &McConfig, fit_count: usize) -> Result<Vec<f64>> {
    let max_m = *config.m_values.iter().max().expect("validated");
    let full = residual_acf(residuals, max_m)?;
    let mut out = Vec::with_capacity(config.kinds.len() * config.m_values.len());
    for &kind in &config.kinds {
        for &m in &config.m_values {
            let acf = full.truncate(m)?;
            out.push(statistic(&acf, kind, fit_count)?.statistic);
        }
    }
    Ok(out)
}

fn residuals_under_null(series: &[f64], config: &McConfig) -> Result<(Vec<f64>, ArmaSpec, bool)> {
    match &config.null {
        NullModel::Estimated => {
            let FittedModel { spec, residuals, converged, .. } = fit_arma(series, config.p, config.q, &config.fit)?;
            Ok((residuals, spec, converged))
        }
        NullModel::Known(spec) => Ok((css_residuals(series, spec)?, spec.clone(), true)),
    }
}

fn replicate(
    config: &McConfig,
    null_spec: &ArmaSpec,
    n: usize,
    index: u64,
    fit_count: usize,
) -> (Option<Vec<f64>>, usize) {
    let base = RngStream::new(config.master_seed, index);
    let mut failures = 0;
    loop {
        let stream = if failures == 0 { base } else { base.child(failures as u64) };
        let attempt = simulate_arma(null_spec, n, stream).and_then(|x| {
            let (resid, _, converged) = residuals_under_null(&x, config)?;
            if !converged {
                return Err(Error::FitFailed("replicate refit did not converge".into()));
            }
            statistics_for(&resid, config, fit_count)
        });
        match attempt {
            Ok(stats) => return (Some(stats), failures),
            Err(_) => {
                failures += 1;
                if failures > config.replicates {
                    return (None, failures);
                }
            }
        }
    }
}

/// Runs the Monte-Carlo test for every (kind, m) in `config` on shared replicates.
pub fn mc_portmanteau(series: &[f64], config: &McConfig) -> Result<McReport> {
    let n = series.len();
    config.validate(n)?;
    let fit_count = config.p + config.q;
    let (resid, null_spec, observed_converged) = residuals_under_null(series, config)?;
    let observed = statistics_for(&resid, config, fit_count)?;

    let outcomes: Vec<(Option<Vec<f64>>, usize)> = (1..=config.replicates as u64)
        .into_par_iter()
        .map(|i| replicate(config, &null_spec, n, i, fit_count))
        .collect();

    let failed: usize = outcomes.iter().map(|o| o.1).sum();
    if failed > config.replicates || outcomes.iter().any(|o| o.0.is_none()) {
        return Err(Error::TooManyFailures { failures: failed, replicates: config.replicates });
    }

    let mut results = Vec::with_capacity(observed.len());
    let mut slot = 0;
    for &kind in &config.kinds {
        for &m in &config.m_values {
            let obs = observed[slot];
            let k = outcomes.iter().filter(|o| o.0.as_ref().expect("checked")[slot] >= obs).count();
            results.push(McTestResult {
                observed: PortmanteauValue { statistic: obs, kind, m, fit_count },
                replicates: config.replicates,
                exceedances: k,
                p_value: mc_p_value(k, config.replicates),
                failed_replicates: failed,
                kind,
                master_seed: config.master_seed,
            });
            slot += 1;
        }
    }
    Ok(McReport { null_spec, observed_converged, results, failed_replicates: failed })
}

/// Single-statistic Monte-Carlo test.
#[allow(clippy::too_many_arguments)]
pub fn mc_portmanteau_test(
    series: &[f64],
    p: usize,
    q: usize,
    m: usize,
    replicates: usize,
    kind: StatisticKind,
    master_seed: u64,
) -> Result<McTestResult> {
    let config = McConfig::new(p, q, m, replicates, kind, master_seed);
    let mut report = mc_portmanteau(series, &config)?;
    Ok(report.results.remove(0))
}

/// A series together with its test configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McJob {
    pub series: Vec<f64>,
    pub config: McConfig,
}

/// Runs many jobs; per-job errors are returned in place. `threads = 0` uses all cores.
pub fn mc_test_batch(jobs: &[McJob], threads: usize) -> Result<Vec<Result<McReport>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(|| jobs.par_iter().map(|job| mc_portmanteau(&job.series, &job.config)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_value_formula() {
        assert!((mc_p_value(4, 99) - 0.05).abs() < 1e-15);
        assert_eq!(mc_p_value(99, 99), 1.0);
        assert!((mc_p_value(0, 999) - 0.001).abs() < 1e-15);
    }

    #[test]
    fn ties_count_as_exceedances() {
        assert_eq!(count_exceedances(1.0, &[0.5, 1.0, 2.0]), 2);
        assert_eq!(count_exceedances(0.0, &[0.0, 0.0, 3.0]), 3);
    }

    #[test]
    fn zero_replicates_rejected() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).sin()).collect();
        let err = mc_portmanteau_test(&x, 1, 0, 5, 0, StatisticKind::DHat, 1).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn zero_observed_statistic_gives_unit_p_value() {
        // a series whose white-noise residual autocorrelations vanish at lags 1..2:
        // x = (1, 0, 0, -1, ...) pattern shifted to mean zero with exact orthogonality
        let mut x = vec![0.0; 60];
        x[0] = 1.0;
        x[30] = -1.0;
        let config = McConfig {
            m_values: vec![2],
            kinds: vec![StatisticKind::DHat, StatisticKind::LjungBox],
            ..McConfig::new(0, 0, 2, 19, StatisticKind::DHat, 3)
        };
        let report = mc_portmanteau(&x, &config).unwrap();
        for r in &report.results {
            assert!(r.observed.statistic.abs() < 1e-12);
            assert_eq!(r.exceedances, 19);
            assert_eq!(r.p_value, 1.0);
        }
    }

    #[test]
    fn invariants_of_result() {
        let x = simulate_arma(&ArmaSpec::ar1(0.4), 120, RngStream::new(8, 0)).unwrap();
        let r = mc_portmanteau_test(&x, 1, 0, 10, 39, StatisticKind::DHat, 17).unwrap();
        assert!(r.exceedances <= r.replicates);
        let scaled = r.p_value * (r.replicates + 1) as f64;
        assert!((scaled - scaled.round()).abs() < 1e-9);
        assert!(r.p_value >= 1.0 / 40.0 && r.p_value <= 1.0);
        let again = mc_portmanteau_test(&x, 1, 0, 10, 39, StatisticKind::DHat, 17).unwrap();
        assert_eq!(r, again);
    }
}
