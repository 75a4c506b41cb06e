//! `gvport test`: portmanteau diagnostics for a fitted ARMA model.

use std::fmt::Write as _;

use gvport::asymptotic::{asymptotic_p_value, gamma_distortion, gamma_params, gamma_tail, lambda_spectrum};
use gvport::diagnostics::{chi_squared_upper_tail, d_hat, ljung_box, residual_acf};
use gvport::{fit_arma, mc_portmanteau, CovarianceForm, FitOptions, McConfig, NullModel, StatisticKind};
use serde::{Deserialize, Serialize};

pub const DEFAULT_LAGS: [usize; 6] = [5, 10, 20, 30, 40, 50];
pub const DEFAULT_REPLICATES: usize = 999;
/// Series length from which the gamma approximation's asymptotic bias dominates.
pub const GAMMA_WARNING_N: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct TestOptions {
    pub p: usize,
    pub q: usize,
    pub lags: Vec<usize>,
    pub replicates: usize,
    pub statistic: StatisticKind,
    pub seed: u64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedSummary {
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sigma2: f64,
    pub mean: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquaredResult {
    pub statistic: f64,
    pub df: i64,
    pub p_value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DHatResult {
    pub statistic: Option<f64>,
    pub asymptotic_p_value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub statistic: StatisticKind,
    pub observed: Option<f64>,
    pub exceedances: Option<usize>,
    pub p_value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaResult {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub p_value: Option<f64>,
    /// True asymptotic size of the nominal 5% gamma test under the fitted model.
    pub size_at_nominal_5pct: Option<f64>,
    pub warning: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagResult {
    pub m: usize,
    pub ljung_box: ChiSquaredResult,
    pub d_hat: DHatResult,
    pub monte_carlo: McResult,
    pub gamma: GammaResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub replicates: usize,
    pub seed: u64,
    pub fitted: FittedSummary,
    pub failed_replicates: usize,
    pub lags: Vec<LagResult>,
    pub warnings: Vec<String>,
}

fn split<T>(r: gvport::Result<T>) -> (Option<T>, Option<String>) {
    match r {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

pub fn run_test(series: &[f64], opts: &TestOptions) -> gvport::Result<TestReport> {
    let n = series.len();
    if opts.lags.is_empty() {
        return Err(gvport::Error::InvalidArgument("at least one lag m is required".into()));
    }
    if let Some(&m) = opts.lags.iter().find(|&&m| m == 0 || m >= n) {
        return Err(gvport::Error::InvalidArgument(format!("lag m = {m} must satisfy 1 <= m < n = {n}")));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| gvport::Error::InvalidArgument(format!("thread pool: {e}")))?;
    let k = opts.p + opts.q;
    let fit = fit_arma(series, opts.p, opts.q, &FitOptions::default())?;
    let max_m = *opts.lags.iter().max().expect("nonempty");
    let acf = residual_acf(&fit.residuals, max_m)?;

    let mut warnings = Vec::new();
    if !fit.converged {
        warnings.push("parameter search did not converge; results use the best point found".to_string());
    }

    let mc_config = McConfig {
        p: opts.p,
        q: opts.q,
        m_values: opts.lags.clone(),
        kinds: vec![opts.statistic],
        replicates: opts.replicates,
        master_seed: opts.seed,
        fit: FitOptions::default(),
        null: NullModel::Estimated,
    };
    let mc = pool.install(|| mc_portmanteau(series, &mc_config));
    let failed_replicates = mc.as_ref().map(|r| r.failed_replicates).unwrap_or(0);
    if failed_replicates > 0 {
        warnings.push(format!("{failed_replicates} Monte-Carlo replicates failed and were redrawn"));
    }

    let mut lags = Vec::with_capacity(opts.lags.len());
    for &m in &opts.lags {
        let a = acf.truncate(m)?;
        let lb = ljung_box(&a, k);
        let (p_value, error) = split(chi_squared_upper_tail(lb.statistic, m, k));
        let ljung_box = ChiSquaredResult { statistic: lb.statistic, df: m as i64 - k as i64, p_value, error };

        let d = d_hat(&a, k);
        let d_hat = match &d {
            Ok(v) => {
                let (p, err) = split(
                    lambda_spectrum(&fit.spec, m, CovarianceForm::Information)
                        .and_then(|s| asymptotic_p_value(v.statistic, &s)),
                );
                DHatResult { statistic: Some(v.statistic), asymptotic_p_value: p, error: err }
            }
            Err(e) => DHatResult { statistic: None, asymptotic_p_value: None, error: Some(e.to_string()) },
        };

        let monte_carlo = match &mc {
            Ok(report) => {
                let r = report.get(opts.statistic, m).expect("requested lag");
                McResult {
                    statistic: opts.statistic,
                    observed: Some(r.observed.statistic),
                    exceedances: Some(r.exceedances),
                    p_value: Some(r.p_value),
                    error: None,
                }
            }
            Err(e) => McResult {
                statistic: opts.statistic,
                observed: None,
                exceedances: None,
                p_value: None,
                error: Some(e.to_string()),
            },
        };

        let gamma = match (gamma_params(m, k), &d) {
            (Ok(g), Ok(v)) => {
                let size = gamma_distortion(&fit.spec, m, 0.05, CovarianceForm::Information).ok();
                let mut warning = String::from("gamma p-values are not conservative");
                if let Some(s) = size {
                    let _ = write!(
                        warning,
                        "; the nominal 5% gamma test has asymptotic size {s:.3} under the fitted model"
                    );
                }
                if n >= GAMMA_WARNING_N {
                    warning.push_str("; at this series length prefer the Monte-Carlo p-value");
                }
                GammaResult {
                    alpha: Some(g.alpha),
                    beta: Some(g.beta),
                    p_value: Some(gamma_tail(v.statistic, &g)),
                    size_at_nominal_5pct: size,
                    warning: Some(warning),
                    error: None,
                }
            }
            (Err(e), _) => GammaResult {
                alpha: None,
                beta: None,
                p_value: None,
                size_at_nominal_5pct: None,
                warning: None,
                error: Some(e.to_string()),
            },
            (_, Err(e)) => GammaResult {
                alpha: None,
                beta: None,
                p_value: None,
                size_at_nominal_5pct: None,
                warning: None,
                error: Some(e.to_string()),
            },
        };
        lags.push(LagResult { m, ljung_box, d_hat, monte_carlo, gamma });
    }

    Ok(TestReport {
        n,
        p: opts.p,
        q: opts.q,
        replicates: opts.replicates,
        seed: opts.seed,
        fitted: FittedSummary {
            ar: fit.spec.ar.clone(),
            ma: fit.spec.ma.clone(),
            sigma2: fit.spec.sigma2,
            mean: fit.spec.mean,
            converged: fit.converged,
        },
        failed_replicates,
        lags,
        warnings,
    })
}

fn num(v: Option<f64>, width: usize, digits: usize) -> String {
    match v {
        Some(x) => format!("{x:>width$.digits$}"),
        None => format!("{:>width$}", "-"),
    }
}

fn coefs(v: &[f64]) -> String {
    v.iter().map(|c| format!("{c:.4}")).collect::<Vec<_>>().join(", ")
}

impl TestReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let f = &self.fitted;
        let _ = writeln!(
            s,
            "ARMA({}, {}) fit to n = {}: ar = [{}], ma = [{}], sigma2 = {:.5}, mean = {:.5}{}",
            self.p,
            self.q,
            self.n,
            coefs(&f.ar),
            coefs(&f.ma),
            f.sigma2,
            f.mean,
            if f.converged { "" } else { " (not converged)" }
        );
        let label = self.lags.first().map(|l| l.monte_carlo.statistic.label()).unwrap_or("d_hat");
        let _ = writeln!(s, "Monte-Carlo test: N = {}, statistic {label}, seed {}", self.replicates, self.seed);
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:>4} {:>10} {:>9} {:>10} {:>9} {:>9} {:>9}",
            "m", "Q_m", "p(chi2)", "D_hat", "p(Imhof)", "p(MC)", "p(gamma)"
        );
        for l in &self.lags {
            let _ = writeln!(
                s,
                "{:>4} {} {} {} {} {} {}",
                l.m,
                num(Some(l.ljung_box.statistic), 10, 4),
                num(l.ljung_box.p_value, 9, 4),
                num(l.d_hat.statistic, 10, 4),
                num(l.d_hat.asymptotic_p_value, 9, 4),
                num(l.monte_carlo.p_value, 9, 4),
                num(l.gamma.p_value, 9, 4),
            );
        }
        let mut notes: Vec<String> = Vec::new();
        for l in &self.lags {
            for (what, err) in [
                ("chi-squared", &l.ljung_box.error),
                ("D_hat", &l.d_hat.error),
                ("Monte-Carlo", &l.monte_carlo.error),
                ("gamma", &l.gamma.error),
            ] {
                if let Some(e) = err {
                    notes.push(format!("m = {}: {what}: {e}", l.m));
                }
            }
            if let Some(w) = &l.gamma.warning {
                notes.push(format!("m = {}: {w}", l.m));
            }
        }
        notes.extend(self.warnings.iter().cloned());
        if !notes.is_empty() {
            let _ = writeln!(s);
            for n in notes {
                let _ = writeln!(s, "note: {n}");
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
