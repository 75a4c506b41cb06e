use std::time::Instant;

use gvport::asymptotic::{asymptotic_quantile, gamma_distortion, gamma_params, gamma_tail, imhof_cdf, lambda_spectrum};
use gvport::diagnostics::{d_hat, residual_acf};
use gvport::generators::{simulate_fractional_noise, simulate_garch, FractionalNoiseSpec, GarchSpec};
use gvport::{
    fit_arma, mc_portmanteau, simulate_arma, ArmaSpec, FitOptions, McConfig, McReport, NullModel, RngStream,
    StatisticKind,
};
use rayon::prelude::*;

use crate::config::{ModelSpec, StudyConfig, StudyKind};
use crate::report::{binomial_stderr, Cell, Metadata, QqSeries, StudyReport, SweepPoint};
use crate::StudyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Overrides the config's thread count when set; 0 uses all cores.
    pub threads: Option<usize>,
    /// Divisor applied to R and N.
    pub scale: usize,
    /// Print one line per finished cell to standard error.
    pub progress: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { threads: None, scale: 1, progress: false }
    }
}

/// Runs the study named in `config.study`.
pub fn run_study(config: &StudyConfig, opts: &RunOptions) -> Result<StudyReport, StudyError> {
    config.validate()?;
    let threads = opts.threads.unwrap_or(config.threads);
    let scaled = config.scaled(opts.scale);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| StudyError::Io(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let mut report = pool.install(|| match scaled.study {
        StudyKind::GammaDistortion => gamma_study(&scaled, opts),
        StudyKind::Convergence => convergence_study(&scaled, opts),
        StudyKind::Size | StudyKind::Power => mc_study(&scaled, opts),
    })?;
    report.metadata = Metadata {
        study: scaled.study.label().to_string(),
        name: scaled.name.clone(),
        master_seed: scaled.master_seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads,
        scale: opts.scale.max(1),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        config: scaled,
    };
    Ok(report)
}

fn expect_kind(config: &StudyConfig, kind: StudyKind, opts: &RunOptions) -> Result<StudyReport, StudyError> {
    if config.study != kind {
        return Err(StudyError::Config {
            path: "study".into(),
            message: format!("expected a {} study, found {}", kind.label(), config.study.label()),
        });
    }
    run_study(config, opts)
}

pub fn run_gamma_distortion_study(config: &StudyConfig, opts: &RunOptions) -> Result<StudyReport, StudyError> {
    expect_kind(config, StudyKind::GammaDistortion, opts)
}

pub fn run_convergence_study(config: &StudyConfig, opts: &RunOptions) -> Result<StudyReport, StudyError> {
    expect_kind(config, StudyKind::Convergence, opts)
}

pub fn run_size_study(config: &StudyConfig, opts: &RunOptions) -> Result<StudyReport, StudyError> {
    expect_kind(config, StudyKind::Size, opts)
}

pub fn run_power_study(config: &StudyConfig, opts: &RunOptions) -> Result<StudyReport, StudyError> {
    expect_kind(config, StudyKind::Power, opts)
}

fn empty_report(config: &StudyConfig) -> StudyReport {
    StudyReport {
        cells: Vec::new(),
        sweep: Vec::new(),
        qq: Vec::new(),
        warnings: Vec::new(),
        metadata: Metadata {
            study: config.study.label().to_string(),
            name: config.name.clone(),
            master_seed: config.master_seed,
            version: String::new(),
            threads: 0,
            scale: 1,
            elapsed_seconds: 0.0,
            config: config.clone(),
        },
    }
}

fn progress(opts: &RunOptions, line: impl FnOnce() -> String) {
    if opts.progress {
        eprintln!("{}", line());
    }
}

/// Linear-interpolation quantile of sorted data (Hyndman-Fan type 7).
pub fn empirical_quantile(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

// the misprinted reference cell and its symmetric partner
const MISPRINT_CELL: (f64, f64) = (-0.6, -0.3);

fn gamma_study(config: &StudyConfig, opts: &RunOptions) -> Result<StudyReport, StudyError> {
    let mut report = empty_report(config);
    let models = config.expanded_models();
    let jobs: Vec<(usize, usize, f64)> = (0..models.len())
        .flat_map(|i| config.m.iter().flat_map(move |&m| config.alpha.iter().map(move |&a| (i, m, a))))
        .collect();
    let values: Vec<gvport::Result<f64>> = jobs
        .par_iter()
        .map(|&(i, m, a)| gamma_distortion(&models[i].as_arma().expect("validated"), m, a, config.covariance))
        .collect();
    for (&(i, m, alpha), value) in jobs.iter().zip(values) {
        let model_id = models[i].id();
        let estimate = match value {
            Ok(v) => Some(v),
            Err(e) => {
                report.warnings.push(format!("{model_id} m={m} alpha={alpha}: {e}"));
                None
            }
        };
        let spec = models[i].as_arma().expect("validated");
        if spec.ar == [MISPRINT_CELL.0] && spec.ma == [MISPRINT_CELL.1] && m == 10 && alpha == 0.05 {
            report.warnings.push(format!(
                "{model_id}: reference tables print 0.692 for this cell, a misprint of the symmetric value 0.069; computed {}",
                opt_fmt(estimate)
            ));
        }
        progress(opts, || format!("{model_id} m={m} alpha={alpha}: {}", opt_fmt(estimate)));
        report.cells.push(Cell {
            study: config.study.label().into(),
            model_id,
            test: "gamma_distortion".into(),
            n: None,
            m,
            alpha,
            estimate,
            stderr: estimate.map(|_| 0.0),
            r: None,
            big_n: None,
        });
    }

    if let Some(sweep) = &config.ar2_sweep {
        let mut points = Vec::new();
        for &phi2 in &sweep.phi2 {
            let (lo, hi) = (phi2 - 1.0, 1.0 - phi2);
            for k in 0..sweep.points {
                let phi1 = lo + (hi - lo) * (k + 1) as f64 / (sweep.points + 1) as f64;
                for &m in &config.m {
                    for &alpha in &config.alpha {
                        points.push((phi1, phi2, m, alpha));
                    }
                }
            }
        }
        let values: Vec<Option<gvport::Result<f64>>> = points
            .par_iter()
            .map(|&(phi1, phi2, m, alpha)| {
                let spec = ArmaSpec { ar: vec![phi1, phi2], ma: Vec::new(), sigma2: 1.0, mean: 0.0 };
                spec.is_admissible().then(|| gamma_distortion(&spec, m, alpha, config.covariance))
            })
            .collect();
        for (&(phi1, phi2, m, alpha), v) in points.iter().zip(values) {
            match v {
                Some(Ok(distortion)) => report.sweep.push(SweepPoint { phi1, phi2, m, alpha, distortion }),
                Some(Err(e)) => report.warnings.push(format!("ar2 sweep phi1={phi1} phi2={phi2} m={m}: {e}")),
                None => {}
            }
        }
    }
    Ok(report)
}

fn opt_fmt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into())
}

/// Series stream for outer replicate `j` of cell `cell`, keyed by (master, cell, j).
fn outer_stream(master: u64, cell: u64, j: u64) -> RngStream {
    RngStream::new(master, cell).child(j)
}

/// Master seed of the inner Monte-Carlo replicates for one outer replicate.
fn inner_seed(outer: RngStream) -> u64 {
    outer.child(0).master_seed
}

fn cell_key(model: usize, n: usize) -> u64 {
    ((model as u64) << 32) | n as u64
}

fn simulate(model: &ModelSpec, n: usize, stream: RngStream) -> gvport::Result<Vec<f64>> {
    match model {
        ModelSpec::Arma { .. } => simulate_arma(&model.as_arma().expect("arma"), n, stream),
        ModelSpec::Garch { omega, alpha, beta, .. } => {
            simulate_garch(&GarchSpec { omega: *omega, alpha: alpha.clone(), beta: beta.clone() }, n, stream)
        }
        ModelSpec::FractionalNoise { d, sigma2, .. } => {
            simulate_fractional_noise(&FractionalNoiseSpec { d: *d, sigma2: *sigma2 }, n, stream)
        }
    }
}

fn convergence_study(config: &StudyConfig, opts: &RunOptions) -> Result<StudyReport, StudyError> {
    let mut report = empty_report(config);
    let models = config.expanded_models();
    let (p, q) = (config.fitted.p, config.fitted.q);
    let max_m = *config.m.iter().max().expect("validated");
    let probabilities = config.probabilities_or_default();
    let fit = FitOptions::default();

    for (mi, model) in models.iter().enumerate() {
        let spec = model.as_arma().expect("validated");
        let model_id = model.id();
        let spectra = config
            .m
            .iter()
            .map(|&m| lambda_spectrum(&spec, m, config.covariance))
            .collect::<gvport::Result<Vec<_>>>()?;
        for (ni, &n) in config.n.iter().enumerate() {
            let cell = cell_key(mi, ni);
            let outcomes: Vec<gvport::Result<Vec<f64>>> = (0..config.replications as u64)
                .into_par_iter()
                .map(|j| {
                    let x = simulate(model, n, outer_stream(config.master_seed, cell, j))?;
                    let fitted = fit_arma(&x, p, q, &fit)?;
                    let acf = residual_acf(&fitted.residuals, max_m)?;
                    config.m.iter().map(|&m| Ok(d_hat(&acf.truncate(m)?, p + q)?.statistic)).collect()
                })
                .collect();
            let ok: Vec<&Vec<f64>> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
            let failures = outcomes.len() - ok.len();
            if failures > 0 {
                report
                    .warnings
                    .push(format!("{model_id} n={n}: {failures} of {} replicates failed to fit", outcomes.len()));
            }
            if ok.len() < 2 {
                report.warnings.push(format!("{model_id} n={n}: too few successful replicates"));
                continue;
            }
            let r_eff = ok.len();
            for (k, &m) in config.m.iter().enumerate() {
                let mut stats: Vec<f64> = ok.iter().map(|v| v[k]).collect();
                stats.sort_by(f64::total_cmp);
                for &alpha in &config.alpha {
                    let qhat = empirical_quantile(&stats, 1.0 - alpha);
                    let tail = 1.0 - imhof_cdf(qhat, &spectra[k])?;
                    progress(opts, || format!("{model_id} n={n} m={m} alpha={alpha}: {tail:.4}"));
                    report.cells.push(Cell {
                        study: config.study.label().into(),
                        model_id: model_id.clone(),
                        test: "asymptotic_tail_at_empirical_quantile".into(),
                        n: Some(n),
                        m,
                        alpha,
                        estimate: Some(tail),
                        stderr: Some(binomial_stderr(tail, r_eff)),
                        r: Some(r_eff),
                        big_n: None,
                    });
                }
                let empirical = probabilities.iter().map(|&pr| empirical_quantile(&stats, pr)).collect();
                let asymptotic = probabilities
                    .iter()
                    .map(|&pr| asymptotic_quantile(pr, &spectra[k]))
                    .collect::<gvport::Result<Vec<_>>>()?;
                report.qq.push(QqSeries {
                    model_id: model_id.clone(),
                    n,
                    m,
                    probabilities: probabilities.clone(),
                    empirical,
                    asymptotic,
                });
            }
        }
    }
    Ok(report)
}

/// Monte-Carlo results for one outer replicate. D_m runs separately because
/// it can be undefined on the observed series.
struct Outer {
    main: Option<gvport::Result<McReport>>,
    dmod: Option<gvport::Result<McReport>>,
}

fn mc_study(config: &StudyConfig, opts: &RunOptions) -> Result<StudyReport, StudyError> {
    let mut report = empty_report(config);
    let models = config.expanded_models();
    let kinds = config.statistics_or_default();
    let main_kinds: Vec<StatisticKind> = kinds.iter().copied().filter(|k| *k != StatisticKind::DMod).collect();
    let with_dmod = kinds.contains(&StatisticKind::DMod);
    let power = config.study == StudyKind::Power;
    let fit_count = config.fitted.p + config.fitted.q;

    for (mi, model) in models.iter().enumerate() {
        let model_id = model.id();
        let null = match (config.oracle, model.as_arma()) {
            (true, Some(spec)) => NullModel::Known(spec),
            _ => NullModel::Estimated,
        };
        for (ni, &n) in config.n.iter().enumerate() {
            let cell = cell_key(mi, ni);
            let run = |kinds: &[StatisticKind], x: &[f64], seed: u64| {
                let mc = McConfig {
                    p: config.fitted.p,
                    q: config.fitted.q,
                    m_values: config.m.clone(),
                    kinds: kinds.to_vec(),
                    replicates: config.inner,
                    master_seed: seed,
                    fit: FitOptions::default(),
                    null: null.clone(),
                };
                mc_portmanteau(x, &mc)
            };
            let outcomes: Vec<gvport::Result<Outer>> = (0..config.replications as u64)
                .into_par_iter()
                .map(|j| {
                    let stream = outer_stream(config.master_seed, cell, j);
                    let x = simulate(model, n, stream)?;
                    let seed = inner_seed(stream);
                    Ok(Outer {
                        main: (!main_kinds.is_empty()).then(|| run(&main_kinds, &x, seed)),
                        dmod: with_dmod.then(|| run(&[StatisticKind::DMod], &x, seed)),
                    })
                })
                .collect();
            let outcomes: Vec<Outer> = outcomes.into_iter().collect::<gvport::Result<_>>()?;

            let main_ok: Vec<&McReport> = outcomes.iter().filter_map(|o| o.main.as_ref()?.as_ref().ok()).collect();
            let dmod_ok: Vec<&McReport> = outcomes.iter().filter_map(|o| o.dmod.as_ref()?.as_ref().ok()).collect();
            let total = outcomes.len();
            if !main_kinds.is_empty() && main_ok.len() < total {
                let first = outcomes.iter().find_map(|o| o.main.as_ref()?.as_ref().err()).expect("a failure");
                report.warnings.push(format!(
                    "{model_id} n={n}: {} of {total} replicates failed ({first})",
                    total - main_ok.len()
                ));
            }
            if with_dmod {
                let undefined = total - dmod_ok.len();
                report.warnings.push(format!(
                    "{model_id} n={n}: d_mod undefined or failed on {undefined} of {total} observed series ({:.1}%)",
                    100.0 * undefined as f64 / total as f64
                ));
            }
            let redraws: usize = main_ok.iter().chain(&dmod_ok).map(|r| r.failed_replicates).sum();
            if redraws > 0 {
                report.warnings.push(format!("{model_id} n={n}: {redraws} inner replicates were redrawn"));
            }

            for &kind in &kinds {
                let source = if kind == StatisticKind::DMod { &dmod_ok } else { &main_ok };
                for &m in &config.m {
                    for &alpha in &config.alpha {
                        let mut push = |test: String, rejections: Vec<bool>, big_n: Option<usize>| {
                            let r = rejections.len();
                            let (estimate, stderr) = if r == 0 {
                                (None, None)
                            } else {
                                let p = rejections.iter().filter(|&&b| b).count() as f64 / r as f64;
                                (Some(p), Some(binomial_stderr(p, r)))
                            };
                            progress(opts, || {
                                format!("{model_id} n={n} m={m} alpha={alpha} {test}: {}", opt_fmt(estimate))
                            });
                            report.cells.push(Cell {
                                study: config.study.label().into(),
                                model_id: model_id.clone(),
                                test,
                                n: Some(n),
                                m,
                                alpha,
                                estimate,
                                stderr,
                                r: Some(r),
                                big_n,
                            });
                        };
                        let mc: Vec<bool> =
                            source.iter().map(|rep| rep.get(kind, m).expect("requested").p_value <= alpha).collect();
                        push(format!("mc_{}", kind.label()), mc, Some(config.inner));
                        if !power {
                            continue;
                        }
                        let asymptotic: Option<Vec<bool>> = match kind {
                            StatisticKind::LjungBox | StatisticKind::BoxPierce => source
                                .iter()
                                .map(|rep| {
                                    rep.get(kind, m)
                                        .expect("requested")
                                        .observed
                                        .chi_squared_p_value()
                                        .ok()
                                        .map(|p| p <= alpha)
                                })
                                .collect(),
                            StatisticKind::DMod | StatisticKind::DHat => gamma_params(m, fit_count).ok().map(|g| {
                                source
                                    .iter()
                                    .map(|rep| {
                                        gamma_tail(rep.get(kind, m).expect("requested").observed.statistic, &g) <= alpha
                                    })
                                    .collect()
                            }),
                        };
                        let name = match kind {
                            StatisticKind::LjungBox | StatisticKind::BoxPierce => "chi2",
                            _ => "gamma",
                        };
                        match asymptotic {
                            Some(v) => push(format!("{name}_{}", kind.label()), v, None),
                            None => report.warnings.push(format!(
                                "{model_id} n={n} m={m}: {name} reference distribution unavailable for {}",
                                kind.label()
                            )),
                        }
                    }
                }
            }

            if power && main_kinds.len() >= 2 {
                let base = main_kinds[0];
                for &other in &main_kinds[1..] {
                    for &m in &config.m {
                        for &alpha in &config.alpha {
                            let diffs: Vec<f64> = main_ok
                                .iter()
                                .map(|rep| {
                                    let a = (rep.get(base, m).expect("requested").p_value <= alpha) as u8 as f64;
                                    let b = (rep.get(other, m).expect("requested").p_value <= alpha) as u8 as f64;
                                    a - b
                                })
                                .collect();
                            let r = diffs.len();
                            let (estimate, stderr) = if r < 2 {
                                (None, None)
                            } else {
                                let mean = diffs.iter().sum::<f64>() / r as f64;
                                let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
                                (Some(mean), Some((var / r as f64).sqrt()))
                            };
                            report.cells.push(Cell {
                                study: config.study.label().into(),
                                model_id: model_id.clone(),
                                test: format!("paired_diff_mc_{}_minus_mc_{}", base.label(), other.label()),
                                n: Some(n),
                                m,
                                alpha,
                                estimate,
                                stderr,
                                r: Some(r),
                                big_n: Some(config.inner),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}
