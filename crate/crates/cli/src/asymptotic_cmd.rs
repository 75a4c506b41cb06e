//! `gvport asymptotic`: the asymptotic null distribution of D̂_m for a given model.

use std::fmt::Write as _;

use gvport::asymptotic::{
    asymptotic_quantile, gamma_distortion, gamma_params, imhof_cdf, lambda_spectrum, min_feasible_m, CovarianceForm,
};
use gvport::ArmaSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfValue {
    pub x: f64,
    pub cdf: f64,
    pub upper_tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileValue {
    pub probability: f64,
    pub quantile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSummary {
    pub feasible: bool,
    pub min_m: usize,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// True asymptotic size of the nominal 5% gamma test.
    pub size_at_nominal_5pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub m: usize,
    pub covariance: CovarianceForm,
    pub lambdas: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub cdf: Option<CdfValue>,
    pub quantile: Option<QuantileValue>,
    pub gamma: GammaSummary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Query {
    None,
    Cdf(f64),
    Quantile(f64),
}

pub fn run_asymptotic(
    phi: &[f64],
    theta: &[f64],
    m: usize,
    form: CovarianceForm,
    query: Query,
) -> gvport::Result<AsymptoticReport> {
    let spec = ArmaSpec::new(phi.to_vec(), theta.to_vec(), 1.0, 0.0)?;
    spec.ensure_admissible()?;
    let spectrum = lambda_spectrum(&spec, m, form)?;
    let (cdf, quantile) = match query {
        Query::None => (None, None),
        Query::Cdf(x) => {
            let f = imhof_cdf(x, &spectrum)?;
            (Some(CdfValue { x, cdf: f, upper_tail: 1.0 - f }), None)
        }
        Query::Quantile(p) => {
            if !(p > 0.0 && p < 1.0) {
                return Err(gvport::Error::InvalidArgument(format!("probability {p} must lie in (0, 1)")));
            }
            (None, Some(QuantileValue { probability: p, quantile: asymptotic_quantile(p, &spectrum)? }))
        }
    };
    let k = spec.fit_count();
    let gamma = match gamma_params(m, k) {
        Ok(g) => GammaSummary {
            feasible: true,
            min_m: min_feasible_m(k),
            alpha: Some(g.alpha),
            beta: Some(g.beta),
            size_at_nominal_5pct: Some(gamma_distortion(&spec, m, 0.05, form)?),
        },
        Err(_) => GammaSummary {
            feasible: false,
            min_m: min_feasible_m(k),
            alpha: None,
            beta: None,
            size_at_nominal_5pct: None,
        },
    };
    Ok(AsymptoticReport {
        phi: phi.to_vec(),
        theta: theta.to_vec(),
        m,
        covariance: form,
        mean: spectrum.mean(),
        variance: spectrum.variance(),
        lambdas: spectrum.lambdas,
        cdf,
        quantile,
        gamma,
    })
}

impl AsymptoticReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "ARMA({}, {}), m = {}", self.phi.len(), self.theta.len(), self.m);
        let lambdas: Vec<String> = self.lambdas.iter().map(|l| format!("{l:.6}")).collect();
        let _ = writeln!(s, "lambda = ({})", lambdas.join(", "));
        let _ = writeln!(s, "mean = {:.6}, variance = {:.6}", self.mean, self.variance);
        if let Some(c) = &self.cdf {
            let _ = writeln!(s, "F({}) = {:.8}, 1 - F = {:.8}", c.x, c.cdf, c.upper_tail);
        }
        if let Some(q) = &self.quantile {
            let _ = writeln!(s, "F^-1({}) = {:.8}", q.probability, q.quantile);
        }
        let g = &self.gamma;
        match (g.alpha, g.beta, g.size_at_nominal_5pct) {
            (Some(a), Some(b), Some(size)) => {
                let _ = writeln!(s, "gamma approximation: alpha = {a:.6}, beta = {b:.6} (rate)");
                let _ = writeln!(s, "size of nominal 5% gamma test: {size:.4}");
            }
            _ => {
                let _ = writeln!(s, "gamma infeasible; minimal m is {}", g.min_m);
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
