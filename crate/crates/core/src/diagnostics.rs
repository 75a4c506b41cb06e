//! Residual autocorrelations and the portmanteau statistics built on them.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::levinson::durbin_levinson;

/// Residual autocorrelations r̂(1)..r̂(m) of a series of length `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualAcf {
    pub r: Vec<f64>,
    pub n: usize,
}

impl ResidualAcf {
    /// Wraps precomputed autocorrelations, checking `1 <= m < n` and `|r(k)| <= 1`.
    pub fn new(r: Vec<f64>, n: usize) -> Result<Self> {
        let m = r.len();
        if m == 0 || m >= n {
            return Err(Error::InvalidArgument(format!("need 1 <= m < n, got m = {m}, n = {n}")));
        }
        if let Some(k) = r.iter().position(|v| !v.is_finite() || v.abs() > 1.0) {
            return Err(Error::InvalidArgument(format!("|r({})| exceeds 1", k + 1)));
        }
        Ok(Self { r, n })
    }

    pub fn m(&self) -> usize {
        self.r.len()
    }

    /// Restriction to the first `m` lags.
    pub fn truncate(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.m() {
            return Err(Error::InvalidArgument(format!("cannot truncate {} lags to {m}", self.m())));
        }
        Ok(Self { r: self.r[..m].to_vec(), n: self.n })
    }
}

/// Which portmanteau statistic a value holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    LjungBox,
    BoxPierce,
    DHat,
    DMod,
}

impl StatisticKind {
    pub fn label(self) -> &'static str {
        match self {
            StatisticKind::LjungBox => "ljung_box",
            StatisticKind::BoxPierce => "box_pierce",
            StatisticKind::DHat => "d_hat",
            StatisticKind::DMod => "d_mod",
        }
    }
}

impl std::fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lb" | "ljung_box" | "ljung-box" => Ok(StatisticKind::LjungBox),
            "bp" | "box_pierce" | "box-pierce" => Ok(StatisticKind::BoxPierce),
            "dhat" | "d_hat" => Ok(StatisticKind::DHat),
            "dmod" | "d_mod" => Ok(StatisticKind::DMod),
            other => Err(Error::InvalidArgument(format!("unknown statistic '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortmanteauValue {
    pub statistic: f64,
    pub kind: StatisticKind,
    pub m: usize,
    /// p + q of the fitted model.
    pub fit_count: usize,
}

impl PortmanteauValue {
    /// Chi-squared upper tail with `m - fit_count` degrees of freedom.
    pub fn chi_squared_p_value(&self) -> Result<f64> {
        chi_squared_upper_tail(self.statistic, self.m, self.fit_count)
    }
}

/// `r̂(k) = Σ_{t>k} a_t a_{t-k} / Σ a_t²` for k = 1..m, without re-centring.
pub fn residual_acf(residuals: &[f64], m: usize) -> Result<ResidualAcf> {
    let n = residuals.len();
    if m == 0 || m >= n {
        return Err(Error::InvalidArgument(format!("need 1 <= m < n, got m = {m}, n = {n}")));
    }
    let den: f64 = residuals.iter().map(|a| a * a).sum();
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::ZeroResidualVariance);
    }
    let r = (1..=m)
        .map(|k| {
            let num: f64 = residuals[k..].iter().zip(residuals).map(|(a, b)| a * b).sum();
            num / den
        })
        .collect();
    Ok(ResidualAcf { r, n })
}

/// Ljung-Box `Q_m = n(n+2) Σ r̂(k)²/(n-k)`.
pub fn ljung_box(acf: &ResidualAcf, fit_count: usize) -> PortmanteauValue {
    let n = acf.n as f64;
    let s: f64 = acf.r.iter().enumerate().map(|(i, r)| r * r / (n - (i + 1) as f64)).sum();
    PortmanteauValue { statistic: n * (n + 2.0) * s, kind: StatisticKind::LjungBox, m: acf.m(), fit_count }
}

/// Box-Pierce `n Σ r̂(k)²`.
pub fn box_pierce(acf: &ResidualAcf, fit_count: usize) -> PortmanteauValue {
    let s: f64 = acf.r.iter().map(|r| r * r).sum();
    PortmanteauValue { statistic: acf.n as f64 * s, kind: StatisticKind::BoxPierce, m: acf.m(), fit_count }
}

/// Upper tail of χ² with `m - fit_count` degrees of freedom.
pub fn chi_squared_upper_tail(statistic: f64, m: usize, fit_count: usize) -> Result<f64> {
    let df = m as i64 - fit_count as i64;
    if df <= 0 {
        return Err(Error::NoDegreesOfFreedom { m, fit_count, df });
    }
    if statistic <= 0.0 {
        return Ok(1.0);
    }
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(dist.sf(statistic))
}

/// Determinant of the `(m+1) x (m+1)` Toeplitz autocorrelation matrix and
/// the partial autocorrelations that produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzDet {
    pub det: f64,
    pub log_det: f64,
    pub partials: Vec<f64>,
}

/// `|R_m| = Π_{k=1}^{m} (1 - φ_kk²)^{m+1-k}` by Durbin-Levinson.
///
/// Fails with [`Error::NotPositiveDefinite`] at the first lag whose partial
/// autocorrelation reaches modulus 1.
pub fn toeplitz_corr_det(acf: &ResidualAcf) -> Result<ToeplitzDet> {
    toeplitz_det_of(&acf.r)
}

fn toeplitz_det_of(r: &[f64]) -> Result<ToeplitzDet> {
    let mut rho = Vec::with_capacity(r.len() + 1);
    rho.push(1.0);
    rho.extend_from_slice(r);
    match durbin_levinson(&rho) {
        Ok(lev) => {
            let log_det = lev.log_det();
            Ok(ToeplitzDet { det: log_det.exp(), log_det, partials: lev.partials })
        }
        Err(b) => Err(Error::NotPositiveDefinite { lag: b.lag, leading_minor: b.leading_minor }),
    }
}

fn generalized_variance_statistic(n: usize, m: usize, log_det: f64) -> f64 {
    // n(1 - |R|^{1/m}), with exp_m1 for accuracy near |R| = 1
    -(n as f64) * (log_det / m as f64).exp_m1()
}

/// `D̂_m = n(1 - |R̂_m|^{1/m})`.
pub fn d_hat(acf: &ResidualAcf, fit_count: usize) -> Result<PortmanteauValue> {
    let det = toeplitz_corr_det(acf)?;
    let statistic = generalized_variance_statistic(acf.n, acf.m(), det.log_det);
    Ok(PortmanteauValue { statistic: statistic.max(0.0), kind: StatisticKind::DHat, m: acf.m(), fit_count })
}

/// Inflated autocorrelations `r̈(k) = sign(r̂(k)) √((n+2)/(n-k)) |r̂(k)|`.
pub fn inflated_acf(acf: &ResidualAcf) -> Vec<f64> {
    let n = acf.n as f64;
    acf.r.iter().enumerate().map(|(i, r)| r * ((n + 2.0) / (n - (i + 1) as f64)).sqrt()).collect()
}

/// `D_m = n - n|R̈_m|^{1/m}` on the inflated autocorrelations.
///
/// `Err(NotPositiveDefinite)` is an expected outcome here, carrying the first
/// offending lag.
pub fn d_mod(acf: &ResidualAcf, fit_count: usize) -> Result<PortmanteauValue> {
    let inflated = inflated_acf(acf);
    if let Some(k) = inflated.iter().position(|r| r.abs() >= 1.0) {
        return Err(Error::NotPositiveDefinite { lag: k + 1, leading_minor: f64::NAN });
    }
    let det = toeplitz_det_of(&inflated)?;
    let statistic = generalized_variance_statistic(acf.n, acf.m(), det.log_det);
    Ok(PortmanteauValue { statistic, kind: StatisticKind::DMod, m: acf.m(), fit_count })
}

/// Computes the statistic of the given kind.
pub fn statistic(acf: &ResidualAcf, kind: StatisticKind, fit_count: usize) -> Result<PortmanteauValue> {
    match kind {
        StatisticKind::LjungBox => Ok(ljung_box(acf, fit_count)),
        StatisticKind::BoxPierce => Ok(box_pierce(acf, fit_count)),
        StatisticKind::DHat => d_hat(acf, fit_count),
        StatisticKind::DMod => d_mod(acf, fit_count),
    }
}
