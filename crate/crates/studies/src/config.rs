//! Study configuration, read from TOML.

use std::path::{Path, PathBuf};

use gvport::generators::{FractionalNoiseSpec, GarchSpec};
use gvport::{ArmaSpec, CovarianceForm, StatisticKind};
use serde::{Deserialize, Serialize};

use crate::StudyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    GammaDistortion,
    Convergence,
    Size,
    Power,
}

impl StudyKind {
    pub fn label(self) -> &'static str {
        match self {
            StudyKind::GammaDistortion => "gamma_distortion",
            StudyKind::Convergence => "convergence",
            StudyKind::Size => "size",
            StudyKind::Power => "power",
        }
    }
}

/// A data-generating model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Arma {
        #[serde(default)]
        id: Option<String>,
        #[serde(default)]
        ar: Vec<f64>,
        #[serde(default)]
        ma: Vec<f64>,
        #[serde(default = "unit")]
        sigma2: f64,
        #[serde(default)]
        mean: f64,
    },
    Garch {
        #[serde(default)]
        id: Option<String>,
        omega: f64,
        #[serde(default)]
        alpha: Vec<f64>,
        #[serde(default)]
        beta: Vec<f64>,
    },
    FractionalNoise {
        #[serde(default)]
        id: Option<String>,
        d: f64,
        #[serde(default = "unit")]
        sigma2: f64,
    },
}

fn unit() -> f64 {
    1.0
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ModelSpec {
    pub fn arma(spec: &ArmaSpec) -> Self {
        ModelSpec::Arma { id: None, ar: spec.ar.clone(), ma: spec.ma.clone(), sigma2: spec.sigma2, mean: spec.mean }
    }

    pub fn id(&self) -> String {
        match self {
            ModelSpec::Arma { id: Some(id), .. }
            | ModelSpec::Garch { id: Some(id), .. }
            | ModelSpec::FractionalNoise { id: Some(id), .. } => id.clone(),
            ModelSpec::Arma { ar, ma, .. } => format!("arma(ar=[{}];ma=[{}])", join(ar), join(ma)),
            ModelSpec::Garch { omega, alpha, beta, .. } => {
                format!("garch(omega={omega};alpha=[{}];beta=[{}])", join(alpha), join(beta))
            }
            ModelSpec::FractionalNoise { d, .. } => format!("fn(d={d})"),
        }
    }

    pub fn as_arma(&self) -> Option<ArmaSpec> {
        match self {
            ModelSpec::Arma { ar, ma, sigma2, mean, .. } => {
                Some(ArmaSpec { ar: ar.clone(), ma: ma.clone(), sigma2: *sigma2, mean: *mean })
            }
            _ => None,
        }
    }

    fn validate(&self) -> Result<(), String> {
        match self {
            ModelSpec::Arma { .. } => {
                let a = self.as_arma().expect("arma");
                ArmaSpec::new(a.ar.clone(), a.ma.clone(), a.sigma2, a.mean).map_err(|e| e.to_string())?;
                a.ensure_admissible().map_err(|e| e.to_string())
            }
            ModelSpec::Garch { omega, alpha, beta, .. } => {
                GarchSpec { omega: *omega, alpha: alpha.clone(), beta: beta.clone() }
                    .validate()
                    .map_err(|e| e.to_string())
            }
            ModelSpec::FractionalNoise { d, sigma2, .. } => {
                FractionalNoiseSpec { d: *d, sigma2: *sigma2 }.validate().map_err(|e| e.to_string())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FittedOrder {
    #[serde(default)]
    pub p: usize,
    #[serde(default)]
    pub q: usize,
}

/// ARMA(1,1) models on the product grid `phi x theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arma11Grid {
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
}

/// AR(2) models sweeping φ1 across the stationarity triangle for each fixed φ2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ar2Sweep {
    pub phi2: Vec<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    41
}

pub const QQ_PROBABILITIES: [f64; 11] = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 0.7, 0.9, 0.95, 0.98, 0.99];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub study: StudyKind,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub arma11_grid: Option<Arma11Grid>,
    #[serde(default)]
    pub ar2_sweep: Option<Ar2Sweep>,
    #[serde(default)]
    pub fitted: FittedOrder,
    pub m: Vec<usize>,
    #[serde(default)]
    pub n: Vec<usize>,
    /// Outer replications R.
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// Inner Monte-Carlo replicates N.
    #[serde(default = "default_inner")]
    pub inner: usize,
    #[serde(default = "default_alpha")]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Statistics for Monte-Carlo tests; defaults to D̂ (size) or D̂ and Ljung-Box (power).
    #[serde(default)]
    pub statistics: Vec<StatisticKind>,
    /// Known-parameter null: no estimation anywhere (size study only).
    #[serde(default)]
    pub oracle: bool,
    #[serde(default)]
    pub covariance: CovarianceForm,
    #[serde(default)]
    pub probabilities: Option<Vec<f64>>,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub threads: usize,
}

fn default_replications() -> usize {
    1000
}

fn default_inner() -> usize {
    99
}

fn default_alpha() -> Vec<f64> {
    vec![0.05]
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> StudyError {
    StudyError::Config { path: path.into(), message: message.into() }
}

impl StudyConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, StudyError> {
        let config: StudyConfig = toml::from_str(text).map_err(|e| StudyError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, StudyError> {
        let text = std::fs::read_to_string(path).map_err(|e| StudyError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Divides R and N by `scale`; N is reduced so that N + 1 shrinks by the same factor.
    pub fn scaled(&self, scale: usize) -> Self {
        let scale = scale.max(1);
        let mut out = self.clone();
        out.replications = self.replications.div_ceil(scale).max(1);
        out.inner = ((self.inner + 1).div_ceil(scale)).saturating_sub(1).max(1);
        out
    }

    pub fn statistics_or_default(&self) -> Vec<StatisticKind> {
        if !self.statistics.is_empty() {
            return self.statistics.clone();
        }
        match self.study {
            StudyKind::Power => vec![StatisticKind::DHat, StatisticKind::LjungBox],
            _ => vec![StatisticKind::DHat],
        }
    }

    pub fn probabilities_or_default(&self) -> Vec<f64> {
        self.probabilities.clone().unwrap_or_else(|| QQ_PROBABILITIES.to_vec())
    }

    /// All models, with the ARMA(1,1) grid expanded (θ outer, φ inner).
    pub fn expanded_models(&self) -> Vec<ModelSpec> {
        let mut out = self.models.clone();
        if let Some(grid) = &self.arma11_grid {
            for &theta in &grid.theta {
                for &phi in &grid.phi {
                    out.push(ModelSpec::Arma {
                        id: Some(format!("arma11(phi={phi};theta={theta})")),
                        ar: vec![phi],
                        ma: vec![theta],
                        sigma2: 1.0,
                        mean: 0.0,
                    });
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        if self.m.is_empty() {
            return Err(invalid("m", "at least one lag is required"));
        }
        for (i, &m) in self.m.iter().enumerate() {
            if m == 0 {
                return Err(invalid(format!("m[{i}]"), "lags must be at least 1"));
            }
        }
        for (i, &a) in self.alpha.iter().enumerate() {
            if !(a > 0.0 && a < 1.0) {
                return Err(invalid(format!("alpha[{i}]"), format!("nominal level {a} must lie in (0, 1)")));
            }
        }
        if self.alpha.is_empty() {
            return Err(invalid("alpha", "at least one nominal level is required"));
        }
        if self.replications == 0 {
            return Err(invalid("replications", "must be at least 1"));
        }
        if self.inner == 0 {
            return Err(invalid("inner", "must be at least 1"));
        }
        if let Some(p) = &self.probabilities {
            if let Some(i) = p.iter().position(|x| !(*x > 0.0 && *x < 1.0)) {
                return Err(invalid(format!("probabilities[{i}]"), "probabilities must lie in (0, 1)"));
            }
        }
        for (i, model) in self.models.iter().enumerate() {
            model.validate().map_err(|e| invalid(format!("models[{i}]"), e))?;
        }
        if let Some(grid) = &self.arma11_grid {
            for (i, model) in self.expanded_models()[self.models.len()..].iter().enumerate() {
                model.validate().map_err(|e| invalid(format!("arma11_grid[{i}]"), e))?;
            }
            if grid.phi.is_empty() || grid.theta.is_empty() {
                return Err(invalid("arma11_grid", "phi and theta lists must be nonempty"));
            }
        }
        if let Some(sweep) = &self.ar2_sweep {
            if sweep.points == 0 {
                return Err(invalid("ar2_sweep.points", "must be at least 1"));
            }
            if let Some(i) = sweep.phi2.iter().position(|x| !(x.abs() < 1.0)) {
                return Err(invalid(format!("ar2_sweep.phi2[{i}]"), "phi2 must satisfy |phi2| < 1"));
            }
        }
        let models = self.expanded_models();
        if models.is_empty() && self.ar2_sweep.is_none() {
            return Err(invalid("models", "at least one model is required"));
        }
        let k = self.fitted.p + self.fitted.q;
        match self.study {
            StudyKind::GammaDistortion => {
                if let Some(i) = models.iter().position(|m| m.as_arma().is_none()) {
                    return Err(invalid(format!("models[{i}]"), "gamma distortion needs ARMA models"));
                }
            }
            StudyKind::Convergence | StudyKind::Size | StudyKind::Power => {
                if self.n.is_empty() {
                    return Err(invalid("n", "at least one series length is required"));
                }
                for (i, &n) in self.n.iter().enumerate() {
                    let max_m = *self.m.iter().max().expect("nonempty");
                    if n <= max_m.max(k + 1) {
                        return Err(invalid(
                            format!("n[{i}]"),
                            format!("series length {n} must exceed every lag and p+q"),
                        ));
                    }
                }
                if self.study != StudyKind::Power {
                    for (i, model) in models.iter().enumerate() {
                        match model.as_arma() {
                            None => return Err(invalid(format!("models[{i}]"), "this study needs ARMA models")),
                            Some(a)
                                if self.study == StudyKind::Convergence
                                    && (a.p(), a.q()) != (self.fitted.p, self.fitted.q) =>
                            {
                                return Err(invalid(
                                    format!("models[{i}]"),
                                    "model order must equal the fitted order (p, q)",
                                ))
                            }
                            _ => {}
                        }
                    }
                }
                if self.oracle && self.study != StudyKind::Size {
                    return Err(invalid("oracle", "known-parameter mode applies to the size study only"));
                }
                if self.oracle {
                    if let Some(i) = models
                        .iter()
                        .position(|m| m.as_arma().is_some_and(|a| (a.p(), a.q()) != (self.fitted.p, self.fitted.q)))
                    {
                        return Err(invalid(
                            format!("models[{i}]"),
                            "oracle mode needs the model order to equal (p, q)",
                        ));
                    }
                }
                if self.study == StudyKind::Convergence {
                    if let Some(&m) = self.m.iter().find(|&&m| m <= k) {
                        return Err(invalid("m", format!("lag {m} leaves no degrees of freedom for p+q = {k}")));
                    }
                }
            }
        }
        Ok(())
    }
}
