//! Asymptotic null distribution of D̂_m and its gamma approximation.
//!
//! Under a correctly specified ARMA(p, q) model, D̂_m converges to
//! `Σ λ_i χ²_{1,i}` where `λ_i` are the eigenvalues of `𝒬_m W_m`,
//! `W_m = diag((m - i + 1)/m)` and `𝒬_m` is the asymptotic covariance matrix
//! of `√n (r̂(1), ..., r̂(m))`.
//!
//! Two forms of `𝒬_m` are available, see [`CovarianceForm`].

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::error::{Error, Result};
use crate::imhof::{imhof_cdf_weights, imhof_quantile_weights, imhof_upper_tail, ZERO_WEIGHT};
use crate::model::{multiply_polynomials, psi_weights_reciprocal, theoretical_acvf, ArmaSpec};

const RANK_TOLERANCE: f64 = 1e-10;
const NEGATIVE_EIGEN_TOLERANCE: f64 = 1e-10;

/// How `𝒬_m = I - X A⁻¹ Xᵀ` is formed from the `m x (p+q)` matrix `X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceForm {
    /// `A` is the ARMA information matrix `lim_{m→∞} XᵀX` (per unit innovation variance).
    #[default]
    Information,
    /// `A = XᵀX`, giving an exact orthogonal projection of rank `m - (p+q)`.
    Projection,
}

impl std::str::FromStr for CovarianceForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "information" | "info" => Ok(CovarianceForm::Information),
            "projection" | "proj" => Ok(CovarianceForm::Projection),
            other => Err(Error::InvalidArgument(format!("unknown covariance form '{other}'"))),
        }
    }
}

/// `m x (p+q)` matrix of lagged ψ-weights of `1/φ(B)` (AR columns) and `1/θ(B)` (MA columns).
pub fn x_matrix(spec: &ArmaSpec, m: usize) -> Result<DMatrix<f64>> {
    spec.ensure_admissible()?;
    let (p, q) = (spec.p(), spec.q());
    let psi_ar = psi_weights_reciprocal(&spec.ar, m)?;
    let psi_ma = psi_weights_reciprocal(&spec.ma, m)?;
    Ok(DMatrix::from_fn(m, p + q, |i, j| {
        let (psi, lag) = if j < p { (&psi_ar, j) } else { (&psi_ma, j - p) };
        if i >= lag {
            psi[i - lag]
        } else {
            0.0
        }
    }))
}

/// The `(p+q) x (p+q)` information matrix `lim XᵀX` for unit innovation variance.
///
/// AR and MA diagonal blocks are autocovariances of the AR processes
/// `φ(B)u_t = a_t` and `θ(B)v_t = a_t`; the cross block is `E[u_t v_{t+h}]`,
/// obtained from the joint process `φ(B)θ(B)w_t = a_t` with `u = θ(B)w`, `v = φ(B)w`.
pub fn information_matrix(spec: &ArmaSpec) -> Result<DMatrix<f64>> {
    spec.ensure_admissible()?;
    let (p, q) = (spec.p(), spec.q());
    let ar_only = ArmaSpec::new(spec.ar.clone(), Vec::new(), 1.0, 0.0)?;
    let ma_only = ArmaSpec::new(spec.ma.clone(), Vec::new(), 1.0, 0.0)?;
    let gamma_u = theoretical_acvf(&ar_only, p)?;
    let gamma_v = theoretical_acvf(&ma_only, q)?;

    let joint = ArmaSpec::new(multiply_polynomials(&spec.ar, &spec.ma), Vec::new(), 1.0, 0.0)?;
    let span = 2 * (p + q) + 1;
    let gamma_w = if p > 0 && q > 0 { theoretical_acvf(&joint, span)? } else { Vec::new() };
    let full = |c: &[f64], k: usize| if k == 0 { 1.0 } else { -c[k - 1] };
    let cross = |h: i64| -> f64 {
        let mut s = 0.0;
        for a in 0..=q {
            for b in 0..=p {
                let lag = (h - b as i64 + a as i64).unsigned_abs() as usize;
                s += full(&spec.ma, a) * full(&spec.ar, b) * gamma_w[lag];
            }
        }
        s
    };

    let k = p + q;
    let mut info = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            info[(i, j)] = match (i < p, j < p) {
                (true, true) => gamma_u[i.abs_diff(j)],
                (false, false) => gamma_v[(i - p).abs_diff(j - p)],
                (true, false) => cross(i as i64 - (j - p) as i64),
                (false, true) => cross(j as i64 - (i - p) as i64),
            };
        }
    }
    Ok(info)
}

fn check_rank(a: &DMatrix<f64>, what: &str) -> Result<()> {
    let eig = a.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(0.0, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min <= RANK_TOLERANCE * max {
        return Err(Error::RankDeficient {
            detail: format!(
                "{what} has condition ratio {:.3e}; AR and MA polynomials may share a common factor",
                if max > 0.0 { min / max } else { 0.0 }
            ),
        });
    }
    Ok(())
}

fn complement(x: &DMatrix<f64>, a: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let m = x.nrows();
    if x.ncols() == 0 {
        return Ok(DMatrix::identity(m, m));
    }
    check_rank(a, what)?;
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::RankDeficient { detail: format!("{what} is not positive definite") })?;
    let solved = chol.solve(&x.transpose());
    let mut qm = DMatrix::identity(m, m) - x * solved;
    // symmetrize away roundoff
    qm = (&qm + qm.transpose()) * 0.5;
    Ok(qm)
}

/// `𝒬_m = I - X (XᵀX)⁻¹ Xᵀ`, the projection onto the orthogonal complement of X.
pub fn q_matrix(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() > x.nrows() {
        return Err(Error::RankDeficient {
            detail: format!("X has {} columns but only {} rows", x.ncols(), x.nrows()),
        });
    }
    complement(x, &(x.transpose() * x), "XᵀX")
}

/// `𝒬_m = I - X 𝓘⁻¹ Xᵀ` with the ARMA information matrix `𝓘`.
pub fn q_matrix_information(spec: &ArmaSpec, m: usize) -> Result<DMatrix<f64>> {
    let x = x_matrix(spec, m)?;
    let info = information_matrix(spec)?;
    complement(&x, &info, "information matrix")
}

pub fn covariance_matrix(spec: &ArmaSpec, m: usize, form: CovarianceForm) -> Result<DMatrix<f64>> {
    match form {
        CovarianceForm::Information => q_matrix_information(spec, m),
        CovarianceForm::Projection => q_matrix(&x_matrix(spec, m)?),
    }
}

/// Diagonal of `W_m`: `w_i = (m - i + 1)/m`, i = 1..m.
pub fn weight_diagonal(m: usize) -> Vec<f64> {
    (1..=m).map(|i| (m - i + 1) as f64 / m as f64).collect()
}

/// Eigenvalues λ1 >= ... >= λm >= 0 of `𝒬_m W_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSpectrum {
    pub lambdas: Vec<f64>,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub form: CovarianceForm,
}

impl EigenSpectrum {
    /// White-noise spectrum, `λ_i = w_i`.
    pub fn white_noise(m: usize) -> Self {
        Self { lambdas: weight_diagonal(m), m, p: 0, q: 0, form: CovarianceForm::Information }
    }

    /// Asymptotic mean of D̂_m, `Σ λ_i`.
    pub fn mean(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// Asymptotic variance, `2 Σ λ_i²`.
    pub fn variance(&self) -> f64 {
        2.0 * self.lambdas.iter().map(|l| l * l).sum::<f64>()
    }

    /// Number of weights entering the Imhof integral.
    pub fn effective_rank(&self) -> usize {
        self.lambdas.iter().filter(|&&l| l > ZERO_WEIGHT).count()
    }
}

/// Spectrum of `W^{1/2} 𝒬_m W^{1/2}`, which is similar to `𝒬_m W_m`.
pub fn lambda_spectrum(spec: &ArmaSpec, m: usize, form: CovarianceForm) -> Result<EigenSpectrum> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let qm = covariance_matrix(spec, m, form)?;
    let half: Vec<f64> = weight_diagonal(m).iter().map(|w| w.sqrt()).collect();
    let sym = DMatrix::from_fn(m, m, |i, j| half[i] * qm[(i, j)] * half[j]);
    let mut lambdas: Vec<f64> = if spec.fit_count() == 0 {
        weight_diagonal(m)
    } else {
        SymmetricEigen::new(sym).eigenvalues.iter().copied().collect()
    };
    for l in lambdas.iter_mut() {
        if *l < 0.0 {
            if *l < -NEGATIVE_EIGEN_TOLERANCE {
                return Err(Error::NegativeEigenvalue { value: *l });
            }
            *l = 0.0;
        }
    }
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok(EigenSpectrum { lambdas, m, p: spec.p(), q: spec.q(), form })
}

/// `F(x; λ1..λm)`.
pub fn imhof_cdf(x: f64, spectrum: &EigenSpectrum) -> Result<f64> {
    imhof_cdf_weights(x, &spectrum.lambdas)
}

/// Asymptotic p-value `1 - F(D; λ)` of an observed D̂_m.
pub fn asymptotic_p_value(statistic: f64, spectrum: &EigenSpectrum) -> Result<f64> {
    imhof_upper_tail(statistic, &spectrum.lambdas)
}

/// `F⁻¹(prob; λ)`.
pub fn asymptotic_quantile(prob: f64, spectrum: &EigenSpectrum) -> Result<f64> {
    imhof_quantile_weights(prob, &spectrum.lambdas)
}

/// Two-moment gamma approximation with shape `alpha` and rate `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaApprox {
    pub alpha: f64,
    pub beta: f64,
    pub m: usize,
    pub fit_count: usize,
}

impl GammaApprox {
    /// `alpha / beta = ((m+1) - 2(p+q)) / 2`.
    pub fn mean(&self) -> f64 {
        self.alpha / self.beta
    }

    fn dist(&self) -> Gamma {
        Gamma::new(self.alpha, self.beta).expect("feasible gamma parameters")
    }
}

fn gamma_terms(m: usize, fit_count: usize) -> (i128, i128) {
    let (m, k) = (m as i128, fit_count as i128);
    let numerator = (m + 1) - 2 * k;
    let denominator = 2 * (m + 1) * (2 * m + 1) - 12 * m * k;
    (numerator, denominator)
}

/// True when both `(m+1) - 2(p+q)` and `2(m+1)(2m+1) - 12m(p+q)` are positive.
pub fn gamma_feasible(m: usize, fit_count: usize) -> bool {
    let (num, den) = gamma_terms(m, fit_count);
    m >= 1 && num > 0 && den > 0
}

/// Smallest m for which the gamma approximation exists.
pub fn min_feasible_m(fit_count: usize) -> usize {
    (1..).find(|&m| gamma_feasible(m, fit_count)).expect("feasible m exists")
}

/// Moment-matched gamma parameters:
///
/// ```text
/// α = 3m{(m+1) - 2(p+q)}² / [2{2(m+1)(2m+1) - 12m(p+q)}]
/// β = 3m{(m+1) - 2(p+q)}  /  {2(m+1)(2m+1) - 12m(p+q)}
/// ```
///
/// `β` is a rate: the mean `α/β` equals the asymptotic mean `(m+1)/2 - (p+q)`.
pub fn gamma_params(m: usize, fit_count: usize) -> Result<GammaApprox> {
    if !gamma_feasible(m, fit_count) {
        return Err(Error::GammaInfeasible { m, fit_count, min_m: min_feasible_m(fit_count) });
    }
    let (num, den) = gamma_terms(m, fit_count);
    let (mf, num, den) = (m as f64, num as f64, den as f64);
    let alpha = 3.0 * mf * num * num / (2.0 * den);
    let beta = 3.0 * mf * num / den;
    Ok(GammaApprox { alpha, beta, m, fit_count })
}

/// Upper tail of Gamma(shape α, rate β) at `d`.
pub fn gamma_tail(d: f64, g: &GammaApprox) -> f64 {
    if d <= 0.0 {
        return 1.0;
    }
    g.dist().sf(d)
}

/// Gamma(α, β) quantile at `prob`.
pub fn gamma_quantile(prob: f64, g: &GammaApprox) -> f64 {
    g.dist().inverse_cdf(prob)
}

/// True asymptotic size of a nominal-level test that uses the gamma approximation.
pub fn gamma_distortion(spec: &ArmaSpec, m: usize, nominal: f64, form: CovarianceForm) -> Result<f64> {
    if !(nominal > 0.0 && nominal < 1.0) {
        return Err(Error::InvalidArgument(format!("nominal level must be in (0, 1), got {nominal}")));
    }
    let g = gamma_params(m, spec.fit_count())?;
    let spectrum = lambda_spectrum(spec, m, form)?;
    let critical = gamma_quantile(1.0 - nominal, &g);
    imhof_upper_tail(critical, &spectrum.lambdas)
}
