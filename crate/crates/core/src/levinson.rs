//! Durbin-Levinson recursion on an autocovariance (or autocorrelation)
//! sequence.
//!
//! The recursion solves the Toeplitz prediction equations order by order.
//! At order `k` it yields the partial autocorrelation `φ_kk`, the prediction
//! coefficients `φ_k1..φ_kk` and the one-step prediction error variance
//! `v_k = v_{k-1}(1 - φ_kk²)`. The Toeplitz matrix of `γ(0..m)` is positive
//! definite exactly when every `|φ_kk| < 1`, and its determinant is
//! `Π_{k=0}^{m} v_k`.

/// Outcome of a Durbin-Levinson pass that stopped early.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakdown {
    /// Order at which `|φ_kk| >= 1` (or a non-finite value) was met.
    pub lag: usize,
    /// Determinant of the leading `(lag+1) x (lag+1)` block.
    pub leading_minor: f64,
}

/// Result of a complete recursion up to order `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Levinson {
    /// `φ_11 .. φ_mm`.
    pub partials: Vec<f64>,
    /// `v_0 .. v_m`.
    pub variances: Vec<f64>,
    /// `φ_m1 .. φ_mm`.
    pub coefficients: Vec<f64>,
}

impl Levinson {
    /// `ln det` of the `(m+1) x (m+1)` Toeplitz matrix.
    pub fn log_det(&self) -> f64 {
        self.variances.iter().map(|v| v.ln()).sum()
    }
}

/// Runs the recursion on `acvf[0..=m]`. Requires `acvf[0] > 0`.
pub fn durbin_levinson(acvf: &[f64]) -> Result<Levinson, Breakdown> {
    let m = acvf.len().saturating_sub(1);
    let mut partials = Vec::with_capacity(m);
    let mut variances = Vec::with_capacity(m + 1);
    let mut coef: Vec<f64> = Vec::with_capacity(m);
    let mut prev: Vec<f64> = Vec::with_capacity(m);

    let v0 = acvf[0];
    if !(v0 > 0.0) || !v0.is_finite() {
        return Err(Breakdown { lag: 0, leading_minor: v0 });
    }
    variances.push(v0);
    let mut log_det = v0.ln();
    let mut v = v0;

    for k in 1..=m {
        let mut num = acvf[k];
        for j in 1..k {
            num -= coef[j - 1] * acvf[k - j];
        }
        let pk = num / v;
        if !pk.is_finite() || pk.abs() >= 1.0 {
            let next_v = v * (1.0 - pk * pk);
            let leading_minor = if next_v.is_finite() { log_det.exp() * next_v } else { f64::NAN };
            return Err(Breakdown { lag: k, leading_minor });
        }
        prev.clear();
        prev.extend_from_slice(&coef);
        for j in 1..k {
            coef[j - 1] = prev[j - 1] - pk * prev[k - j - 1];
        }
        coef.push(pk);
        v *= 1.0 - pk * pk;
        log_det += v.ln();
        partials.push(pk);
        variances.push(v);
    }

    Ok(Levinson { partials, variances, coefficients: coef })
}
