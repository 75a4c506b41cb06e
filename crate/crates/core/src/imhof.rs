//! Distribution function of `Q = Σ λ_r χ²_{1,r}` by numerical inversion of
//! its characteristic function.
//!
//! ```text
//! P(Q > x) = 1/2 + (1/π) ∫_0^∞ sin θ(u) / (u ρ(u)) du
//! θ(u) = ½ Σ arctan(λ_r u) - ½ x u,     ρ(u) = Π (1 + λ_r² u²)^{1/4}
//! ```
//!
//! The integral is split into half-periods of `sin(xu/2)`. Each piece is
//! integrated adaptively; the partial sums alternate in sign for large `u`
//! and are accelerated with Wynn's epsilon algorithm. Summation also stops
//! at the truncation point where the remaining tail is provably below 1e-9.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, wynn_epsilon};

/// Weights at or below this value are dropped before integration.
pub const ZERO_WEIGHT: f64 = 1e-12;
const TAIL_BOUND: f64 = 1e-9;
const PANEL_TOL: f64 = 1e-13;
const MAX_PANELS: usize = 200_000;
const WYNN_WINDOW: usize = 40;

fn positive_weights(lambdas: &[f64]) -> Result<Vec<f64>> {
    let w: Vec<f64> = lambdas.iter().copied().filter(|&l| l > ZERO_WEIGHT).collect();
    if w.is_empty() {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(w)
}

/// Upper limit `U` with `[π (K/2) U^{K/2} Π λ_r^{1/2}]^{-1} <= 1e-9`.
fn truncation_point(weights: &[f64]) -> f64 {
    let k = weights.len() as f64;
    let log_prod_sqrt: f64 = weights.iter().map(|l| 0.5 * l.ln()).sum();
    // (K/2) ln U >= -ln(1e-9) - ln(π K/2) - Σ ½ ln λ
    let log_u = (-(TAIL_BOUND.ln()) - (PI * k / 2.0).ln() - log_prod_sqrt) / (k / 2.0);
    log_u.exp()
}

/// `P(Σ λ_r χ²_1 > x)`.
pub fn imhof_upper_tail(x: f64, lambdas: &[f64]) -> Result<f64> {
    let weights = positive_weights(lambdas)?;
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("quantile point must be finite, got {x}")));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    let total: f64 = weights.iter().sum();
    let integrand = |u: f64| -> f64 {
        if u == 0.0 {
            return 0.5 * (total - x);
        }
        let mut theta = -0.5 * x * u;
        let mut log_rho = 0.0;
        for l in &weights {
            let lu = l * u;
            theta += 0.5 * lu.atan();
            log_rho += 0.25 * (lu * lu).ln_1p();
        }
        theta.sin() / (u * log_rho.exp())
    };

    let upper = truncation_point(&weights);
    let half_period = 2.0 * PI / x;
    let mut sums: Vec<f64> = Vec::new();
    let mut acc = 0.0;
    let mut last_estimate = f64::NAN;
    let mut stable = 0;
    let mut result = None;

    for j in 0..MAX_PANELS {
        let a = j as f64 * half_period;
        if a >= upper {
            result = Some(acc);
            break;
        }
        let b = ((j + 1) as f64 * half_period).min(upper);
        let (piece, _) = integrate(&integrand, a, b, PANEL_TOL);
        acc += piece;
        sums.push(acc);
        if b >= upper {
            result = Some(acc);
            break;
        }
        if sums.len() >= 8 {
            let start = sums.len().saturating_sub(WYNN_WINDOW);
            let estimate = wynn_epsilon(&sums[start..]);
            if (estimate - last_estimate).abs() <= 1e-12 * (1.0 + estimate.abs()) {
                stable += 1;
                if stable >= 3 {
                    result = Some(estimate);
                    break;
                }
            } else {
                stable = 0;
            }
            last_estimate = estimate;
        }
    }
    let integral = result.unwrap_or(if last_estimate.is_finite() { last_estimate } else { acc });
    Ok((0.5 + integral / PI).clamp(0.0, 1.0))
}

/// `F(x; λ) = P(Σ λ_r χ²_1 <= x)`.
pub fn imhof_cdf_weights(x: f64, lambdas: &[f64]) -> Result<f64> {
    Ok(1.0 - imhof_upper_tail(x, lambdas)?)
}

/// Inverse of [`imhof_cdf_weights`] by bracketing and bisection.
pub fn imhof_quantile_weights(prob: f64, lambdas: &[f64]) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidArgument(format!("probability must be in (0, 1), got {prob}")));
    }
    let weights = positive_weights(lambdas)?;
    let total: f64 = weights.iter().sum();
    let mut lo = 0.0;
    let mut hi = total.max(1e-3);
    while imhof_cdf_weights(hi, &weights)? < prob {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::InvalidArgument("quantile bracket diverged".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if imhof_cdf_weights(mid, &weights)? < prob {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * hi.max(1e-300) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn chi_squared_quantiles() {
        let p1 = imhof_cdf_weights(3.841_458_820_694_124, &[1.0]).unwrap();
        assert!((p1 - 0.95).abs() < 1e-8, "{p1}");
        let p2 = imhof_cdf_weights(5.991_464_547_107_979, &[1.0, 1.0]).unwrap();
        assert!((p2 - 0.95).abs() < 1e-8, "{p2}");
    }

    #[test]
    fn matches_chi_squared_cdf_over_grid() {
        for df in [1usize, 2, 3, 5, 10] {
            let chi = ChiSquared::new(df as f64).unwrap();
            let w = vec![1.0; df];
            for x in [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0] {
                let v = imhof_cdf_weights(x, &w).unwrap();
                assert!((v - chi.cdf(x)).abs() < 1e-8, "df {df} x {x}: {v} vs {}", chi.cdf(x));
            }
        }
    }

    #[test]
    fn zero_point_and_zero_weights() {
        assert_eq!(imhof_cdf_weights(0.0, &[0.5, 0.2]).unwrap(), 0.0);
        assert!(matches!(imhof_cdf_weights(1.0, &[0.0, 1e-14]), Err(Error::DegenerateSpectrum)));
        let a = imhof_cdf_weights(1.3, &[0.7, 0.2, 0.0]).unwrap();
        let b = imhof_cdf_weights(1.3, &[0.7, 0.2]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scale_equivariance() {
        let w = [0.9, 0.5, 0.3, 0.05];
        for c in [0.1, 3.0, 25.0] {
            let scaled: Vec<f64> = w.iter().map(|l| l * c).collect();
            for x in [0.2, 1.0, 3.0] {
                let a = imhof_cdf_weights(x, &w).unwrap();
                let b = imhof_cdf_weights(x * c, &scaled).unwrap();
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let w = [1.0, 0.8, 0.6, 0.4, 0.2];
        for p in [0.01, 0.5, 0.95, 0.99] {
            let q = imhof_quantile_weights(p, &w).unwrap();
            assert!((imhof_cdf_weights(q, &w).unwrap() - p).abs() < 1e-8);
        }
        let q = imhof_quantile_weights(0.95, &[1.0]).unwrap();
        assert!((q - 3.841_458_820_694_124).abs() < 1e-6);
    }
}
