//! ARMA model specification and polynomial algebra.
//!
//! Sign convention: both polynomials are written with minus signs,
//!
//! ```text
//! (1 - φ1 B - ... - φp B^p)(X_t - μ) = (1 - θ1 B - ... - θq B^q) a_t
//! ```
//!
//! so an MA(1) with `ma = [0.4]` has `γ(1) = -0.4 σ²`. Many packages use a
//! plus sign on the MA side; coefficients coming from them must be negated.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Roots of the AR and MA polynomials must have modulus at least `1 + ROOT_MARGIN`.
pub const ROOT_MARGIN: f64 = 1e-8;

/// A stationary, invertible ARMA(p, q) model with Gaussian innovations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaSpec {
    /// φ1..φp
    pub ar: Vec<f64>,
    /// θ1..θq, minus-sign convention
    pub ma: Vec<f64>,
    /// Innovation variance σ²_a.
    pub sigma2: f64,
    /// Series mean μ.
    #[serde(default)]
    pub mean: f64,
}

impl ArmaSpec {
    /// Builds a spec after checking finiteness and `sigma2 > 0`.
    ///
    /// Admissibility is not checked here; see [`check_admissible`].
    pub fn new(ar: Vec<f64>, ma: Vec<f64>, sigma2: f64, mean: f64) -> Result<Self> {
        if ar.iter().chain(ma.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("ARMA coefficients must be finite".into()));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidArgument(format!("innovation variance must be positive, got {sigma2}")));
        }
        if !mean.is_finite() {
            return Err(Error::InvalidArgument("mean must be finite".into()));
        }
        Ok(Self { ar, ma, sigma2, mean })
    }

    pub fn white_noise(sigma2: f64) -> Self {
        Self { ar: Vec::new(), ma: Vec::new(), sigma2, mean: 0.0 }
    }

    pub fn ar1(phi: f64) -> Self {
        Self { ar: vec![phi], ma: Vec::new(), sigma2: 1.0, mean: 0.0 }
    }

    pub fn p(&self) -> usize {
        self.ar.len()
    }

    pub fn q(&self) -> usize {
        self.ma.len()
    }

    /// Number of estimated ARMA coefficients, p + q.
    pub fn fit_count(&self) -> usize {
        self.p() + self.q()
    }

    pub fn is_admissible(&self) -> bool {
        check_admissible(self)
    }

    pub fn ensure_admissible(&self) -> Result<()> {
        if check_admissible(self) {
            Ok(())
        } else {
            Err(Error::NotAdmissible { min_root_modulus: min_root_modulus(&self.ar).min(min_root_modulus(&self.ma)) })
        }
    }
}

/// True when every root of φ(z) and θ(z) has modulus at least `1 + ROOT_MARGIN`.
pub fn check_admissible(spec: &ArmaSpec) -> bool {
    if !(spec.sigma2 > 0.0) {
        return false;
    }
    polynomial_admissible(&spec.ar) && polynomial_admissible(&spec.ma)
}

/// True when `1 - c1 z - ... - ck z^k` has all roots at modulus `>= 1 + ROOT_MARGIN`.
pub fn polynomial_admissible(poly: &[f64]) -> bool {
    if poly.iter().any(|c| !c.is_finite()) {
        return false;
    }
    min_root_modulus(poly) >= 1.0 + ROOT_MARGIN
}

fn effective_degree(poly: &[f64]) -> usize {
    poly.iter().rposition(|&c| c != 0.0).map_or(0, |i| i + 1)
}

/// Roots of the reversed polynomial `w^k - c1 w^{k-1} - ... - ck`.
///
/// These are the reciprocals of the roots of `1 - c1 z - ... - ck z^k`,
/// i.e. the eigenvalues of the companion matrix.
pub fn inverse_roots(poly: &[f64]) -> Vec<Complex64> {
    let k = effective_degree(poly);
    match k {
        0 => Vec::new(),
        1 => vec![Complex64::new(poly[0], 0.0)],
        2 => {
            let (b, c) = (poly[0], poly[1]);
            let disc = Complex64::new(b * b + 4.0 * c, 0.0).sqrt();
            let half = Complex64::new(b / 2.0, 0.0);
            vec![half + disc / 2.0, half - disc / 2.0]
        }
        _ => {
            let mut companion = DMatrix::<f64>::zeros(k, k);
            for j in 0..k {
                companion[(0, j)] = poly[j];
            }
            for i in 1..k {
                companion[(i, i - 1)] = 1.0;
            }
            companion.complex_eigenvalues().iter().copied().collect()
        }
    }
}

/// Roots of `1 - c1 z - ... - ck z^k`.
pub fn polynomial_roots(poly: &[f64]) -> Vec<Complex64> {
    inverse_roots(poly).into_iter().map(|w| w.inv()).collect()
}

/// Smallest root modulus of `1 - c1 z - ... - ck z^k`; infinite for a constant polynomial.
pub fn min_root_modulus(poly: &[f64]) -> f64 {
    let largest_inverse = inverse_roots(poly).iter().map(|w| w.norm()).fold(0.0, f64::max);
    if largest_inverse == 0.0 {
        f64::INFINITY
    } else {
        1.0 / largest_inverse
    }
}

/// Coefficients of `1/(1 - c1 B - ... - ck B^k)`: ψ0..ψ_{count-1}.
pub fn psi_weights_reciprocal(poly: &[f64], count: usize) -> Result<Vec<f64>> {
    if !polynomial_admissible(poly) {
        return Err(Error::NotAdmissible { min_root_modulus: min_root_modulus(poly) });
    }
    Ok(reciprocal_expansion(poly, count))
}

/// The ψ recursion without the admissibility check.
pub(crate) fn reciprocal_expansion(poly: &[f64], count: usize) -> Vec<f64> {
    let mut psi = vec![0.0; count];
    if count == 0 {
        return psi;
    }
    psi[0] = 1.0;
    for j in 1..count {
        let mut s = 0.0;
        for (i, c) in poly.iter().enumerate().take(j) {
            s += c * psi[j - i - 1];
        }
        psi[j] = s;
    }
    psi
}

/// ψ-weights of the full model, `θ(B)/φ(B)`.
pub fn arma_psi_weights(spec: &ArmaSpec, count: usize) -> Vec<f64> {
    let mut psi = vec![0.0; count];
    for j in 0..count {
        let mut s = if j == 0 {
            1.0
        } else if j <= spec.q() {
            -spec.ma[j - 1]
        } else {
            0.0
        };
        for (i, phi) in spec.ar.iter().enumerate().take(j) {
            s += phi * psi[j - i - 1];
        }
        psi[j] = s;
    }
    psi
}

/// Product of two polynomials written as `1 - Σ a_i z^i` and `1 - Σ b_j z^j`,
/// returned in the same form.
pub fn multiply_polynomials(a: &[f64], b: &[f64]) -> Vec<f64> {
    let full_a: Vec<f64> = std::iter::once(1.0).chain(a.iter().map(|c| -c)).collect();
    let full_b: Vec<f64> = std::iter::once(1.0).chain(b.iter().map(|c| -c)).collect();
    let mut prod = vec![0.0; full_a.len() + full_b.len() - 1];
    for (i, x) in full_a.iter().enumerate() {
        for (j, y) in full_b.iter().enumerate() {
            prod[i + j] += x * y;
        }
    }
    prod[1..].iter().map(|c| -c).collect()
}

/// Autocovariances γ(0..=max_lag) of the stationary process.
///
/// Solves the first `max(p, q) + 1` moment equations
/// `γ(k) - Σ φ_i γ(|k-i|) = σ² Σ_{j>=k} θ'_j ψ_{j-k}` (with `θ'_0 = 1`,
/// `θ'_j = -θ_j`) and extends with the AR recursion.
pub fn theoretical_acvf(spec: &ArmaSpec, max_lag: usize) -> Result<Vec<f64>> {
    spec.ensure_admissible()?;
    let p = spec.p();
    let q = spec.q();
    let r = p.max(q);
    let psi = arma_psi_weights(spec, q + 1);
    let theta_full = |j: usize| if j == 0 { 1.0 } else { -spec.ma[j - 1] };

    let mut a = DMatrix::<f64>::zeros(r + 1, r + 1);
    let mut rhs = DVector::<f64>::zeros(r + 1);
    for k in 0..=r {
        a[(k, k)] += 1.0;
        for i in 1..=p {
            a[(k, k.abs_diff(i))] -= spec.ar[i - 1];
        }
        let mut s = 0.0;
        for j in k..=q {
            s += theta_full(j) * psi[j - k];
        }
        rhs[k] = spec.sigma2 * s;
    }
    let sol = a.lu().solve(&rhs).ok_or_else(|| Error::InvalidArgument("singular autocovariance system".into()))?;

    let len = max_lag.max(r) + 1;
    let mut gamma = vec![0.0; len];
    for k in 0..=r {
        gamma[k] = sol[k];
    }
    for k in (r + 1)..len {
        gamma[k] = (1..=p).map(|i| spec.ar[i - 1] * gamma[k - i]).sum();
    }
    gamma.truncate(max_lag + 1);
    Ok(gamma)
}

/// Maps partial autocorrelations in (-1, 1) to the coefficients of an
/// admissible polynomial `1 - c1 z - ... - ck z^k`.
pub fn coefficients_from_partials(partials: &[f64]) -> Vec<f64> {
    let mut coef: Vec<f64> = Vec::with_capacity(partials.len());
    let mut prev: Vec<f64> = Vec::with_capacity(partials.len());
    for (k, &pk) in partials.iter().enumerate() {
        prev.clear();
        prev.extend_from_slice(&coef);
        for j in 0..k {
            coef[j] = prev[j] - pk * prev[k - 1 - j];
        }
        coef.push(pk);
    }
    coef
}

/// Inverse of [`coefficients_from_partials`] (the step-down recursion).
///
/// Returns `None` when some partial has modulus `>= 1`, i.e. the polynomial
/// has a root on or inside the unit circle.
pub fn partials_from_coefficients(coefficients: &[f64]) -> Option<Vec<f64>> {
    let k = coefficients.len();
    let mut coef = coefficients.to_vec();
    let mut partials = vec![0.0; k];
    for order in (1..=k).rev() {
        let pk = coef[order - 1];
        if !pk.is_finite() || pk.abs() >= 1.0 {
            return None;
        }
        partials[order - 1] = pk;
        let denom = 1.0 - pk * pk;
        let prev: Vec<f64> = (0..order - 1).map(|j| (coef[j] + pk * coef[order - 2 - j]) / denom).collect();
        coef.truncate(order - 1);
        coef.copy_from_slice(&prev);
    }
    Some(partials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn admissibility_examples() {
        assert!(check_admissible(&ArmaSpec::ar1(0.5)));
        assert!(!check_admissible(&ArmaSpec::ar1(1.2)));
        let two = ArmaSpec::new(vec![0.5, 0.6], vec![], 1.0, 0.0).unwrap();
        assert!(!check_admissible(&two));
        let mut roots: Vec<f64> = polynomial_roots(&[0.5, 0.6]).iter().map(|z| z.re).collect();
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // 0.6z² + 0.5z - 1 = 0
        let disc = (0.25f64 + 2.4).sqrt();
        assert_abs_diff_eq!(roots[0], (-0.5 - disc) / 1.2, epsilon = 1e-12);
        assert_abs_diff_eq!(roots[1], (-0.5 + disc) / 1.2, epsilon = 1e-12);
        assert_abs_diff_eq!(roots[1], 0.9399, epsilon = 1e-4);
    }

    #[test]
    fn invertibility_checked_on_ma_side() {
        let spec = ArmaSpec::new(vec![], vec![1.0], 1.0, 0.0).unwrap();
        assert!(!check_admissible(&spec));
        let spec = ArmaSpec::new(vec![], vec![-0.9], 1.0, 0.0).unwrap();
        assert!(check_admissible(&spec));
    }

    #[test]
    fn root_margin_excludes_boundary() {
        assert!(!polynomial_admissible(&[1.0 - 1e-10]));
        assert!(polynomial_admissible(&[1.0 - 1e-6]));
        assert!(polynomial_admissible(&[]));
        assert!(polynomial_admissible(&[0.0, 0.0]));
    }

    #[test]
    fn companion_roots_cubic() {
        // (1 - 0.5z)(1 - 0.25z)(1 + 0.4z) expanded
        let c = multiply_polynomials(&multiply_polynomials(&[0.5], &[0.25]), &[-0.4]);
        let mut moduli: Vec<f64> = polynomial_roots(&c).iter().map(|z| z.norm()).collect();
        moduli.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(moduli[0], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(moduli[1], 2.5, epsilon = 1e-10);
        assert_abs_diff_eq!(moduli[2], 4.0, epsilon = 1e-10);
        assert_abs_diff_eq!(min_root_modulus(&c), 2.0, epsilon = 1e-10);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_weights_reciprocal(&[0.5], 3).unwrap(), vec![1.0, 0.5, 0.25]);
        assert_eq!(psi_weights_reciprocal(&[], 3).unwrap(), vec![1.0, 0.0, 0.0]);
        let psi = psi_weights_reciprocal(&[0.5, 0.2], 4).unwrap();
        for (a, b) in psi.iter().zip([1.0, 0.5, 0.45, 0.325]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert!(psi_weights_reciprocal(&[1.5], 3).is_err());
    }

    #[test]
    fn acvf_examples() {
        let wn = theoretical_acvf(&ArmaSpec::white_noise(1.0), 2).unwrap();
        assert_eq!(wn, vec![1.0, 0.0, 0.0]);

        let ar = theoretical_acvf(&ArmaSpec::ar1(0.5), 3).unwrap();
        assert_abs_diff_eq!(ar[0], 4.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ar[1], 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ar[3], 4.0 / 3.0 * 0.125, epsilon = 1e-14);

        let ma = ArmaSpec::new(vec![], vec![0.4], 1.0, 0.0).unwrap();
        let g = theoretical_acvf(&ma, 2).unwrap();
        assert_abs_diff_eq!(g[0], 1.16, epsilon = 1e-14);
        assert_abs_diff_eq!(g[1], -0.4, epsilon = 1e-14);
        assert_abs_diff_eq!(g[2], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn acvf_matches_psi_sum_for_arma() {
        let spec = ArmaSpec::new(vec![0.6, -0.3], vec![0.4, 0.2], 2.0, 0.0).unwrap();
        let g = theoretical_acvf(&spec, 6).unwrap();
        let psi = arma_psi_weights(&spec, 4000);
        for (k, gk) in g.iter().enumerate() {
            let brute: f64 = (0..psi.len() - k).map(|j| psi[j] * psi[j + k]).sum::<f64>() * 2.0;
            assert_abs_diff_eq!(*gk, brute, epsilon = 1e-12);
        }
    }

    #[test]
    fn acvf_rejects_inadmissible() {
        assert!(theoretical_acvf(&ArmaSpec::ar1(1.0), 3).is_err());
    }

    #[test]
    fn partial_transform_round_trip() {
        let partials = [0.3, -0.7, 0.5];
        let coef = coefficients_from_partials(&partials);
        assert!(polynomial_admissible(&coef));
        let back = partials_from_coefficients(&coef).unwrap();
        for (a, b) in back.iter().zip(partials) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert!(partials_from_coefficients(&[0.5, 0.6]).is_none());
    }

    #[test]
    fn psi_decays_at_root_rate() {
        let polys: [&[f64]; 4] = [&[0.9], &[0.5, 0.3], &[1.2, -0.5], &[-0.3, 0.2, 0.4]];
        for poly in polys {
            let r = min_root_modulus(poly);
            let rate = 1.0 / (r - 0.01);
            let psi = psi_weights_reciprocal(poly, 400).unwrap();
            let scaled: Vec<f64> = psi.iter().enumerate().map(|(j, w)| w.abs() / rate.powi(j as i32)).collect();
            let c = scaled.iter().cloned().fold(0.0, f64::max);
            assert!(c < 100.0, "{poly:?}: C = {c}");
            assert!(scaled[399] < 0.1 * c);
        }
    }

    fn admissible_poly() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-0.95f64..0.95, 0..5).prop_map(|p| coefficients_from_partials(&p))
    }

    proptest! {
        #[test]
        fn psi_solves_defining_convolution(poly in admissible_poly()) {
            let psi = psi_weights_reciprocal(&poly, 30).unwrap();
            // (1 - Σ c_i B^i) ψ(B) = 1
            for j in 0..30 {
                let mut s = psi[j];
                for (i, c) in poly.iter().enumerate() {
                    if j > i {
                        s -= c * psi[j - i - 1];
                    }
                }
                let expected = if j == 0 { 1.0 } else { 0.0 };
                prop_assert!((s - expected).abs() < 1e-12);
            }
        }

        #[test]
        fn partials_map_into_admissible_region(partials in prop::collection::vec(-0.999f64..0.999, 1..6)) {
            let coef = coefficients_from_partials(&partials);
            let back = partials_from_coefficients(&coef);
            prop_assert!(back.is_some());
            prop_assert!(min_root_modulus(&coef) > 1.0);
        }

        #[test]
        fn acvf_is_nonnegative_definite(ar in admissible_poly(), ma in admissible_poly()) {
            let spec = ArmaSpec::new(ar, ma, 1.0, 0.0).unwrap();
            prop_assume!(spec.is_admissible());
            let g = theoretical_acvf(&spec, 12).unwrap();
            for l in 1..=12 {
                let t = DMatrix::from_fn(l + 1, l + 1, |i, j| g[i.abs_diff(j)]);
                let eig = t.symmetric_eigenvalues();
                prop_assert!(eig.iter().all(|&e| e > -1e-9 * g[0]));
            }
        }
    }
}
