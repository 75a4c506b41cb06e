//! Random series generation: the null ARMA model and the GARCH and
//! fractional-noise alternatives.
//!
//! Every generator draws from an [`RngStream`], so output is a pure
//! function of `(spec, n, master_seed, stream_index)` regardless of which
//! thread runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{min_root_modulus, ArmaSpec};

/// Lower bound on burn-in length for recursively defined processes.
pub const MIN_BURN_IN: usize = 200;
/// Upper bound on burn-in length; reached only for roots within ~1e-4 of the unit circle.
pub const MAX_BURN_IN: usize = 100_000;
const BURN_IN_TOLERANCE: f64 = 1e-10;

/// A deterministic random substream keyed by `(master_seed, stream_index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self { master_seed, stream_index }
    }

    /// A stream nested under this one, for two-level (outer, inner) designs.
    ///
    /// The child's master seed mixes both parent fields, so
    /// `(seed, i).child(j)` and `(seed, j).child(i)` differ.
    pub fn child(&self, index: u64) -> Self {
        let mixed = splitmix64(self.master_seed ^ splitmix64(self.stream_index.wrapping_add(1)));
        Self { master_seed: mixed, stream_index: index }
    }

    /// The ChaCha8 generator for this substream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Burn-in length so that a transient decaying like `decay^M` falls below 1e-10.
///
/// `decay` is the reciprocal of the minimal AR root modulus, or the GARCH
/// persistence Σα + Σβ.
pub fn burn_in_length(decay: f64) -> usize {
    if !(decay > 0.0) {
        return MIN_BURN_IN;
    }
    if decay >= 1.0 {
        return MAX_BURN_IN;
    }
    let needed = (BURN_IN_TOLERANCE.ln() / decay.ln()).ceil();
    (needed as usize).clamp(MIN_BURN_IN, MAX_BURN_IN)
}

fn normals<R: rand::Rng>(rng: &mut R, len: usize, scale: f64) -> Vec<f64> {
    (0..len)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

/// Gaussian realization of the ARMA model of length `n`, mean included.
pub fn simulate_arma(spec: &ArmaSpec, n: usize, stream: RngStream) -> Result<Vec<f64>> {
    spec.ensure_admissible()?;
    if n == 0 {
        return Err(Error::InvalidArgument("series length must be at least 1".into()));
    }
    let burn = burn_in_length(1.0 / min_root_modulus(&spec.ar));
    let total = n + burn;
    let mut rng = stream.rng();
    let shocks = normals(&mut rng, total, spec.sigma2.sqrt());

    let mut x = vec![0.0; total];
    for t in 0..total {
        let mut v = shocks[t];
        for (i, phi) in spec.ar.iter().enumerate() {
            if t > i {
                v += phi * x[t - i - 1];
            }
        }
        for (j, theta) in spec.ma.iter().enumerate() {
            if t > j {
                v -= theta * shocks[t - j - 1];
            }
        }
        x[t] = v;
    }
    Ok(x[burn..].iter().map(|v| v + spec.mean).collect())
}

/// GARCH(r, s) volatility model with standard normal shocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchSpec {
    pub omega: f64,
    /// ARCH coefficients α1..αr on lagged squared values.
    #[serde(default)]
    pub alpha: Vec<f64>,
    /// GARCH coefficients β1..βs on lagged conditional variances.
    #[serde(default)]
    pub beta: Vec<f64>,
}

impl GarchSpec {
    pub fn persistence(&self) -> f64 {
        self.alpha.iter().sum::<f64>() + self.beta.iter().sum::<f64>()
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.persistence())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::InvalidArgument(format!("GARCH omega must be positive, got {}", self.omega)));
        }
        if self.alpha.iter().chain(self.beta.iter()).any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::InvalidArgument("GARCH coefficients must be finite and nonnegative".into()));
        }
        let s = self.persistence();
        if s >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "GARCH persistence {s} must be below 1 for covariance stationarity"
            )));
        }
        Ok(())
    }
}

/// GARCH series `ε_t = σ_t z_t` with presample values at the unconditional variance.
pub fn simulate_garch(spec: &GarchSpec, n: usize, stream: RngStream) -> Result<Vec<f64>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("series length must be at least 1".into()));
    }
    let burn = burn_in_length(spec.persistence());
    let total = n + burn;
    let uncond = spec.unconditional_variance();
    let r = spec.alpha.len();
    let s = spec.beta.len();
    let lead = r.max(s);

    let mut rng = stream.rng();
    let z = normals(&mut rng, total, 1.0);
    // presample slots hold the unconditional variance for both ε² and σ²
    let mut eps2 = vec![uncond; lead + total];
    let mut sig2 = vec![uncond; lead + total];
    let mut out = Vec::with_capacity(n);
    for (t, zt) in z.iter().enumerate() {
        let idx = lead + t;
        let mut v = spec.omega;
        for (i, a) in spec.alpha.iter().enumerate() {
            v += a * eps2[idx - i - 1];
        }
        for (j, b) in spec.beta.iter().enumerate() {
            v += b * sig2[idx - j - 1];
        }
        sig2[idx] = v;
        let e = v.sqrt() * zt;
        eps2[idx] = e * e;
        if t >= burn {
            out.push(e);
        }
    }
    Ok(out)
}

/// ARFIMA(0, d, 0) fractional noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalNoiseSpec {
    pub d: f64,
    #[serde(default = "unit")]
    pub sigma2: f64,
}

fn unit() -> f64 {
    1.0
}

impl FractionalNoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.d.abs() < 0.5) {
            return Err(Error::InvalidArgument(format!("memory parameter d = {} must satisfy |d| < 0.5", self.d)));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(Error::InvalidArgument("fractional noise variance must be positive".into()));
        }
        Ok(())
    }

    /// γ(0) = σ² Γ(1-2d) / Γ(1-d)².
    pub fn variance(&self) -> f64 {
        use statrs::function::gamma::ln_gamma;
        self.sigma2 * (ln_gamma(1.0 - 2.0 * self.d) - 2.0 * ln_gamma(1.0 - self.d)).exp()
    }
}

/// Lag-k autocorrelation of fractional noise with memory parameter `d`.
pub fn fn_autocorrelation(d: f64, k: usize) -> Result<f64> {
    if !(d.abs() < 0.5) {
        return Err(Error::InvalidArgument(format!("memory parameter d = {d} must satisfy |d| < 0.5")));
    }
    let mut rho = 1.0;
    for j in 1..=k {
        let j = j as f64;
        rho *= (j - 1.0 + d) / (j - d);
    }
    Ok(rho)
}

/// Exact Gaussian fractional-noise sample by Durbin-Levinson conditional sampling.
///
/// Costs O(n²); no burn-in is involved.
pub fn simulate_fractional_noise(spec: &FractionalNoiseSpec, n: usize, stream: RngStream) -> Result<Vec<f64>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("series length must be at least 1".into()));
    }
    let mut rho = vec![1.0; n];
    for k in 1..n {
        let j = k as f64;
        rho[k] = rho[k - 1] * (j - 1.0 + spec.d) / (j - spec.d);
    }
    let gamma0 = spec.variance();
    let mut rng = stream.rng();

    let mut x = Vec::with_capacity(n);
    let mut coef: Vec<f64> = Vec::with_capacity(n);
    let mut prev: Vec<f64> = Vec::with_capacity(n);
    // prediction error variance in correlation units
    let mut v = 1.0;
    for t in 0..n {
        if t > 0 {
            let mut num = rho[t];
            for j in 1..t {
                num -= coef[j - 1] * rho[t - j];
            }
            let pk = num / v;
            prev.clear();
            prev.extend_from_slice(&coef);
            for j in 1..t {
                coef[j - 1] = prev[j - 1] - pk * prev[t - j - 1];
            }
            coef.push(pk);
            v *= 1.0 - pk * pk;
        }
        let mean: f64 = coef.iter().enumerate().map(|(j, c)| c * x[t - j - 1]).sum();
        let z: f64 = StandardNormal.sample(&mut rng);
        x.push(mean + (v * gamma0).sqrt() * z);
    }
    Ok(x)
}
