use gvport::diagnostics::{chi_squared_upper_tail, ljung_box, residual_acf};
use gvport::{
    fit_arma, simulate_arma, simulate_fractional_noise, simulate_garch, ArmaSpec, FitOptions, FractionalNoiseSpec,
    GarchSpec, RngStream,
};

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

#[test]
fn fractional_noise_with_zero_memory_matches_white_noise() {
    let n = 10_000;
    let fnoise =
        simulate_fractional_noise(&FractionalNoiseSpec { d: 0.0, sigma2: 1.0 }, n, RngStream::new(11, 0)).unwrap();
    let wn = simulate_arma(&ArmaSpec::white_noise(1.0), n, RngStream::new(11, 1)).unwrap();
    let d = ks_statistic(&fnoise, &wn);
    // critical value at α = 0.01: 1.628 √(2/n)
    let critical = 1.628 * (2.0 / n as f64).sqrt();
    assert!(d < critical, "KS D = {d}, critical {critical}");
}

#[test]
fn fractional_noise_sample_acf_tracks_theory() {
    let spec = FractionalNoiseSpec { d: 0.3, sigma2: 1.0 };
    let n = 4000;
    let reps = 20;
    let mut r1 = 0.0;
    for i in 0..reps {
        let x = simulate_fractional_noise(&spec, n, RngStream::new(5, i)).unwrap();
        // known zero mean; centring at the sample mean is biased under long memory
        let c0: f64 = x.iter().map(|v| v * v).sum();
        let c1: f64 = x.windows(2).map(|w| w[0] * w[1]).sum();
        r1 += c1 / c0 / reps as f64;
    }
    let theory = gvport::fn_autocorrelation(0.3, 1).unwrap();
    assert!((r1 - theory).abs() < 0.02, "{r1} vs {theory}");
}

#[test]
fn garch_levels_uncorrelated_squares_correlated() {
    let spec = GarchSpec { omega: 0.1, alpha: vec![0.15], beta: vec![0.8] };
    let x = simulate_garch(&spec, 100_000, RngStream::new(2, 0)).unwrap();
    let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    assert!((var - spec.unconditional_variance()).abs() / spec.unconditional_variance() < 0.1);
    let r = residual_acf(&x, 1).unwrap().r[0];
    assert!(r.abs() < 0.02, "{r}");
    let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    let r2 = residual_acf(&sq, 1).unwrap().r[0];
    assert!(r2 > 0.1, "{r2}");
}

#[test]
fn estimator_error_shrinks_like_root_n() {
    let phi = 0.5;
    let spec = ArmaSpec::ar1(phi);
    let opts = FitOptions::default();
    let errors = |n: usize, seed: u64| -> Vec<f64> {
        (0..200)
            .map(|i| {
                let x = simulate_arma(&spec, n, RngStream::new(seed, i)).unwrap();
                (fit_arma(&x, 1, 0, &opts).unwrap().spec.ar[0] - phi).abs()
            })
            .collect()
    };
    let ratio = median(errors(200, 31)) / median(errors(2000, 32));
    assert!((2.0..=5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn fitted_residuals_are_white() {
    let spec = ArmaSpec::new(vec![0.6], vec![-0.4], 1.0, 3.0).unwrap();
    let x = simulate_arma(&spec, 10_000, RngStream::new(77, 0)).unwrap();
    let fit = fit_arma(&x, 1, 1, &FitOptions::default()).unwrap();
    assert!(fit.converged);
    let acf = residual_acf(&fit.residuals, 20).unwrap();
    let q = ljung_box(&acf, 2);
    let p = chi_squared_upper_tail(q.statistic, 20, 2).unwrap();
    assert!(p > 0.001, "Ljung-Box p = {p}");
    assert!((fit.spec.ar[0] - 0.6).abs() < 0.05);
    assert!((fit.spec.ma[0] + 0.4).abs() < 0.05);
}
