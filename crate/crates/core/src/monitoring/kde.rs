//! Gaussian-kernel density estimates of a scalar statistic and the control
//! limits derived from them.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub const MAX_BISECTION_ITERS: usize = 200;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn std_normal_cdf(u: f64) -> f64 {
    0.5 * erfc(-u / std::f64::consts::SQRT_2)
}

/// `p̂(z) = (1/Nκ) Σ φ((z − z_n)/κ)`.
pub fn kde_pdf(z: f64, samples: &[f64], kappa: f64) -> f64 {
    if samples.is_empty() || !(kappa > 0.0) {
        return 0.0;
    }
    let sum: f64 = samples
        .iter()
        .map(|&s| {
            let u = (z - s) / kappa;
            (-0.5 * u * u).exp()
        })
        .sum();
    sum * INV_SQRT_2PI / (samples.len() as f64 * kappa)
}

/// `F̂(z) = (1/N) Σ Φ((z − z_n)/κ)`.
pub fn kde_cdf(z: f64, samples: &[f64], kappa: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let sum: f64 = samples.iter().map(|&s| std_normal_cdf((z - s) / kappa)).sum();
    sum / samples.len() as f64
}

/// Sample standard deviation with the `N − 1` denominator.
pub fn sample_std(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    var.sqrt()
}

/// `κ = 1.06 σ N^(−1/5)`.
pub fn bandwidth_opt(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter(
            "bandwidth needs at least two samples".into(),
        ));
    }
    let sigma = sample_std(samples);
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::DegenerateDistribution);
    }
    Ok(1.06 * sigma * (samples.len() as f64).powf(-0.2))
}

/// The `alpha` quantile of the KDE with the rule-of-thumb bandwidth.
pub fn kde_threshold(samples: &[f64], alpha: f64) -> Result<f64> {
    let kappa = bandwidth_opt(samples)?;
    kde_threshold_with(samples, kappa, alpha)
}

/// Solves `F̂(J) = alpha` by bisection on `[min − 6κ, max + 6κ]`.
pub fn kde_threshold_with(samples: &[f64], kappa: f64, alpha: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence {alpha} must lie in (0, 1)"
        )));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth {kappa} must be positive"
        )));
    }
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (min - 6.0 * kappa, max + 6.0 * kappa);
    let tol = 1e-9 * (hi - lo);
    for _ in 0..MAX_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return Ok(mid);
        }
        if kde_cdf(mid, samples, kappa) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence(MAX_BISECTION_ITERS))
}
