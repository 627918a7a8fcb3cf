//! Small statistical utilities: the Kolmogorov distribution, one-sample
//! uniformity tests, type-7 quantiles and trapezoidal integration.

use crate::error::{Error, Result};

/// CDF of the Kolmogorov distribution (the law of `sup|B|` for a Brownian
/// bridge `B`). Uses the theta-series dual forms for accuracy on both tails.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < 1.18 {
        let y = (-std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x)).exp();
        let sum = y + y.powi(9) + y.powi(25) + y.powi(49);
        ((2.0 * std::f64::consts::PI).sqrt() / x) * sum
    } else {
        let mut sum = 0.0;
        let mut sign = 1.0;
        for k in 1..100 {
            let term = (-2.0 * (k * k) as f64 * x * x).exp();
            sum += sign * term;
            sign = -sign;
            if term < 1e-16 {
                break;
            }
        }
        1.0 - 2.0 * sum
    }
}

/// One-sample Kolmogorov-Smirnov statistic `D_n` against Uniform(0,1).
pub fn ks_uniform_statistic(sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::InsufficientData("empty sample for KS test".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite residuals"));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &u) in sorted.iter().enumerate() {
        let hi = (i + 1) as f64 / n - u;
        let lo = u - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    Ok(d)
}

/// Approximate p-value for the uniformity KS test using Stephens'
/// finite-sample modification of the asymptotic Kolmogorov law.
pub fn ks_uniform_pvalue(sample: &[f64]) -> Result<f64> {
    let d = ks_uniform_statistic(sample)?;
    let n = sample.len() as f64;
    let modified = d * (n.sqrt() + 0.12 + 0.11 / n.sqrt());
    Ok(1.0 - kolmogorov_cdf(modified))
}

/// Type-7 (linear interpolation of order statistics) quantile of an
/// unsorted sample.
pub fn quantile_type7(sample: &[f64], p: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::InsufficientData("empty sample for quantile".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "quantile level {p} outside [0,1]"
        )));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite sample"));
    Ok(quantile_type7_sorted(&sorted, p))
}

/// Type-7 quantile of an already sorted sample.
pub fn quantile_type7_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Trapezoidal rule on an increasing grid.
pub fn trapezoid(u: &[f64], f: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), f.len());
    let mut total = 0.0;
    for i in 1..u.len() {
        total += 0.5 * (f[i] + f[i - 1]) * (u[i] - u[i - 1]);
    }
    total
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}
