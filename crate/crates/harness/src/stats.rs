use statrs::statistics::Statistics;

use crate::HarnessError;

/// Pearson product-moment correlation.
pub fn ppmcc(xs: &[f64], ys: &[f64]) -> Result<f64, HarnessError> {
    if xs.len() != ys.len() {
        return Err(HarnessError::Stats(format!("lengths differ: {} and {}", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(HarnessError::Stats("correlation needs at least two points".into()));
    }
    let (sx, sy) = (xs.std_dev(), ys.std_dev());
    if sx == 0.0 || sy == 0.0 || !sx.is_finite() || !sy.is_finite() {
        return Err(HarnessError::Stats("correlation is undefined for zero variance".into()));
    }
    let r = xs.covariance(ys) / (sx * sy);
    Ok(r.clamp(-1.0, 1.0))
}

/// Replications needed to estimate a proportion `p` (with `q = 1 - p`) in a
/// population of `n` at confidence `z` and margin `e`.
pub fn sample_size(n: u64, z: f64, e: f64, p: f64, q: f64) -> f64 {
    let n = n as f64;
    let zpq = z * z * p * q;
    zpq * n / (e * e * (n - 1.0) + zpq)
}

/// Mean and sample standard deviation; a single value has deviation 0.
pub fn mean_and_stddev(values: &[f64]) -> Option<(f64, f64)> {
    match values.len() {
        0 => None,
        1 => Some((values[0], 0.0)),
        _ => Some((values.mean(), values.std_dev())),
    }
}
