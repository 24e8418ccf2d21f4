//! Summary statistics and least-squares fits used by the scans.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Moments of a sample with jackknife error bars.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub draws: usize,
    pub mean: f64,
    pub mean_stderr: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Jackknife standard error of `variance`.
    pub stderr: f64,
}

/// Unbiased variance and its leave-one-out jackknife error, in O(N).
pub fn variance_estimate(xs: &[f64]) -> Result<VarianceEstimate> {
    let n = xs.len();
    if n < 3 {
        return Err(Error::invalid(format!("need at least 3 samples, got {n}")));
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    // centered sums keep the leave-one-out formulas well conditioned
    let c: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    let s2: f64 = c.iter().map(|d| d * d).sum();
    let variance = s2 / (nf - 1.0);
    let loo: Vec<f64> = c
        .iter()
        .map(|&d| {
            let m = -d / (nf - 1.0);
            // Σ_{j≠i} (c_j - m)² with Σ_{j≠i} c_j = -d
            let ss = s2 - d * d - (nf - 1.0) * m * m;
            ss / (nf - 2.0)
        })
        .collect();
    let loo_mean = loo.iter().sum::<f64>() / nf;
    let jk = loo.iter().map(|v| (v - loo_mean).powi(2)).sum::<f64>() * (nf - 1.0) / nf;
    Ok(VarianceEstimate {
        draws: n,
        mean,
        mean_stderr: (variance / nf).sqrt(),
        variance,
        stderr: jk.sqrt(),
    })
}

/// Average of per-column variances of `rows` (draws × components), with a
/// jackknife error over draws.
pub fn mean_column_variance(rows: &[Vec<f64>]) -> Result<VarianceEstimate> {
    let n = rows.len();
    if n < 3 {
        return Err(Error::invalid(format!("need at least 3 draws, got {n}")));
    }
    let p = rows[0].len();
    if p == 0 {
        return Err(Error::invalid("no components to average"));
    }
    for r in rows {
        check_dim(p, r.len())?;
    }
    let nf = n as f64;
    let means: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
    let s2: Vec<f64> = (0..p)
        .map(|j| rows.iter().map(|r| (r[j] - means[j]).powi(2)).sum())
        .collect();
    let variance = s2.iter().sum::<f64>() / (nf - 1.0) / p as f64;
    let loo: Vec<f64> = rows
        .iter()
        .map(|r| {
            let mut acc = 0.0;
            for j in 0..p {
                let d = r[j] - means[j];
                let m = -d / (nf - 1.0);
                acc += (s2[j] - d * d - (nf - 1.0) * m * m) / (nf - 2.0);
            }
            acc / p as f64
        })
        .collect();
    let loo_mean = loo.iter().sum::<f64>() / nf;
    let jk = loo.iter().map(|v| (v - loo_mean).powi(2)).sum::<f64>() * (nf - 1.0) / nf;
    let grand_mean = means.iter().sum::<f64>() / p as f64;
    Ok(VarianceEstimate {
        draws: n,
        mean: grand_mean,
        mean_stderr: (variance / nf).sqrt(),
        variance,
        stderr: jk.sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    check_dim(x.len(), y.len())?;
    if x.len() < 2 {
        return Err(Error::invalid("need at least two points to fit"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Numeric("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(LinearFit { slope, intercept, r2 })
}

fn logs(v: &[f64]) -> Result<Vec<f64>> {
    v.iter()
        .map(|&a| {
            if a > 0.0 && a.is_finite() {
                Ok(a.ln())
            } else {
                Err(Error::Numeric(format!("cannot take the log of {a}")))
            }
        })
        .collect()
}

/// Fit `y ∝ x^slope` in log-log space.
pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    linear_fit(&logs(x)?, &logs(y)?)
}

/// Fit `y ∝ exp(slope·x)` in log-linear space.
pub fn exponential_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    linear_fit(x, &logs(y)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_matches_brute_force() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64 * 0.3 - 1.0).collect();
        let est = variance_estimate(&xs).unwrap();
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
        };
        assert!((est.variance - var(&xs)).abs() < 1e-12);
        let loo: Vec<f64> = (0..xs.len())
            .map(|i| {
                let mut v = xs.clone();
                v.remove(i);
                var(&v)
            })
            .collect();
        let n = xs.len() as f64;
        let lm = loo.iter().sum::<f64>() / n;
        let jk = (loo.iter().map(|v| (v - lm).powi(2)).sum::<f64>() * (n - 1.0) / n).sqrt();
        assert!((est.stderr - jk).abs() < 1e-12);

        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x, 2.0 * x]).collect();
        let m = mean_column_variance(&rows).unwrap();
        assert!((m.variance - 2.5 * est.variance).abs() < 1e-12);
        assert!((m.stderr - 2.5 * est.stderr).abs() < 1e-12);
    }

    #[test]
    fn constant_sample_has_zero_variance() {
        let est = variance_estimate(&[0.5; 10]).unwrap();
        assert_eq!(est.variance, 0.0);
        assert_eq!(est.stderr, 0.0);
        assert!(variance_estimate(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn fits_recover_exact_laws() {
        let x = [2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-2.5)).collect();
        let f = power_law_fit(&x, &y).unwrap();
        assert!((f.slope + 2.5).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        let y: Vec<f64> = x.iter().map(|v: &f64| (-0.7 * v).exp()).collect();
        let f = exponential_fit(&x, &y).unwrap();
        assert!((f.slope + 0.7).abs() < 1e-12);
        assert!(power_law_fit(&x, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }
}
