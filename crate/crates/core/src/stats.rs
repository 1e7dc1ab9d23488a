//! Least-squares fits and distribution distances used by the diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};

/// y ≈ intercept + slope·x with the standard error of the slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(FracError::InvalidArgument(
            "linear fit needs two equally long series of length ≥ 2".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(FracError::InvalidArgument("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if x.len() > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
    })
}

/// Power law y ≈ c·x^p fitted in log–log coordinates; returns (p, c, stderr of p).
pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(FracError::InvalidArgument(
            "power-law fit needs positive data".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok((fit.slope, fit.intercept.exp(), fit.slope_stderr))
}

/// MSD time series with the fitted law MSD ≈ constant·t^exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionReport {
    pub times: Vec<f64>,
    pub msd: Vec<f64>,
    pub exponent: f64,
    pub constant: f64,
    /// 95% half-width on the exponent (normal approximation).
    pub half_width: f64,
}

impl DiffusionReport {
    pub fn fit(times: Vec<f64>, msd: Vec<f64>) -> Result<Self> {
        let (exponent, constant, se) = power_law_fit(&times, &msd)?;
        if !exponent.is_finite() {
            return Err(FracError::NonFinite(exponent));
        }
        Ok(Self {
            times,
            msd,
            exponent,
            constant,
            half_width: 1.96 * se,
        })
    }

    /// Ratio of the last to the first fitted time.
    pub fn span(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) if *a > 0.0 => b / a,
            _ => 0.0,
        }
    }
}

/// Σ|p_i − q_i|·dx for two densities on the same grid.
pub fn l1_distance(p: &[f64], q: &[f64], dx: f64) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() * dx
}

/// Kolmogorov–Smirnov statistic of a sample against a continuous CDF. The
/// sample is sorted in place.
pub fn ks_statistic(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance.
pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// Coefficient of variation |σ/μ|.
pub fn coefficient_of_variation(v: &[f64]) -> f64 {
    (variance(v).sqrt() / mean(v)).abs()
}

/// Median (sorts a copy).
pub fn median(v: &[f64]) -> f64 {
    let mut w = v.to_vec();
    w.sort_by(f64::total_cmp);
    let n = w.len();
    if n % 2 == 1 {
        w[n / 2]
    } else {
        0.5 * (w[n / 2 - 1] + w[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-1.5)).collect();
        let (p, c, se) = power_law_fit(&x, &y).unwrap();
        assert!((p + 1.5).abs() < 1e-12 && (c - 3.0).abs() < 1e-12 && se < 1e-10);
    }

    #[test]
    fn ks_of_uniform_grid() {
        let mut v: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_statistic(&mut v, |x| x) - 0.005).abs() < 1e-12);
    }

    #[test]
    fn median_and_cv() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(coefficient_of_variation(&[2.0, 2.0, 2.0]) == 0.0);
    }
}
