//! Log-log regression records shared by the spectral-dimension, box-counting
//! and transport estimators.

use serde::{Deserialize, Serialize};

use crate::error::{QpError, Result};

/// A log-log scaling fit: grid of scales, measured values, the fitted
/// exponent and window diagnostics (min/max slope over sliding windows).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Scales (ε, δ or T depending on the client), in grid order.
    pub scales: Vec<f64>,
    /// Measured values at each scale.
    pub values: Vec<f64>,
    /// Least-squares slope of log(value) against log(scale).
    pub fitted_exponent: f64,
    /// Smallest slope over sliding windows.
    pub min_window_slope: f64,
    /// Largest slope over sliding windows.
    pub max_window_slope: f64,
    /// Window length used for the diagnostics.
    pub window: usize,
    /// RMS residual of the global fit in log space.
    pub residual: f64,
}

impl ScalingFit {
    /// Fit log(values) against log(scales); `window` points per sliding
    /// window for the min/max slope diagnostics.
    pub fn fit(scales: &[f64], values: &[f64], window: usize) -> Result<ScalingFit> {
        if scales.len() != values.len() || scales.len() < 2 {
            return Err(QpError::InsufficientData(
                "scaling fit needs at least two (scale, value) pairs".into(),
            ));
        }
        if scales.iter().chain(values.iter()).any(|&v| !(v > 0.0)) {
            return Err(QpError::numeric(
                "scaling fit requires strictly positive scales and values",
            ));
        }
        let xs: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
        let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let (slope, intercept) = least_squares(&xs, &ys);
        let residual = (xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let r = y - (slope * x + intercept);
                r * r
            })
            .sum::<f64>()
            / xs.len() as f64)
            .sqrt();

        let window = window.clamp(2, xs.len());
        let mut min_slope = f64::INFINITY;
        let mut max_slope = f64::NEG_INFINITY;
        for start in 0..=(xs.len() - window) {
            let (s, _) = least_squares(&xs[start..start + window], &ys[start..start + window]);
            min_slope = min_slope.min(s);
            max_slope = max_slope.max(s);
        }
        Ok(ScalingFit {
            scales: scales.to_vec(),
            values: values.to_vec(),
            fitted_exponent: slope,
            min_window_slope: min_slope,
            max_window_slope: max_slope,
            window,
            residual,
        })
    }
}

/// Plain least squares y = a x + b, returning (a, b).
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return (0.0, sy / n);
    }
    let a = (n * sxy - sx * sy) / denom;
    let b = (sy - a * sx) / n;
    (a, b)
}

/// Geometric grid from `lo` to `hi` with `n` points (inclusive).
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > 0.0 && n >= 2);
    let step = (hi / lo).powf(1.0 / (n as f64 - 1.0));
    (0..n).map(|i| lo * step.powi(i as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_recovered() {
        let scales = geometric_grid(1e-4, 1e-1, 16);
        let values: Vec<f64> = scales.iter().map(|s| 3.0 * s.powf(1.7)).collect();
        let fit = ScalingFit::fit(&scales, &values, 4).unwrap();
        assert!((fit.fitted_exponent - 1.7).abs() < 1e-10);
        assert!((fit.min_window_slope - 1.7).abs() < 1e-8);
        assert!((fit.max_window_slope - 1.7).abs() < 1e-8);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn window_slopes_bracket_fit() {
        let scales = geometric_grid(1e-3, 1.0, 12);
        let values: Vec<f64> = scales
            .iter()
            .map(|s| s.powf(2.0) * (1.0 + 0.2 * (s.ln()).sin()))
            .collect();
        let fit = ScalingFit::fit(&scales, &values, 4).unwrap();
        assert!(fit.min_window_slope <= fit.fitted_exponent + 1e-12);
        assert!(fit.fitted_exponent <= fit.max_window_slope + 1e-12);
    }

    #[test]
    fn degenerate_input_rejected() {
        assert!(ScalingFit::fit(&[1.0], &[1.0], 2).is_err());
        assert!(ScalingFit::fit(&[1.0, 2.0], &[0.0, 1.0], 2).is_err());
    }
}
