//! Least-squares power laws `mse ≈ e^{intercept} N^{slope}`.

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the residuals in `ln mse`.
    pub residual: f64,
}

/// Ordinary least squares of `ln mse` against `ln N`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerFit> {
    if points.len() < 3 {
        return Err(HarnessError::Runtime(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(&(n, m)) = points.iter().find(|(n, m)| !(*n > 0.0 && *m > 0.0 && n.is_finite() && m.is_finite())) {
        return Err(HarnessError::Runtime(format!("non-positive point ({n}, {m})")));
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::Runtime("all N are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(PowerFit { slope, intercept, residual: (ss / k).sqrt() })
}
