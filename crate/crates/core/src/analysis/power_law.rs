//! Log-log least-squares power-law fits.

use serde::Serialize;

use super::regression::{fit_line, residual_norm};
use crate::error::AnalysisError;
use crate::frequency::FrequencyTable;

/// `y ≈ c0 * x^(-gamma)`, fitted on `ln y = ln c0 - gamma ln x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub c0: f64,
    pub gamma: f64,
    /// Residual norm in log space.
    pub residual_norm: f64,
    pub points: usize,
}

/// Fits `y = c0 * x^(-gamma)` over positive points.
///
/// When every `x` is the same the slope is unidentifiable; the fit then
/// reports `gamma = 0` and `c0` as the geometric mean of `y`.
pub fn fit_power_law_points(points: &[(f64, f64)]) -> Result<PowerLawFit, AnalysisError> {
    if points.len() < 3 {
        return Err(AnalysisError::InsufficientData(points.len()));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(AnalysisError::InvalidArgument(format!(
            "power-law points must be positive, got ({x}, {y})"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept) = match fit_line(&xs, &ys) {
        Some(fit) => (fit.slope, fit.intercept),
        None => (0.0, ys.iter().sum::<f64>() / ys.len() as f64),
    };
    Ok(PowerLawFit {
        c0: intercept.exp(),
        gamma: -slope,
        residual_norm: residual_norm(&xs, &ys, slope, intercept),
        points: points.len(),
    })
}

/// Fits the data distribution `P_data(c) = f_{b,c}` against the image
/// fraction `f_{i,c}` over classes that occur.
pub fn fit_power_law(freqs: &FrequencyTable) -> Result<PowerLawFit, AnalysisError> {
    let points: Vec<(f64, f64)> = freqs
        .present()
        .map(|c| (c.image_fraction, c.instance_fraction))
        .collect();
    fit_power_law_points(&points)
}

/// Fits the image fraction against frequency rank (1 = most frequent), the
/// Zipf form used by the synthetic generator.
pub fn fit_rank_power_law(freqs: &FrequencyTable) -> Result<PowerLawFit, AnalysisError> {
    let mut fractions: Vec<f64> = freqs.present().map(|c| c.image_fraction).collect();
    fractions.sort_by(|a, b| b.total_cmp(a));
    let points: Vec<(f64, f64)> = fractions
        .into_iter()
        .enumerate()
        .map(|(rank, f)| ((rank + 1) as f64, f))
        .collect();
    fit_power_law_points(&points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_constructed_law() {
        let (c0, gamma) = (0.02, 1.5);
        let points: Vec<(f64, f64)> = [0.001, 0.004, 0.02, 0.1, 0.3, 0.9]
            .iter()
            .map(|&f: &f64| (f, c0 * f.powf(-gamma)))
            .collect();
        let fit = fit_power_law_points(&points).unwrap();
        assert!((fit.gamma - gamma).abs() < 1e-6);
        assert!((fit.c0 - c0).abs() / c0 < 1e-9);
        assert!(fit.residual_norm <= 1e-9);
    }

    #[test]
    fn flat_distribution() {
        let k = 5.0;
        let points = vec![(0.2, 1.0 / k); 5];
        let fit = fit_power_law_points(&points).unwrap();
        assert_eq!(fit.gamma, 0.0);
        assert!((fit.c0 - 1.0 / k).abs() < 1e-9);
        assert!(fit.residual_norm < 1e-12);
    }

    #[test]
    fn needs_three_points() {
        assert!(matches!(
            fit_power_law_points(&[(0.1, 0.2), (0.3, 0.4)]),
            Err(AnalysisError::InsufficientData(2))
        ));
        assert!(fit_power_law_points(&[(0.1, 0.2), (0.3, 0.0), (0.5, 0.1)]).is_err());
    }
}
