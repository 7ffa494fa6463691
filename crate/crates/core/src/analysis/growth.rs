//! Growth-rate diagnostics for the three repeat-factor laws.
//!
//! | method | regressed                           | expected slope |
//! |--------|-------------------------------------|----------------|
//! | RFS    | `ln r` on `ln f_i`                  | `-1/2`         |
//! | IRFS   | `ln r` on `ln (f_i f_b)`            | `-1/4`         |
//! | E-IRFS | `ln r` on `(f_i f_b)^(-1/4)`        | `alpha sqrt t` |
//!
//! RFS and IRFS only follow their law outside the clamp, so probe points
//! whose unclamped value is below 1 are rejected.

use serde::Serialize;

use super::regression::fit_line;
use crate::error::AnalysisError;
use crate::factors::{eirfs_factor, irfs_factor, irfs_inner, rfs_factor, Method, RebalanceConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthDiagnostic {
    pub method: Method,
    pub slope: f64,
    pub intercept: f64,
    pub expected_slope: f64,
    pub residual_norm: f64,
    pub points: usize,
}

impl GrowthDiagnostic {
    pub fn slope_error(&self) -> f64 {
        (self.slope - self.expected_slope).abs()
    }
}

/// `n` points geometrically spaced over `[lo, hi]`; both endpoints exact.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 2);
    let step = (hi / lo).ln() / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|k| lo * (step * k as f64).exp()).collect();
    grid[n - 1] = hi;
    grid
}

/// Regresses the configured law over `probe`, a list of `(f_i, f_b)`
/// pairs. RFS ignores `f_b`.
pub fn growth_diagnostic(config: &RebalanceConfig, probe: &[(f64, f64)]) -> Result<GrowthDiagnostic, AnalysisError> {
    config.validate()?;
    let t = config.threshold;
    let mut xs = Vec::with_capacity(probe.len());
    let mut ys = Vec::with_capacity(probe.len());
    let mut clamped = Vec::new();

    let expected_slope = match config.method {
        Method::Baseline => {
            return Err(AnalysisError::InvalidArgument(
                "baseline has no growth law".into(),
            ))
        }
        Method::Rfs => {
            for &(fi, _) in probe {
                let r = rfs_factor(fi, t)?;
                if t / fi < 1.0 {
                    clamped.push(format!("f_i={fi}"));
                }
                xs.push(fi.ln());
                ys.push(r.ln());
            }
            -0.5
        }
        Method::Irfs => {
            for &(fi, fb) in probe {
                let r = irfs_factor(fi, fb, t)?;
                if irfs_inner(fi, fb, t)? < 1.0 {
                    clamped.push(format!("(f_i={fi}, f_b={fb})"));
                }
                xs.push((fi * fb).ln());
                ys.push(r.ln());
            }
            -0.25
        }
        Method::Eirfs => {
            let alpha = config.alpha.unwrap_or_default();
            for &(fi, fb) in probe {
                xs.push((fi * fb).powf(-0.25));
                ys.push(eirfs_factor(fi, fb, t, alpha)?.ln());
            }
            alpha * t.sqrt()
        }
    };
    if !clamped.is_empty() {
        return Err(AnalysisError::ClampedProbe(clamped));
    }
    let fit = fit_line(&xs, &ys).ok_or_else(|| {
        AnalysisError::InvalidArgument("probe grid needs at least two distinct points".into())
    })?;
    Ok(GrowthDiagnostic {
        method: config.method,
        slope: fit.slope,
        intercept: fit.intercept,
        expected_slope,
        residual_norm: fit.residual_norm,
        points: probe.len(),
    })
}
