//! Scalar repeat-factor formulas and their analytic derivatives.
//!
//! All three methods share the inner value
//!
//! ```text
//! s = sqrt(t / g)      with g = f_c (RFS) or g = sqrt(f_i * f_b) (IRFS, E-IRFS)
//! ```
//!
//! RFS and IRFS clamp it as `max(1, s)`; E-IRFS maps it through
//! `exp(alpha * s)` with no clamp.

use crate::error::FactorError;

/// Largest exponent whose `exp` is finite in f64 (`ln(f64::MAX)`).
pub const MAX_EXP_ARG: f64 = 709.782_712_893_384;

pub(crate) fn check_fraction(name: &'static str, f: f64) -> Result<(), FactorError> {
    if f.is_finite() && f > 0.0 {
        Ok(())
    } else {
        Err(FactorError::Domain {
            name,
            expected: "a finite value > 0",
            value: f,
        })
    }
}

pub(crate) fn check_threshold(t: f64) -> Result<(), FactorError> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(FactorError::Domain {
            name: "threshold t",
            expected: "in (0, 1]",
            value: t,
        })
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<(), FactorError> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(FactorError::Domain {
            name: "alpha",
            expected: "a finite value > 0",
            value: alpha,
        })
    }
}

/// RFS: `max(1, sqrt(t / f_c))`.
pub fn rfs_factor(f_c: f64, t: f64) -> Result<f64, FactorError> {
    check_fraction("f_c", f_c)?;
    check_threshold(t)?;
    Ok((t / f_c).sqrt().max(1.0))
}

/// Unclamped IRFS value `sqrt(t / sqrt(f_i * f_b))`.
pub fn irfs_inner(f_i: f64, f_b: f64, t: f64) -> Result<f64, FactorError> {
    check_fraction("f_i", f_i)?;
    check_fraction("f_b", f_b)?;
    check_threshold(t)?;
    Ok((t / (f_i * f_b).sqrt()).sqrt())
}

/// IRFS: `max(1, sqrt(t / sqrt(f_i * f_b)))`.
pub fn irfs_factor(f_i: f64, f_b: f64, t: f64) -> Result<f64, FactorError> {
    Ok(irfs_inner(f_i, f_b, t)?.max(1.0))
}

/// E-IRFS: `exp(alpha * sqrt(t / sqrt(f_i * f_b)))`.
///
/// Overflow of `exp` is reported, never saturated to infinity.
pub fn eirfs_factor(f_i: f64, f_b: f64, t: f64, alpha: f64) -> Result<f64, FactorError> {
    check_alpha(alpha)?;
    let x = alpha * irfs_inner(f_i, f_b, t)?;
    let r = x.exp();
    if r.is_finite() {
        Ok(r)
    } else {
        Err(FactorError::Overflow { exponent: x })
    }
}

/// Exact `d r / d f_i` of the E-IRFS factor with `f_b`, `t`, `alpha` held
/// fixed.
///
/// With `s' = -s / (4 f_i)` this is `alpha * r * s'`, which is negative for
/// every valid input.
pub fn eirfs_first_derivative(f_i: f64, f_b: f64, t: f64, alpha: f64) -> Result<f64, FactorError> {
    let r = eirfs_factor(f_i, f_b, t, alpha)?;
    let s = irfs_inner(f_i, f_b, t)?;
    Ok(-alpha * r * s / (4.0 * f_i))
}

/// Exact `d² r / d f_i²` of the E-IRFS factor.
///
/// Equals `alpha * r * (alpha * s'^2 + s'')` with `s'' = 5 s / (16 f_i^2)`;
/// both terms are positive, so the factor is convex in `f_i`.
pub fn eirfs_second_derivative(f_i: f64, f_b: f64, t: f64, alpha: f64) -> Result<f64, FactorError> {
    let r = eirfs_factor(f_i, f_b, t, alpha)?;
    let s = irfs_inner(f_i, f_b, t)?;
    Ok(alpha * r * s * (alpha * s + 5.0) / (16.0 * f_i * f_i))
}
