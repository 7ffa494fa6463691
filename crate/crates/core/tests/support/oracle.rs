//! Arbitrary-precision reference evaluation of the repeat-factor formulas.
//!
//! Values are unsigned fixed-point integers with `FRAC` fractional bits.
//! Every f64 input is a dyadic rational that converts exactly, so the only
//! error is truncation at 2^-256, far below f64 resolution.

#![allow(dead_code)]

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

pub const FRAC: u32 = 256;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fixed(pub BigUint);

impl Fixed {
    pub fn one() -> Self {
        Fixed(BigUint::one() << FRAC)
    }

    pub fn from_ratio(num: u64, den: u64) -> Self {
        Fixed((BigUint::from(num) << FRAC) / BigUint::from(den))
    }

    /// Exact conversion of a positive finite f64.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite() && x > 0.0, "oracle input {x}");
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mantissa, e) = if exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp - 1075)
        };
        let shift = e + FRAC as i64;
        assert!(shift >= 0, "{x} below oracle resolution");
        Fixed(BigUint::from(mantissa) << shift as u64)
    }

    pub fn mul(&self, o: &Fixed) -> Fixed {
        Fixed((&self.0 * &o.0) >> FRAC)
    }

    pub fn div(&self, o: &Fixed) -> Fixed {
        Fixed((&self.0 << FRAC) / &o.0)
    }

    pub fn sqrt(&self) -> Fixed {
        Fixed((&self.0 << FRAC).sqrt())
    }

    pub fn max(self, o: Fixed) -> Fixed {
        if self >= o {
            self
        } else {
            o
        }
    }

    /// `exp(self)` by halving until the argument is below 2^-16, a Taylor
    /// series, then repeated squaring.
    pub fn exp(&self) -> Fixed {
        let target = FRAC - 16;
        let bits = self.0.bits() as u32;
        let k = bits.saturating_sub(target);
        let y = Fixed(&self.0 >> k);
        let mut sum = Fixed::one();
        let mut term = Fixed::one();
        let mut n = 1u32;
        loop {
            term = Fixed(term.mul(&y).0 / BigUint::from(n));
            if term.0.is_zero() {
                break;
            }
            sum = Fixed(sum.0 + &term.0);
            n += 1;
        }
        for _ in 0..k {
            sum = sum.mul(&sum);
        }
        sum
    }

    pub fn to_f64(&self) -> f64 {
        // enough leading bits for correct rounding up to one ulp
        let bits = self.0.bits();
        if bits <= 960 {
            self.0.to_f64().unwrap() / 2f64.powi(FRAC as i32)
        } else {
            let drop = bits - 960;
            (&self.0 >> drop).to_f64().unwrap() / 2f64.powi(FRAC as i32) * 2f64.powi(drop as i32)
        }
    }

    /// `|x - self| / self` computed exactly, then rounded to f64.
    pub fn rel_error(&self, x: f64) -> f64 {
        let other = Fixed::from_f64(x).0;
        let diff = if other >= self.0 { other - &self.0 } else { &self.0 - other };
        let scaled = (diff << 96u32) / &self.0;
        scaled.to_f64().unwrap() / 2f64.powi(96)
    }
}

/// `sqrt(t / f)` and `max(1, ·)`.
pub fn rfs(f: &Fixed, t: &Fixed) -> Fixed {
    t.div(f).sqrt().max(Fixed::one())
}

/// `sqrt(t / sqrt(f_i * f_b))`, unclamped.
pub fn irfs_inner(fi: &Fixed, fb: &Fixed, t: &Fixed) -> Fixed {
    t.div(&fi.mul(fb).sqrt()).sqrt()
}

pub fn irfs(fi: &Fixed, fb: &Fixed, t: &Fixed) -> Fixed {
    irfs_inner(fi, fb, t).max(Fixed::one())
}

pub fn eirfs(fi: &Fixed, fb: &Fixed, t: &Fixed, alpha: &Fixed) -> Fixed {
    alpha.mul(&irfs_inner(fi, fb, t)).exp()
}
