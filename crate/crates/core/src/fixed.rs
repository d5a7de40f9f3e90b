//! Directed fixed-point arithmetic on i128 values scaled by 2^frac_bits.
//!
//! Used on hot paths (the Garling dynamic program, long windowed-average
//! accumulations) where rational interval arithmetic is too slow. Every
//! rounding is outward, so [lo, hi] always encloses the true value.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::scalar::{Rat, RatInterval};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fx {
    pub lo: i128,
    pub hi: i128,
}

#[derive(Debug, Clone, Copy)]
pub struct FxCtx {
    pub frac_bits: u32,
}

/// Full 256-bit product of two i128 values, returned as (sign, hi, lo).
fn wide_mul(a: i128, b: i128) -> (bool, u128, u128) {
    let neg = (a < 0) != (b < 0);
    let a = a.unsigned_abs();
    let b = b.unsigned_abs();
    let (a0, a1) = (a & u64::MAX as u128, a >> 64);
    let (b0, b1) = (b & u64::MAX as u128, b >> 64);
    let ll = a0 * b0;
    let lh = a0 * b1;
    let hl = a1 * b0;
    let hh = a1 * b1;
    let mid = lh.wrapping_add(hl);
    let mid_carry = if mid < lh { 1u128 << 64 } else { 0 };
    let lo = ll.wrapping_add(mid << 64);
    let lo_carry = if lo < ll { 1u128 } else { 0 };
    let hi = hh + (mid >> 64) + mid_carry + lo_carry;
    (neg, hi, lo)
}

/// floor((a*b) / 2^shift) for the signed product, with saturation check.
fn mul_shift_floor(a: i128, b: i128, shift: u32) -> Result<i128> {
    let (neg, hi, lo) = wide_mul(a, b);
    // magnitude = hi*2^128 + lo; shift right by `shift`
    let (dropped, mag) = if shift == 0 {
        (0, lo)
    } else {
        (lo & ((1u128 << shift) - 1), (lo >> shift) | (hi << (128 - shift)))
    };
    if hi >> shift.min(127) != 0 {
        return Err(Error::PrecisionInsufficient("fixed-point overflow".into()));
    }
    let inexact = dropped != 0;
    if !neg {
        mag.to_i128()
            .ok_or_else(|| Error::PrecisionInsufficient("fixed-point overflow".into()))
    } else {
        let m = mag
            .to_i128()
            .ok_or_else(|| Error::PrecisionInsufficient("fixed-point overflow".into()))?;
        Ok(if inexact { -m - 1 } else { -m })
    }
}

fn mul_shift_ceil(a: i128, b: i128, shift: u32) -> Result<i128> {
    let f = mul_shift_floor(a, b, shift)?;
    let (_, _, lo) = wide_mul(a, b);
    let exact = shift == 0 || lo & ((1u128 << shift) - 1) == 0;
    Ok(if exact { f } else { f + 1 })
}

impl FxCtx {
    pub fn new(frac_bits: u32) -> Self {
        FxCtx { frac_bits }
    }

    /// Picks frac_bits so that products of values bounded by `max_abs`
    /// with values bounded by 1 fit in i128.
    pub fn for_magnitude(max_abs: &Rat) -> Result<Self> {
        let mut int_bits = 1u32;
        let m = max_abs.abs().ceil().to_integer();
        let mag = m.magnitude();
        int_bits += mag.bits() as u32;
        if int_bits + 40 > 126 {
            return Err(Error::PrecisionInsufficient(
                "magnitude too large for fixed-point path".into(),
            ));
        }
        // products: (S*2^F)*(1*2^F) >> F must stay below 2^126
        let frac = (126 - int_bits) / 2;
        Ok(FxCtx { frac_bits: frac.min(62) })
    }

    pub fn scale(&self) -> BigInt {
        BigInt::one() << self.frac_bits
    }

    /// Outward-rounded conversion of an exact rational.
    pub fn from_rat(&self, v: &Rat) -> Result<Fx> {
        let scaled = v * Rat::from_integer(self.scale());
        let lo = scaled.floor().to_integer();
        let hi = scaled.ceil().to_integer();
        let lo = lo
            .to_i128()
            .ok_or_else(|| Error::PrecisionInsufficient("fixed-point overflow".into()))?;
        let hi = hi
            .to_i128()
            .ok_or_else(|| Error::PrecisionInsufficient("fixed-point overflow".into()))?;
        Ok(Fx { lo, hi })
    }

    pub fn from_interval(&self, v: &RatInterval) -> Result<Fx> {
        let lo = self.from_rat(&v.lo)?.lo;
        let hi = self.from_rat(&v.hi)?.hi;
        Ok(Fx { lo, hi })
    }

    pub fn to_interval(&self, v: Fx) -> RatInterval {
        let s = Rat::from_integer(self.scale());
        RatInterval::new(
            Rat::from_integer(BigInt::from(v.lo)) / s.clone(),
            Rat::from_integer(BigInt::from(v.hi)) / s,
        )
    }

    pub fn zero(&self) -> Fx {
        Fx { lo: 0, hi: 0 }
    }

    /// Exact addition (fixed-point addition does not round).
    pub fn add(&self, a: Fx, b: Fx) -> Fx {
        Fx { lo: a.lo + b.lo, hi: a.hi + b.hi }
    }

    pub fn mul(&self, a: Fx, b: Fx) -> Result<Fx> {
        let cands_lo = [
            mul_shift_floor(a.lo, b.lo, self.frac_bits)?,
            mul_shift_floor(a.lo, b.hi, self.frac_bits)?,
            mul_shift_floor(a.hi, b.lo, self.frac_bits)?,
            mul_shift_floor(a.hi, b.hi, self.frac_bits)?,
        ];
        let cands_hi = [
            mul_shift_ceil(a.lo, b.lo, self.frac_bits)?,
            mul_shift_ceil(a.lo, b.hi, self.frac_bits)?,
            mul_shift_ceil(a.hi, b.lo, self.frac_bits)?,
            mul_shift_ceil(a.hi, b.hi, self.frac_bits)?,
        ];
        Ok(Fx {
            lo: *cands_lo.iter().min().unwrap(),
            hi: *cands_hi.iter().max().unwrap(),
        })
    }

    pub fn max(&self, a: Fx, b: Fx) -> Fx {
        Fx { lo: a.lo.max(b.lo), hi: a.hi.max(b.hi) }
    }

    /// Enclosure of 1/sqrt(j).
    pub fn inv_sqrt(&self, j: u64) -> Fx {
        debug_assert!(j >= 1);
        // floor(2^F / sqrt(j)) = floor(sqrt(2^{2F} / j)) bounded via isqrt.
        let num: BigUint = BigUint::one() << (2 * self.frac_bits);
        let q = &num / BigUint::from(j);
        let lo = q.sqrt();
        let hi = (&q + BigUint::one()).sqrt() + BigUint::one();
        Fx {
            lo: lo.to_i128().unwrap_or(i128::MAX),
            hi: hi.to_i128().unwrap_or(i128::MAX),
        }
    }

    /// Enclosure of 1/n.
    pub fn recip(&self, n: u64) -> Fx {
        debug_assert!(n >= 1);
        let num: u128 = 1u128 << self.frac_bits;
        let lo = (num / n as u128) as i128;
        let hi = if num % n as u128 == 0 { lo } else { lo + 1 };
        Fx { lo, hi }
    }

    /// Exact scaling by 1/d where both endpoints divide the scale shift;
    /// rounds outward.
    pub fn div_nat(&self, a: Fx, d: u64) -> Fx {
        let d = d as i128;
        let lo = a.lo.div_euclid(d);
        let hi = if a.hi.rem_euclid(d) == 0 {
            a.hi / d
        } else {
            a.hi.div_euclid(d) + 1
        };
        Fx { lo, hi }
    }
}
