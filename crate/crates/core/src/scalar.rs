//! Exact rational scalars and directed-rounding rational intervals.
//!
//! Exact values stay rational; the irrational functions (sqrt, nth root,
//! ln, pi) return rational enclosures computed with directed rounding at a
//! requested number of significant decimal digits.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Mutex;

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;

use crate::error::{Error, Result};

pub type Rat = num_rational::BigRational;

/// Working precision in significant decimal digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Prec(pub u32);

impl Prec {
    pub const DEFAULT: Prec = Prec(50);

    pub fn bits(self) -> usize {
        // 10^d needs ~3.33 bits per digit; add guard bits.
        (self.0 as usize) * 10 / 3 + 32
    }
}

pub fn rat_from_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_from_biguint(n: &BigUint) -> Rat {
    Rat::from_integer(BigInt::from(n.clone()))
}

/// Closed rational interval, lo <= hi.
#[derive(Debug, Clone, PartialEq)]
pub struct RatInterval {
    pub lo: Rat,
    pub hi: Rat,
}

impl RatInterval {
    pub fn point(v: Rat) -> Self {
        RatInterval { lo: v.clone(), hi: v }
    }

    pub fn new(lo: Rat, hi: Rat) -> Self {
        debug_assert!(lo <= hi, "interval endpoints out of order");
        RatInterval { lo, hi }
    }

    pub fn zero() -> Self {
        Self::point(Rat::zero())
    }

    pub fn one() -> Self {
        Self::point(Rat::one())
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rat {
        (&self.lo + &self.hi) / rat_from_int(2)
    }

    pub fn contains_rat(&self, v: &Rat) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn intersects(&self, o: &RatInterval) -> bool {
        self.lo <= o.hi && o.lo <= self.hi
    }

    pub fn hull(&self, o: &RatInterval) -> RatInterval {
        RatInterval {
            lo: self.lo.clone().min(o.lo.clone()),
            hi: self.hi.clone().max(o.hi.clone()),
        }
    }

    pub fn add(&self, o: &RatInterval) -> RatInterval {
        RatInterval { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    pub fn sub(&self, o: &RatInterval) -> RatInterval {
        RatInterval { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo }
    }

    pub fn neg(&self) -> RatInterval {
        RatInterval { lo: -self.hi.clone(), hi: -self.lo.clone() }
    }

    pub fn mul(&self, o: &RatInterval) -> RatInterval {
        let cands = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let mut lo = cands[0].clone();
        let mut hi = cands[0].clone();
        for c in &cands[1..] {
            if *c < lo {
                lo = c.clone();
            }
            if *c > hi {
                hi = c.clone();
            }
        }
        RatInterval { lo, hi }
    }

    pub fn scale(&self, r: &Rat) -> RatInterval {
        if r.is_negative() {
            RatInterval { lo: &self.hi * r, hi: &self.lo * r }
        } else {
            RatInterval { lo: &self.lo * r, hi: &self.hi * r }
        }
    }

    /// Division; the divisor interval must not contain zero.
    pub fn div(&self, o: &RatInterval) -> Result<RatInterval> {
        if o.lo <= Rat::zero() && o.hi >= Rat::zero() {
            return Err(Error::PrecisionInsufficient(
                "interval division by an interval containing zero".into(),
            ));
        }
        let inv = RatInterval { lo: o.hi.recip(), hi: o.lo.recip() };
        Ok(self.mul(&inv))
    }

    pub fn abs(&self) -> RatInterval {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            let hi = (-self.lo.clone()).max(self.hi.clone());
            RatInterval { lo: Rat::zero(), hi }
        }
    }

    pub fn max(&self, o: &RatInterval) -> RatInterval {
        RatInterval {
            lo: self.lo.clone().max(o.lo.clone()),
            hi: self.hi.clone().max(o.hi.clone()),
        }
    }

    pub fn min(&self, o: &RatInterval) -> RatInterval {
        RatInterval {
            lo: self.lo.clone().min(o.lo.clone()),
            hi: self.hi.clone().min(o.hi.clone()),
        }
    }

    /// Certified total comparison: `None` when the intervals overlap
    /// without being identical points.
    pub fn try_cmp(&self, o: &RatInterval) -> Option<Ordering> {
        if self.is_point() && o.is_point() && self.lo == o.lo {
            return Some(Ordering::Equal);
        }
        if self.hi < o.lo {
            Some(Ordering::Less)
        } else if self.lo > o.hi {
            Some(Ordering::Greater)
        } else {
            None
        }
    }
}

impl fmt::Display for RatInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

/// floor(sqrt(n)) wrapper; `BigUint::sqrt` already floors.
fn isqrt(n: &BigUint) -> BigUint {
    n.sqrt()
}

/// Enclosure of sqrt(x) for x >= 0 with absolute error ~10^-digits.
pub fn sqrt_rat(x: &Rat, prec: Prec) -> Result<RatInterval> {
    if x.is_negative() {
        return Err(Error::InvalidInput("sqrt of negative rational".into()));
    }
    if x.is_zero() {
        return Ok(RatInterval::zero());
    }
    let a = x.numer().magnitude();
    let b = x.denom().magnitude();
    let scale = BigUint::from(10u32).pow(prec.0);
    // sqrt(a/b) = sqrt(a*b) / b
    let n = a * b * (&scale * &scale);
    let r = isqrt(&n);
    let denom = BigInt::from(x.denom().magnitude() * &scale);
    let lo = Rat::new(BigInt::from(r.clone()), denom.clone());
    let hi = Rat::new(BigInt::from(r + BigUint::one()), denom);
    Ok(RatInterval { lo, hi })
}

/// Enclosure of x^(1/k) for x >= 0.
pub fn nth_root_rat(x: &Rat, k: u32, prec: Prec) -> Result<RatInterval> {
    if x.is_negative() {
        return Err(Error::InvalidInput("root of negative rational".into()));
    }
    if k == 0 {
        return Err(Error::InvalidInput("zeroth root".into()));
    }
    if x.is_zero() {
        return Ok(RatInterval::zero());
    }
    let a = x.numer().magnitude();
    let b = x.denom().magnitude();
    let scale = BigUint::from(10u32).pow(prec.0);
    // (a/b)^(1/k) = (a*b^(k-1))^(1/k) / b
    let n = a * b.pow(k - 1) * scale.pow(k);
    let r = n.nth_root(k);
    let denom = BigInt::from(b * &scale);
    let lo = Rat::new(BigInt::from(r.clone()), denom.clone());
    let hi = Rat::new(BigInt::from(r + BigUint::one()), denom);
    Ok(RatInterval { lo, hi })
}

/// Enclosure of the interval square root: [sqrt(lo), sqrt(hi)] widened.
pub fn sqrt_interval(x: &RatInterval, prec: Prec) -> Result<RatInterval> {
    let lo = sqrt_rat(&x.lo, prec)?;
    let hi = sqrt_rat(&x.hi, prec)?;
    Ok(RatInterval { lo: lo.lo, hi: hi.hi })
}

static CONSTS: Lazy<Mutex<Consts>> = Lazy::new(|| Mutex::new(Consts::new().expect("consts cache")));

fn bigfloat_to_rat(f: &BigFloat) -> Result<Rat> {
    if f.is_zero() {
        return Ok(Rat::zero());
    }
    let (words, _len, sign, exp, _inexact) = f
        .as_raw_parts()
        .ok_or_else(|| Error::PrecisionInsufficient("nan in bigfloat conversion".into()))?;
    let mut m = BigUint::zero();
    for w in words.iter().rev() {
        m = (m << 64) | BigUint::from(*w);
    }
    let total_bits = (words.len() * 64) as i64;
    let e = exp as i64 - total_bits;
    let mut v = Rat::from_integer(BigInt::from(m));
    if e >= 0 {
        v *= Rat::from_integer(BigInt::from(2u32).pow(e as u32));
    } else {
        v /= Rat::from_integer(BigInt::from(2u32).pow((-e) as u32));
    }
    if sign == Sign::Neg {
        v = -v;
    }
    Ok(v)
}

fn biguint_to_bigfloat(n: &BigUint, bits: usize) -> BigFloat {
    let p = bits.max(n.bits() as usize + 64);
    let mut cc = CONSTS.lock().unwrap();
    BigFloat::parse(&n.to_string(), Radix::Dec, p, RoundingMode::None, &mut cc)
}

/// Enclosure of ln(x) for x > 0.
pub fn ln_rat(x: &Rat, prec: Prec) -> Result<RatInterval> {
    if !x.is_positive() {
        return Err(Error::InvalidInput("ln of non-positive rational".into()));
    }
    if x.is_one() {
        return Ok(RatInterval::zero());
    }
    let bits = prec.bits();
    let num = biguint_to_bigfloat(x.numer().magnitude(), bits);
    let den = biguint_to_bigfloat(x.denom().magnitude(), bits);
    let mut cc = CONSTS.lock().unwrap();
    let q_lo = num.div(&den, bits, RoundingMode::Down);
    let q_hi = num.div(&den, bits, RoundingMode::Up);
    let l_lo = q_lo.ln(bits, RoundingMode::Down, &mut cc);
    let l_hi = q_hi.ln(bits, RoundingMode::Up, &mut cc);
    drop(cc);
    let mut lo = bigfloat_to_rat(&l_lo)?;
    let mut hi = bigfloat_to_rat(&l_hi)?;
    // One extra ulp of slack on each side against any internal rounding.
    let ulp = Rat::new(BigInt::one(), BigInt::from(2u32)).pow(bits as i32 - 2)
        * (hi.abs().max(Rat::one()));
    lo -= &ulp;
    hi += &ulp;
    Ok(RatInterval { lo, hi })
}

/// Enclosure of ln over an interval of positive rationals.
pub fn ln_interval(x: &RatInterval, prec: Prec) -> Result<RatInterval> {
    let lo = ln_rat(&x.lo, prec)?;
    let hi = ln_rat(&x.hi, prec)?;
    Ok(RatInterval { lo: lo.lo, hi: hi.hi })
}

/// Enclosure of pi.
pub fn pi(prec: Prec) -> RatInterval {
    let bits = prec.bits();
    let mut cc = CONSTS.lock().unwrap();
    let p_lo = cc.pi(bits, RoundingMode::Down);
    let p_hi = cc.pi(bits, RoundingMode::Up);
    drop(cc);
    let mut lo = bigfloat_to_rat(&p_lo).expect("pi conversion");
    let mut hi = bigfloat_to_rat(&p_hi).expect("pi conversion");
    let ulp = Rat::new(BigInt::one(), BigInt::from(2u32)).pow(bits as i32 - 3);
    lo -= &ulp;
    hi += &ulp;
    RatInterval { lo, hi }
}

/// Enclosure of ln(n) for a big natural n >= 1.
pub fn ln_nat(n: &BigUint, prec: Prec) -> Result<RatInterval> {
    ln_rat(&rat_from_biguint(n), prec)
}

// ---------------------------------------------------------------------------
// decimal string parsing / formatting
// ---------------------------------------------------------------------------

/// Parses "123", "-1.25", "1.25e-3" or "p/q" into an exact rational.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::InvalidInput("empty numeric string".into()));
    }
    if let Some((p, q)) = s.split_once('/') {
        let num: BigInt = p
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad numerator: {p}")))?;
        let den: BigInt = q
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad denominator: {q}")))?;
        if den.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        return Ok(Rat::new(num, den));
    }
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => {
            let e: i64 = e
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad exponent: {e}")))?;
            (m, e)
        }
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() || digits == "-" || digits == "+" {
        return Err(Error::InvalidInput(format!("bad number: {s}")));
    }
    let num: BigInt = digits
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad number: {s}")))?;
    let shift = exp - frac_part.len() as i64;
    let mut v = Rat::from_integer(num);
    let ten = Rat::from_integer(BigInt::from(10));
    if shift >= 0 {
        v *= ten.pow(shift as i32);
    } else {
        v /= ten.pow((-shift) as i32);
    }
    Ok(v)
}

/// Exact decimal string when the denominator is of the form 2^a 5^b,
/// otherwise "p/q". Round-trips through `parse_rat`.
pub fn format_rat(v: &Rat) -> String {
    let den = v.denom().magnitude().clone();
    let mut d = den.clone();
    let two = BigUint::from(2u32);
    let five = BigUint::from(5u32);
    let mut a = 0u32;
    let mut b = 0u32;
    while (&d % &two).is_zero() {
        d /= &two;
        a += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        b += 1;
    }
    if !d.is_one() {
        return format!("{}/{}", v.numer(), v.denom());
    }
    let shift = a.max(b);
    let scaled = v.numer() * BigInt::from(10u32).pow(shift) / BigInt::from(den);
    let neg = scaled.is_negative();
    let digits = scaled.magnitude().to_string();
    let shift = shift as usize;
    let body = if shift == 0 {
        digits
    } else if digits.len() > shift {
        let (i, f) = digits.split_at(digits.len() - shift);
        let f = f.trim_end_matches('0');
        if f.is_empty() {
            i.to_string()
        } else {
            format!("{i}.{f}")
        }
    } else {
        let f = format!("{}{}", "0".repeat(shift - digits.len()), digits);
        let f = f.trim_end_matches('0');
        if f.is_empty() {
            "0".to_string()
        } else {
            format!("0.{f}")
        }
    };
    if neg && body != "0" {
        format!("-{body}")
    } else {
        body
    }
}

/// Decimal string with `digits` significant digits, rounded in the given
/// direction (`true` = toward +inf).
pub fn format_rat_directed(v: &Rat, digits: u32, up: bool) -> String {
    if v.is_zero() {
        return "0".to_string();
    }
    // Find decimal exponent k with 10^k <= |v| < 10^(k+1).
    let ten = Rat::from_integer(BigInt::from(10));
    let mut k: i64 = 0;
    let av = v.abs();
    let mut probe = Rat::one();
    if av >= Rat::one() {
        while &probe * &ten <= av {
            probe *= &ten;
            k += 1;
        }
    } else {
        while probe > av {
            probe /= &ten;
            k -= 1;
        }
    }
    let shift = digits as i64 - 1 - k;
    let scaled = if shift >= 0 {
        v * ten.pow(shift as i32)
    } else {
        v / ten.pow((-shift) as i32)
    };
    let (fl, ceil) = (scaled.floor(), scaled.ceil());
    let n = if up { ceil } else { fl }.to_integer();
    let r = Rat::from_integer(n) / ten.pow(shift.max(i32::MIN as i64) as i32);
    format_rat(&r)
}

/// Approximate f64 view (for logs / human-readable reports only).
pub fn rat_to_f64(v: &Rat) -> f64 {
    v.numer().to_f64().unwrap_or(f64::NAN) / v.denom().to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(s: &str) -> Rat {
        parse_rat(s).unwrap()
    }

    #[test]
    fn sqrt_two_enclosure() {
        let i = sqrt_rat(&rat("2"), Prec(50)).unwrap();
        assert!(i.contains_rat(&rat(
            "1.414213562373095048801688724209698078569671875376948073176679737990732"
        )));
        assert!(i.width() < rat("1e-49"));
    }

    #[test]
    fn ln_two_enclosure() {
        // ln 2 = 0.69314718055994530941723212145817656807550013436026...
        let i = ln_rat(&rat("2"), Prec(50)).unwrap();
        assert!(i.contains_rat(&rat(
            "0.6931471805599453094172321214581765680755001343602552541206800094933936"
        )));
        assert!(i.width() < rat("1e-45"));
    }

    #[test]
    fn ln_big_argument() {
        // ln(10^32) = 32 ln 10 = 73.68297042723499707928404004742368...
        let n = BigUint::from(10u32).pow(32);
        let i = ln_nat(&n, Prec(50)).unwrap();
        assert!(i.contains_rat(&rat("73.68272297580946188857572654989965464323524763612073523306649283096232")));
    }

    #[test]
    fn pi_enclosure() {
        let i = pi(Prec(50));
        assert!(i.contains_rat(&rat(
            "3.141592653589793238462643383279502884197169399375105820974944592307816"
        )));
        assert!(i.width() < rat("1e-45"));
    }

    #[test]
    fn nth_root_enclosure() {
        let i = nth_root_rat(&rat("8"), 3, Prec(40)).unwrap();
        assert!(i.contains_rat(&rat("2")));
        assert!(i.width() < rat("1e-39"));
    }

    #[test]
    fn format_and_parse_round_trip() {
        for s in ["0", "1", "-1.25", "0.001", "10/3", "-7/12", "123456.789"] {
            let v = rat(s);
            let out = format_rat(&v);
            assert_eq!(parse_rat(&out).unwrap(), v, "round trip failed for {s}");
        }
        assert_eq!(format_rat(&rat("1/4")), "0.25");
        assert_eq!(format_rat(&rat("1/3")), "1/3");
    }

    #[test]
    fn directed_decimal_formatting() {
        let v = rat("1/3");
        let lo = parse_rat(&format_rat_directed(&v, 5, false)).unwrap();
        let hi = parse_rat(&format_rat_directed(&v, 5, true)).unwrap();
        assert!(lo <= v && v <= hi);
        assert!(&hi - &lo <= rat("1e-5"));
    }

    #[test]
    fn interval_algebra() {
        let a = RatInterval::new(rat("1"), rat("2"));
        let b = RatInterval::new(rat("-1"), rat("3"));
        let p = a.mul(&b);
        assert_eq!(p.lo, rat("-2"));
        assert_eq!(p.hi, rat("6"));
        assert_eq!(a.try_cmp(&RatInterval::point(rat("5"))), Some(Ordering::Less));
        assert_eq!(a.try_cmp(&b), None);
        let x = RatInterval::new(rat("-2"), rat("1"));
        let ax = x.abs();
        assert_eq!(ax.lo, rat("0"));
        assert_eq!(ax.hi, rat("2"));
    }
}
