//! Exact rational helpers.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Parses `p/q`, an integer, or a plain decimal such as `0.02`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::domain(format!("invalid rational {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let den = BigInt::from(10u8).pow(frac.len() as u32);
    let r = Rational::new(num, den);
    Ok(if neg { -r } else { r })
}

pub fn to_f64(r: &Rational) -> f64 {
    // Scale to keep precision for tiny values.
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

pub fn from_u64s(num: u64, den: u64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn from_biguints(num: &BigUint, den: &BigUint) -> Rational {
    Rational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

pub fn half() -> Rational {
    Rational::new(BigInt::one(), BigInt::from(2u8))
}

pub fn abs_diff(a: &Rational, b: &Rational) -> Rational {
    (a - b).abs()
}

/// Canonical `num/den` text.
pub fn to_text(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}
