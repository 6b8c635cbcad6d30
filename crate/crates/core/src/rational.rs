//! Exact rational carrier shared by every engine.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational in canonical (gcd-reduced, positive denominator) form.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational literal `{0}`")]
pub struct RationalParseError(pub String);

/// Builds `num/den`. Panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `p/q`, a signed integer, or a finite decimal such as `0.9`.
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let s = text.trim();
    let err = || RationalParseError(text.to_string());
    if s.is_empty() {
        return Err(err());
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let negative = whole.starts_with('-');
        let digits = whole.trim_start_matches(['-', '+']);
        if !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let mantissa = BigInt::from_str(&format!("{}{}", if digits.is_empty() { "0" } else { digits }, frac))
            .map_err(|_| err())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let value = Rational::new(mantissa, scale);
        return Ok(if negative { -value } else { value });
    }
    let value = Rational::from_str(s).map_err(|_| err())?;
    Ok(value)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Huge numerators/denominators: fall back to a scaled division.
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Renders `p/q`, or just `p` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Smallest integer `>= r`.
pub fn ceil_to_usize(r: &Rational) -> usize {
    r.ceil().to_integer().to_usize().unwrap_or(usize::MAX)
}

pub fn is_nonnegative(r: &Rational) -> bool {
    !r.is_negative()
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Integer power of a rational.
pub fn pow(base: &Rational, exp: u32) -> Rational {
    num_traits::pow(base.clone(), exp as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse_rational("3/2").unwrap(), rat(3, 2));
        assert_eq!(parse_rational("-4").unwrap(), int(-4));
        assert_eq!(parse_rational("0.9").unwrap(), rat(9, 10));
        assert_eq!(parse_rational("6/4").unwrap(), rat(3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.").is_err());
    }

    #[test]
    fn formats_canonically() {
        assert_eq!(format_rational(&rat(2, 4)), "1/2");
        assert_eq!(format_rational(&int(3)), "3");
        assert_eq!(format_rational(&rat(-7, 30)), "-7/30");
    }

    #[test]
    fn ceil_rounds_up() {
        assert_eq!(ceil_to_usize(&rat(3, 1)), 3);
        assert_eq!(ceil_to_usize(&rat(7, 2)), 4);
    }
}
