//! Exact decimal <-> rational conversions.
//!
//! Leaf values and thresholds arrive as decimal text (`-0.0536704734`,
//! `1.5e-08`) and are kept as [`Rational`] so that score comparisons near
//! ties are exact.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecimalError(pub String);

impl fmt::Display for DecimalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "not a decimal number: {:?}", self.0)
    }
}

impl std::error::Error for DecimalError {}

/// Parses `[+-]digits[.digits][(e|E)[+-]digits]` into an exact rational.
pub fn parse_decimal(text: &str) -> Result<Rational, DecimalError> {
    let err = || DecimalError(text.to_string());
    let s = text.trim();
    let (negative, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = body[pos + 1..].parse().map_err(|_| err())?;
            (&body[..pos], exp)
        }
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    if exponent.abs() > 4096 {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| err())? };
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10u8);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Renders a rational as a finite decimal when its denominator has only the
/// prime factors 2 and 5, otherwise as `n/d`.
pub fn format_exact(value: &Rational) -> String {
    match finite_decimal(value) {
        Some(s) => s,
        None => format!("{}/{}", value.numer(), value.denom()),
    }
}

/// Finite decimal expansion, if one exists.
pub fn finite_decimal(value: &Rational) -> Option<String> {
    let mut denom = value.denom().clone();
    let two = BigInt::from(2u8);
    let five = BigInt::from(5u8);
    let (mut twos, mut fives) = (0usize, 0usize);
    while denom.is_even() {
        denom /= &two;
        twos += 1;
    }
    while (&denom % &five).is_zero() {
        denom /= &five;
        fives += 1;
    }
    if !denom.is_one() {
        return None;
    }
    let places = twos.max(fives);
    let scaled = value * Rational::from_integer(num_traits::pow(BigInt::from(10u8), places));
    debug_assert!(scaled.is_integer());
    let numer = scaled.to_integer();
    let negative = numer.is_negative();
    let digits = numer.abs().to_string();
    let body = if places == 0 {
        digits
    } else if digits.len() > places {
        let (int, frac) = digits.split_at(digits.len() - places);
        format!("{int}.{frac}")
    } else {
        format!("0.{}{}", "0".repeat(places - digits.len()), digits)
    };
    Some(if negative { format!("-{body}") } else { body })
}

/// Lossy conversion for display and statistics only.
pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Rounds to `places` decimals, half away from zero.
pub fn round_to(value: &Rational, places: u32) -> Rational {
    let scale = Rational::from_integer(num_traits::pow(BigInt::from(10u8), places as usize));
    (value * &scale).round() / scale
}
