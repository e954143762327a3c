//! Numeric field abstraction shared by the floating-point and exact solvers.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational used by the exact solver.
pub type Rational = BigRational;

/// An ordered field the simplex kernel can pivot over.
///
/// `f64` works with tolerances; [`Rational`] is exact and every tolerance
/// collapses to zero.
pub trait Scalar:
    Clone
    + PartialOrd
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Whether arithmetic is exact (no rounding).
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(value: f64) -> Self;
    fn to_f64(&self) -> f64;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// A key that is equal for bitwise/exactly equal values, used for bucketing.
    fn bucket_key(&self) -> u64;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(value: f64) -> Self {
        value
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn bucket_key(&self) -> u64 {
        // -0.0 and 0.0 must land in the same bucket
        if *self == 0.0 {
            0
        } else {
            self.to_bits()
        }
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_f64(value: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(value).expect("non-finite value cannot be made rational")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn bucket_key(&self) -> u64 {
        Scalar::to_f64(self).to_bits()
    }
}

/// Parses a decimal literal such as `-0.125`, `3`, `2.5e-3` into an exact rational.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let text = text.trim();
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.find('.') {
        Some(pos) => (&digits[..pos], &digits[pos + 1..]),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if all_digits.is_empty() {
        BigInt::zero()
    } else {
        all_digits.parse().ok()?
    };
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let mut value = BigRational::from_integer(numer);
    if scale >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(n: i64, d: i64) -> Rational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_decimal("0.75"), Some(ratio(3, 4)));
        assert_eq!(parse_decimal("-0.1"), Some(ratio(-1, 10)));
        assert_eq!(parse_decimal("2.5e-3"), Some(ratio(1, 400)));
        assert_eq!(parse_decimal("12"), Some(ratio(12, 1)));
        assert_eq!(parse_decimal("1E2"), Some(ratio(100, 1)));
        assert_eq!(parse_decimal(".5"), Some(ratio(1, 2)));
        assert_eq!(parse_decimal("abc"), None);
        assert_eq!(parse_decimal(""), None);
        assert_eq!(parse_decimal("1.2.3"), None);
    }

    #[test]
    fn f64_bucket_merges_signed_zero() {
        assert_eq!((0.0f64).bucket_key(), (-0.0f64).bucket_key());
    }
}
