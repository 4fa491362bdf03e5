//! Scalar abstraction shared by the exact and floating-point code paths.
//!
//! Fairness gaps, welfare values and the LP simplex are written once over
//! [`Scalar`] and instantiated with [`Rational`](crate::Rational) where the
//! result must be exact, and with `f64` where speed matters more.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// An ordered field element usable by every generic routine in this crate.
pub trait Scalar:
    Num + Signed + Clone + PartialOrd + Debug + Display + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// `true` when arithmetic is exact (no rounding).
    const EXACT: bool;

    /// Absolute tolerance used for comparisons. Zero for exact types.
    fn eps() -> Self;

    fn from_rational(r: &BigRational) -> Self;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_ratio(num: usize, den: usize) -> Self {
        Self::from_usize(num).expect("count fits scalar") / Self::from_usize(den).expect("count fits scalar")
    }

    fn from_i64_exact(v: i64) -> Self {
        Self::from_i64(v).expect("integer fits scalar")
    }

    /// `|self| <= eps`.
    fn is_negligible(&self) -> bool {
        self.abs() <= Self::eps()
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn eps() -> Self {
        1e-9
    }

    fn from_rational(r: &BigRational) -> Self {
        rational_to_f64(r)
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn eps() -> Self {
        1e-5
    }

    fn from_rational(r: &BigRational) -> Self {
        rational_to_f64(r) as f32
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn eps() -> Self {
        BigRational::zero()
    }

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        return v;
    }
    // numerator/denominator too large for the fast path
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

pub fn rational_from_i64(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact conversion of a finite `f64` (every finite double is a dyadic rational).
pub fn rational_from_f64(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| Error::InvalidNumber(v.to_string()))
}

/// Parses `"3"`, `"-0.25"`, `"1e-4"`, `"2/3"` into an exact rational.
///
/// Decimal strings are read digit-for-digit, so `"0.1"` is exactly 1/10.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::InvalidNumber(text.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(BigInt::from_str(&all_digits).map_err(|_| bad())?);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    if negative {
        value = -value;
    }
    Ok(value)
}

/// `p/q` for non-integers, `p` for integers.
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Renders a number with at most 12 significant digits, locale-free, no
/// exponent for magnitudes in `[1e-5, 1e12)`.
pub fn format_sig12(r: &BigRational) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let v = rational_to_f64(r);
    format_f64_sig12(v)
}

pub fn format_f64_sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.11e}", v);
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let prec = (11 - exp).max(0) as usize;
        let mut s = format!("{:.*}", prec, v);
        if s.contains('.') {
            while s.ends_with('0') {
                s.pop();
            }
            if s.ends_with('.') {
                s.pop();
            }
        }
        if s == "-0" {
            s = "0".into();
        }
        s
    } else {
        let mut m = mant.to_string();
        if m.contains('.') {
            while m.ends_with('0') {
                m.pop();
            }
            if m.ends_with('.') {
                m.pop();
            }
        }
        format!("{m}e{exp}")
    }
}

pub fn is_one<T: One + PartialEq>(v: &T) -> bool {
    *v == T::one()
}

/// Square root through `f64`; only used for geometric quantities (norms, margins).
pub fn sqrt_f64<T: Scalar>(v: &T) -> f64 {
    v.to_f64_lossy().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("0.1").unwrap(), ratio(1, 10));
        assert_eq!(parse_rational("-2.50").unwrap(), ratio(-5, 2));
        assert_eq!(parse_rational("1e-4").unwrap(), ratio(1, 10_000));
        assert_eq!(parse_rational("2/6").unwrap(), ratio(1, 3));
        assert_eq!(parse_rational("+7").unwrap(), ratio(7, 1));
        assert_eq!(parse_rational(".5").unwrap(), ratio(1, 2));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("-").is_err());
    }

    #[test]
    fn sig12_rendering() {
        assert_eq!(format_sig12(&ratio(1, 24)), "0.0416666666667");
        assert_eq!(format_sig12(&ratio(1, 10)), "0.1");
        assert_eq!(format_sig12(&ratio(1, 10_000)), "0.0001");
        assert_eq!(format_sig12(&ratio(100, 3)), "33.3333333333");
        assert_eq!(format_sig12(&ratio(-40, 1)), "-40");
        assert_eq!(format_sig12(&ratio(401, 10)), "40.1");
        assert_eq!(format_f64_sig12(1.5e-9), "1.5e-9");
    }

    #[test]
    fn generic_helpers() {
        assert_eq!(<f64 as Scalar>::from_ratio(1, 4), 0.25);
        assert_eq!(BigRational::from_ratio(2, 6), ratio(1, 3));
        assert!(BigRational::EXACT && !f64::EXACT);
        assert!(1e-12f64.is_negligible());
        assert!(!ratio(1, 1_000_000_000_000).is_negligible());
    }
}

/// Serde adapter storing rationals as `"p/q"` strings (decimals accepted on input).
pub mod serde_rational {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_rational(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        super::parse_rational(&text).map_err(serde::de::Error::custom)
    }

    pub mod option {
        use num_rational::BigRational;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(r) => s.serialize_some(&super::super::format_rational(r)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigRational>, D::Error> {
            let text = Option::<String>::deserialize(d)?;
            text.map(|t| super::super::parse_rational(&t).map_err(serde::de::Error::custom))
                .transpose()
        }
    }

    pub mod vec {
        use num_rational::BigRational;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(super::super::format_rational))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
            let text = Vec::<String>::deserialize(d)?;
            text.iter()
                .map(|t| super::super::parse_rational(t).map_err(serde::de::Error::custom))
                .collect()
        }
    }
}
