//! Exact rational time values.
//!
//! Every timing constant is stored as a [`Rational`]; no binary floating
//! point ever enters a model. Decimal literals such as `9.4` are read
//! exactly (`47/5`).

use std::fmt;

use num_integer::Integer;
use num_traits::{Signed, Zero};

pub type Rational = num_rational::Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal `{0}`")]
pub struct ParseRationalError(pub String);

/// Parses `"7"`, `"-3"`, `"47/5"`, `"9.4"` and `"1.5e2"`.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| err())?;
        let d: i64 = d.trim().parse().map_err(|_| err())?;
        if d == 0 {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer: i64 = all_digits.parse().map_err(|_| err())?;
    let scale = exponent - frac_part.len() as i32;
    let pow = 10i64.checked_pow(scale.unsigned_abs()).ok_or_else(err)?;
    let mut value = if scale >= 0 {
        Rational::from_integer(numer.checked_mul(pow).ok_or_else(err)?)
    } else {
        Rational::new(numer, pow)
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Canonical textual form: integers print bare, everything else as `n/d`.
pub fn format_rational(value: &Rational) -> String {
    if value.is_integer() {
        value.to_integer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Human-oriented decimal form, exact when the denominator only has
/// factors 2 and 5, otherwise falls back to `n/d`.
pub fn format_decimal(value: &Rational) -> String {
    if value.is_integer() {
        return value.to_integer().to_string();
    }
    let mut d = *value.denom();
    let mut places = 0u32;
    let (mut twos, mut fives) = (0u32, 0u32);
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return format_rational(value);
    }
    places += twos.max(fives);
    let scaled = value * Rational::from_integer(10i64.pow(places));
    let n = scaled.to_integer();
    let sign = if n < 0 { "-" } else { "" };
    let n = n.abs();
    let div = 10i64.pow(places);
    format!("{sign}{}.{:0width$}", n / div, n % div, width = places as usize)
}

/// Least common multiple of the denominators of `values` (1 when empty).
pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> i64 {
    values.into_iter().fold(1i64, |acc, v| acc.lcm(v.denom()))
}

pub fn is_non_negative(value: &Rational) -> bool {
    !value.is_negative()
}

pub fn to_f64(value: &Rational) -> f64 {
    *value.numer() as f64 / *value.denom() as f64
}

pub fn zero() -> Rational {
    Rational::zero()
}

/// Serde adapter: rationals serialize as numbers when integral, `"n/d"`
/// strings otherwise, and deserialize from numbers or strings.
pub mod serde_rational {
    use super::*;
    use serde::{de, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        if value.is_integer() {
            s.serialize_i64(value.to_integer())
        } else {
            s.serialize_str(&format_rational(value))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let v = <serde_json::Value as serde::Deserialize>::deserialize(d)?;
        from_json(&v).map_err(de::Error::custom)
    }

    pub(crate) fn from_json(v: &serde_json::Value) -> Result<Rational, String> {
        match v {
            serde_json::Value::Number(n) => parse_rational(&n.to_string()).map_err(|e| e.to_string()),
            serde_json::Value::String(s) => parse_rational(s).map_err(|e| e.to_string()),
            other => Err(format!("expected a number or rational string, found {other}")),
        }
    }
}

/// Newtype used where a rational needs `Display`.
pub struct Show<'a>(pub &'a Rational);

impl fmt::Display for Show<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_decimal(self.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("9.4").unwrap(), r(47, 5));
        assert_eq!(parse_rational("10").unwrap(), r(10, 1));
        assert_eq!(parse_rational("0.25").unwrap(), r(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), r(-3, 2));
        assert_eq!(parse_rational("1.5e2").unwrap(), r(150, 1));
        assert_eq!(parse_rational("15e-1").unwrap(), r(3, 2));
        assert_eq!(parse_rational(".5").unwrap(), r(1, 2));
    }

    #[test]
    fn parses_fractions() {
        assert_eq!(parse_rational("47/5").unwrap(), r(47, 5));
        assert_eq!(parse_rational(" 6 / 4 ").unwrap(), r(3, 2));
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "abc", "1.2.3", "1/x", ".", "--1", "1e"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn formats() {
        assert_eq!(format_rational(&r(10, 1)), "10");
        assert_eq!(format_rational(&r(47, 5)), "47/5");
        assert_eq!(format_decimal(&r(47, 5)), "9.4");
        assert_eq!(format_decimal(&r(1, 3)), "1/3");
        assert_eq!(format_decimal(&r(-1, 8)), "-0.125");
    }

    #[test]
    fn lcm() {
        let vals = [r(10, 1), r(5, 1), r(47, 5)];
        assert_eq!(lcm_of_denominators(&vals), 5);
        assert_eq!(lcm_of_denominators(&[r(1, 4), r(1, 6)]), 12);
        assert_eq!(lcm_of_denominators(&[]), 1);
    }
}
