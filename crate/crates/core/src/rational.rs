//! Exact string forms for rationals and integers.
//!
//! Rationals are written as `"p/q"` in lowest terms, with the denominator
//! omitted when it is 1. Parsing accepts the same forms and canonicalizes.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub fn format_rational(value: &BigRational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((num, den)) => (parse_int(num)?, parse_int(den)?),
        None => (parse_int(text)?, BigInt::one()),
    };
    if den.is_zero() {
        return Err(Error::Format(format!("zero denominator in {text:?}")));
    }
    if den.is_negative() {
        return Ok(BigRational::new(-num, -den));
    }
    Ok(BigRational::new(num, den))
}

pub fn parse_int(text: &str) -> Result<BigInt> {
    let text = text.trim();
    let digits = text.strip_prefix('-').unwrap_or(text);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Format(format!("not an integer: {text:?}")));
    }
    text.parse::<BigInt>()
        .map_err(|e| Error::Format(format!("{text:?}: {e}")))
}

/// `value` rounded to `digits` decimal places, for human-readable tables.
pub fn to_decimal(value: &BigRational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = (value * BigRational::from_integer(scale)).round().to_integer();
    let negative = scaled.is_negative();
    let mut body = scaled.abs().to_string();
    if body.len() <= digits {
        body = format!("{}{}", "0".repeat(digits + 1 - body.len()), body);
    }
    let split = body.len() - digits;
    let sign = if negative { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{body}")
    } else {
        format!("{sign}{}.{}", &body[..split], &body[split..])
    }
}

pub(crate) mod serde_rational_vec {
    use num_rational::BigRational;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(values.iter().map(super::format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| super::parse_rational(s).map_err(D::Error::custom))
            .collect()
    }
}
