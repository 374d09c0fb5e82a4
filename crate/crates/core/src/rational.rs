//! Exact rational helpers and the `"num/den"` string encoding.

use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Resolution of a uniform draw: values are `k / 2^53`.
pub const UNIFORM_BITS: u32 = 53;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn from_biguint(n: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from(n.clone()))
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Ok(r) = Rational::from_str(t) {
        return Ok(r);
    }
    // Plain decimals such as "0.3" are accepted and converted exactly.
    if let Some((whole, frac)) = t.split_once('.') {
        let neg = whole.starts_with('-');
        let whole = whole.trim_start_matches('-');
        let digits = format!("{whole}{frac}");
        let n = BigInt::from_str(if digits.is_empty() { "0" } else { &digits })
            .map_err(|e| Error::Parse(format!("{s}: {e}")))?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rational::new(n, d);
        return Ok(if neg { -r } else { r });
    }
    Err(Error::Parse(format!("not a rational: {s}")))
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        format!("{}/1", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

pub fn pow(r: &Rational, e: u64) -> Rational {
    num_traits::pow(r.clone(), e as usize)
}

/// Smallest integer `t` with `t >= p * 2^53`, for `0 <= p <= 1`.
///
/// A 53-bit uniform `k / 2^53` satisfies `k / 2^53 < p` iff `k < t`,
/// so cell lookups on integer draws are exact.
pub fn uniform_threshold(p: &Rational) -> u64 {
    debug_assert!(!p.is_negative() && p <= &Rational::one());
    let scaled = p * Rational::from_integer(BigInt::one() << UNIFORM_BITS);
    let c = scaled.ceil().to_integer();
    c.to_u64().expect("threshold fits in 53 bits")
}

pub fn is_zero(r: &Rational) -> bool {
    r.is_zero()
}

/// Serde adapter for a single rational stored as `"num/den"`.
pub mod serde_rat {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        value_to_rational(&v).map_err(serde::de::Error::custom)
    }

    pub(crate) fn value_to_rational(v: &serde_json::Value) -> std::result::Result<Rational, String> {
        match v {
            serde_json::Value::String(s) => parse_rational(s).map_err(|e| e.to_string()),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(int(i))
                } else {
                    parse_rational(&n.to_string()).map_err(|e| e.to_string())
                }
            }
            other => Err(format!("expected rational, got {other}")),
        }
    }
}

/// Serde adapter for a list of rationals.
pub mod serde_rat_vec {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&format_rational(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Rational>, D::Error> {
        let raw = Vec::<serde_json::Value>::deserialize(d)?;
        raw.iter()
            .map(|v| serde_rat::value_to_rational(v).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("1/4").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("0.3").unwrap(), rat(3, 10));
        assert_eq!(parse_rational("-2").unwrap(), int(-2));
        assert!(parse_rational("x/2").is_err());
    }

    #[test]
    fn threshold_is_exact_ceiling() {
        assert_eq!(uniform_threshold(&rat(1, 2)), 1u64 << 52);
        assert_eq!(uniform_threshold(&int(0)), 0);
        assert_eq!(uniform_threshold(&int(1)), 1u64 << 53);
        let t = uniform_threshold(&rat(1, 3));
        // t - 1 < 2^53 / 3 <= t
        assert!(3 * (t - 1) < (1u64 << 53) && (1u64 << 53) <= 3 * t);
    }
}
