//! Exact rational helpers shared by every module.
//!
//! Rationals travel through JSON as `"p/q"` strings so that no precision is
//! lost on the way in or out.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Closest binary rational to `x`; exact for every finite double.
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::InvalidRational(x.to_string()))
}

/// Canonical `"p/q"` form. Integers keep the `/1` suffix.
pub fn format(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Accepts `"p/q"`, plain integers and finite decimals such as `"0.25"`.
pub fn parse(s: &str) -> Result<Rational> {
    let bad = || Error::InvalidRational(s.to_string());
    let t = s.trim();
    if let Some((num, den)) = t.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        let negative = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let num: BigInt = digits.parse().map_err(|_| bad())?;
        let den = num_traits::pow(BigInt::from(10u8), frac.len());
        let q = Rational::new(num, den);
        return Ok(if negative { -q } else { q });
    }
    let n: BigInt = t.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

/// Greatest rational `g` such that every input is an integer multiple of `g`.
/// Zeros are ignored (`gcd(0, x) = x`); returns zero when every input is zero.
pub fn gcd_all<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Rational {
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for q in values {
        if q.is_zero() {
            continue;
        }
        let (qn, qd) = (q.numer().abs(), q.denom().clone());
        // gcd(a/b, c/d) = gcd(a, c) / lcm(b, d) for reduced fractions.
        let l = den.lcm(&qd);
        num = if num.is_zero() { qn } else { num.gcd(&qn) };
        den = l;
    }
    Rational::new(num, den)
}

pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

pub fn factorials(upto: usize) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(upto + 1);
    out.push(BigUint::one());
    for k in 1..=upto {
        let next = &out[k - 1] * BigUint::from(k);
        out.push(next);
    }
    out
}

/// `C(n, k)` as a `u128`, saturating on overflow.
pub fn binomial_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

pub mod serde_str {
    use super::{format, parse, Rational};
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = String::deserialize(d)?;
        parse(&raw).map_err(D::Error::custom)
    }
}

pub mod serde_str_vec {
    use super::{format, parse, Rational};
    use serde::{de::Error as _, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for q in v {
            seq.serialize_element(&format(q))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter().map(|s| parse(s).map_err(D::Error::custom)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse("7").unwrap(), int(7));
        assert_eq!(parse("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse("-0.5").unwrap(), ratio(-1, 2));
        assert_eq!(parse(".5").unwrap(), ratio(1, 2));
        assert!(parse("1/0").is_err());
        assert!(parse("abc").is_err());
        assert!(parse("1.2.3").is_err());
    }

    #[test]
    fn format_keeps_denominator() {
        assert_eq!(format(&int(1)), "1/1");
        assert_eq!(format(&ratio(2, 6)), "1/3");
    }

    #[test]
    fn gcd_of_rationals() {
        let v = [ratio(1, 3), ratio(1, 6), ratio(1, 6), int(0)];
        assert_eq!(gcd_all(&v), ratio(1, 6));
        let v = [ratio(2, 3), ratio(4, 9)];
        assert_eq!(gcd_all(&v), ratio(2, 9));
        assert_eq!(gcd_all(&[int(0)]), int(0));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_u128(7, 5), 21);
        assert_eq!(binomial_u128(3, 4), 0);
        assert_eq!(binomial_u128(200, 100), u128::MAX);
    }
}
