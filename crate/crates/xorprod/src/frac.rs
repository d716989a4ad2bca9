//! Exact rational probabilities and their `"p/q"` wire form.
//!
//! Every probability or advantage that crosses a file or CLI boundary
//! is an arbitrary-precision rational in lowest terms, rendered as
//! `"p/q"`. Floats appear only in Monte-Carlo summaries.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

pub type Frac = BigRational;

/// `n / d` from machine integers; panics if `d == 0`.
pub fn frac(n: i64, d: i64) -> Frac {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `n / d` from unsigned 128-bit counts; panics if `d == 0`.
pub fn frac_u(n: u128, d: u128) -> Frac {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn zero() -> Frac {
    BigRational::zero()
}

pub fn one() -> Frac {
    BigRational::one()
}

pub fn half() -> Frac {
    frac(1, 2)
}

/// `f^k` for a non-negative integer exponent.
pub fn pow(f: &Frac, k: u32) -> Frac {
    let mut acc = one();
    for _ in 0..k {
        acc *= f;
    }
    acc
}

/// Binomial coefficient `C(n, k)` as a big integer.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Lossy conversion for report summaries.
pub fn to_f64(f: &Frac) -> f64 {
    f.to_f64().unwrap_or(f64::NAN)
}

/// Canonical `"p/q"` rendering (lowest terms, `q > 0`).
pub fn render(f: &Frac) -> String {
    format!("{}/{}", f.numer(), f.denom())
}

/// Parses `"p/q"` or a bare integer `"p"`. Decimal notation is
/// rejected: exactness at boundaries is part of the contract.
pub fn parse(s: &str) -> Result<Frac> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (s, None),
    };
    let parse_int = |t: &str| -> Result<BigInt> {
        t.parse::<BigInt>()
            .map_err(|_| Error::Format(format!("not an exact rational: {s:?}")))
    };
    let n = parse_int(num)?;
    let d = match den {
        Some(d) => parse_int(d)?,
        None => BigInt::one(),
    };
    if d.is_zero() {
        return Err(Error::Format(format!("zero denominator: {s:?}")));
    }
    Ok(BigRational::new(n, d))
}

/// Nearest integer to `f * scale`, ties rounding up.
pub fn round_scaled(f: &Frac, scale: u128) -> BigInt {
    let scaled = f * BigRational::from(BigInt::from(scale)) + half();
    scaled.floor().to_integer()
}

/// `|a - b|`.
pub fn abs_diff(a: &Frac, b: &Frac) -> Frac {
    (a - b).abs()
}

/// Serde adapter: rationals as `"p/q"` strings.
pub mod serde_frac {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(f: &Frac, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&render(f))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Frac, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Frac>`.
pub mod serde_frac_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        fs: &[Frac],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(fs.iter().map(render))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Frac>, D::Error> {
        let strings = Vec::<String>::deserialize(d)?;
        strings
            .iter()
            .map(|s| parse(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter for `Option<Frac>`.
pub mod serde_frac_opt {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        f: &Option<Frac>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match f {
            Some(f) => s.serialize_some(&render(f)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Frac>, D::Error> {
        let s = Option::<String>::deserialize(d)?;
        s.map(|s| parse(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowest_terms_and_render() {
        let f = frac(4, 8);
        assert_eq!(render(&f), "1/2");
        assert_eq!(render(&frac(-3, 6)), "-1/2");
        assert_eq!(render(&zero()), "0/1");
    }

    #[test]
    fn parse_roundtrip() {
        for s in ["1/2", "0/1", "-7/3", "5/1"] {
            assert_eq!(render(&parse(s).unwrap()), s);
        }
        assert_eq!(parse("3").unwrap(), frac(3, 1));
        assert!(parse("0.3").is_err());
        assert!(parse("1/0").is_err());
        assert!(parse("a/b").is_err());
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(4, 2), BigInt::from(6));
        assert_eq!(binomial(6, 3), BigInt::from(20));
        assert_eq!(binomial(5, 7), BigInt::zero());
        assert_eq!(binomial(64, 32).to_string(), "1832624140942590534");
    }

    #[test]
    fn rounding_ties_up() {
        assert_eq!(round_scaled(&frac(1, 2), 3), BigInt::from(2)); // 1.5 -> 2
        assert_eq!(round_scaled(&frac(1, 4), 2), BigInt::from(1)); // 0.5 -> 1
        assert_eq!(round_scaled(&frac(1, 3), 3), BigInt::from(1));
    }

    #[test]
    fn pow_matches_repeated_mul() {
        let f = frac(3, 4);
        assert_eq!(pow(&f, 0), one());
        assert_eq!(pow(&f, 3), frac(27, 64));
    }
}
