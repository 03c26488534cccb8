//! Exact rational helpers shared by reports and file formats.
//!
//! Rationals are serialized as `"num/den"` strings with the denominator
//! always present (`4` prints as `"4/1"`), so files stay unambiguous and
//! round-trip bit-exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RationalParseError {
    #[error("malformed rational `{0}`, expected `num/den`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Format as `num/den`, denominator always explicit.
pub fn ratio_to_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parse `num/den`; a bare integer `n` is accepted as `n/1`.
pub fn ratio_from_string(s: &str) -> Result<BigRational, RationalParseError> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let num: BigInt = num
        .trim()
        .parse()
        .map_err(|_| RationalParseError::Malformed(s.to_string()))?;
    let den: BigInt = den
        .trim()
        .parse()
        .map_err(|_| RationalParseError::Malformed(s.to_string()))?;
    if den.is_zero() {
        return Err(RationalParseError::ZeroDenominator(s.to_string()));
    }
    Ok(BigRational::new(num, den))
}

/// Convenience constructor from machine integers.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact integer as a rational.
pub fn ratio_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_with_explicit_denominator() {
        assert_eq!(ratio_to_string(&ratio_int(4)), "4/1");
        assert_eq!(ratio_to_string(&ratio(1, 2)), "1/2");
        assert_eq!(ratio_to_string(&ratio(5, 2)), "5/2");
        assert_eq!(ratio_to_string(&ratio(-3, 6)), "-1/2");
    }

    #[test]
    fn parses_and_round_trips() {
        for s in ["0/1", "1/2", "5/2", "-7/3", "1277/1"] {
            let r = ratio_from_string(s).unwrap();
            assert_eq!(ratio_to_string(&r), s);
        }
        assert_eq!(ratio_from_string("4").unwrap(), ratio_int(4));
        assert!(ratio_from_string("1/0").is_err());
        assert!(ratio_from_string("a/b").is_err());
    }
}
