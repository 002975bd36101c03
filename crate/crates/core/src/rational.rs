//! Rational helpers shared by every module.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::{Error, Result};

pub type Rational = BigRational;

/// `p/q` as a [`Rational`]. Panics when `q == 0`.
pub fn q(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn int(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^{-n}`.
pub fn pow2_neg(n: u64) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << n as usize)
}

pub fn half() -> Rational {
    q(1, 2)
}

/// Parses `p/q`, `p`, or `-p/q`. Zero denominators are rejected.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad numerator in rational {text:?}")))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| Error::Parse(format!("bad denominator in rational {text:?}")))?;
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator in rational {text:?}")));
    }
    Ok(Rational::new(num, den))
}

/// Canonical `p/q` text (integers print as `p/1` so the format is uniform).
pub fn fmt_rational(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn abs_diff(a: &Rational, b: &Rational) -> Rational {
    (a - b).abs()
}

pub fn min(a: &Rational, b: &Rational) -> Rational {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn max(a: &Rational, b: &Rational) -> Rational {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

/// Rounds `x` down to a multiple of `2^{-bits}`.
pub fn floor_dyadic(x: &Rational, bits: u32) -> Rational {
    let scale = BigInt::one() << bits as usize;
    let scaled = (x * Rational::from_integer(scale.clone())).floor();
    Rational::new(scaled.to_integer(), scale)
}

/// Rounds `x` up to a multiple of `2^{-bits}`.
pub fn ceil_dyadic(x: &Rational, bits: u32) -> Rational {
    let scale = BigInt::one() << bits as usize;
    let scaled = (x * Rational::from_integer(scale.clone())).ceil();
    Rational::new(scaled.to_integer(), scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_rational("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_rational("-1/4").unwrap(), q(-1, 4));
        assert_eq!(parse_rational("7").unwrap(), q(7, 1));
        assert!(matches!(parse_rational("1/0"), Err(Error::Parse(_))));
        assert!(parse_rational("a/2").is_err());
    }

    #[test]
    fn dyadic_rounding_brackets() {
        let x = q(1, 3);
        assert!(floor_dyadic(&x, 10) <= x && x <= ceil_dyadic(&x, 10));
        assert_eq!(floor_dyadic(&q(1, 4), 3), q(1, 4));
    }
}
