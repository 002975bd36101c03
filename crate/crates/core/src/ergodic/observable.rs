//! Observables: test functions and b-adic cylinder indicators.

use std::fmt;

use num::{One, Zero};

use crate::measures::TestFn;
use crate::piecewise::PiecewiseAffine;
use crate::rational::{int, Rational};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Observable {
    Test(TestFn),
    /// Indicator of `I(w) = [0.w, 0.w + b^{-|w|}]` in base `b`.
    Cylinder {
        base: u64,
        word: Vec<u64>,
    },
}

impl Observable {
    pub fn cylinder(base: u64, word: Vec<u64>) -> Result<Observable> {
        if base < 2 {
            return Err(Error::Invalid(format!("base {base} must be at least 2")));
        }
        if let Some(d) = word.iter().find(|&&d| d >= base) {
            return Err(Error::Invalid(format!("digit {d} is not below base {base}")));
        }
        Ok(Observable::Cylinder { base, word })
    }

    /// `cyl:<b>:<digits>` (digits `0-9a-z`, empty word allowed) or a test function.
    pub fn parse(text: &str) -> Result<Observable> {
        let text = text.trim();
        let Some(rest) = text.strip_prefix("cyl:") else {
            return Ok(Observable::Test(TestFn::parse(text)?));
        };
        let (b, w) = rest
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("cylinder `{text}` must be cyl:<base>:<word>")))?;
        let base = b
            .parse()
            .map_err(|_| Error::Parse(format!("bad base `{b}` in `{text}`")))?;
        let word = w
            .chars()
            .map(|c| {
                c.to_digit(36)
                    .map(u64::from)
                    .ok_or_else(|| Error::Parse(format!("bad digit `{c}` in `{text}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Observable::cylinder(base, word)
    }

    /// `(left endpoint, length)` of `I(w)`.
    pub fn cylinder_interval(base: u64, word: &[u64]) -> (Rational, Rational) {
        let b = int(base);
        let mut left = Rational::zero();
        let mut len = Rational::one();
        for &d in word {
            len /= &b;
            left += int(d) * &len;
        }
        (left, len)
    }

    /// Exact piecewise-affine form on `[0,1]`.
    pub fn to_piecewise(&self) -> PiecewiseAffine {
        match self {
            Observable::Test(g) => g.to_piecewise(),
            Observable::Cylinder { base, word } => {
                let (a, len) = Self::cylinder_interval(*base, word);
                let c = &a + &len;
                let mut xs = vec![Rational::zero()];
                let mut values = Vec::new();
                if a > Rational::zero() {
                    xs.push(a.clone());
                    values.push(Rational::zero());
                }
                values.push(Rational::one());
                if c < Rational::one() {
                    xs.push(c);
                    values.push(Rational::zero());
                }
                xs.push(Rational::one());
                PiecewiseAffine::step(xs, values)
            }
        }
    }

    /// Certified `M ≥ sup |φ|`.
    pub fn sup_bound(&self) -> Rational {
        match self {
            Observable::Test(g) => g.sup_bound(),
            Observable::Cylinder { .. } => Rational::one(),
        }
    }

    /// `∫φ dλ`, exact.
    pub fn lebesgue_mean(&self) -> Rational {
        match self {
            Observable::Test(g) => g.to_piecewise().integral(),
            Observable::Cylinder { base, word } => Self::cylinder_interval(*base, word).1,
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Observable::Test(g) => {
                let p = g.to_piecewise().simplified();
                p.pieces().len() == 1 && p.pieces()[0].slope.is_zero()
            }
            Observable::Cylinder { word, .. } => word.is_empty(),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Test(g) => write!(f, "{g}"),
            Observable::Cylinder { base, word } => {
                write!(f, "cyl:{base}:")?;
                for &d in word {
                    let c = char::from_digit(d as u32, 36).expect("digit below 36");
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}
