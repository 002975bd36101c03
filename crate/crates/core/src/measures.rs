//! Test functions, computable measures and summability moduli.

use std::fmt;
use std::sync::Arc;

use num::{One, Signed, ToPrimitive, Zero};

use crate::cms::{
    nonneg_rational, nonneg_rational_index, signed_rational, signed_rational_index, unpair, ConstructiveOpen,
    IdealPoint,
};
use crate::interval::IntervalUnion;
use crate::piecewise::PiecewiseAffine;
use crate::rational::{abs_diff, fmt_rational, max, parse_rational, Rational};
use crate::{Error, Result};

/// Continuous piecewise-affine test function built from hats.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TestFn {
    /// The constant 1.
    One,
    /// `|1 - |d(x,center) - radius|^+ / width|^+`: 1 on the ball, 0 beyond `radius + width`.
    Hat {
        center: Rational,
        radius: Rational,
        width: Rational,
    },
    Max(Box<TestFn>, Box<TestFn>),
    Min(Box<TestFn>, Box<TestFn>),
    Lin(Vec<(Rational, TestFn)>),
}

fn positive_part(x: Rational) -> Rational {
    if x.is_negative() {
        Rational::zero()
    } else {
        x
    }
}

impl TestFn {
    pub fn hat(center: Rational, radius: Rational, width: Rational) -> Result<TestFn> {
        if !width.is_positive() {
            return Err(Error::Invalid(format!("hat width {width} must be positive")));
        }
        if radius.is_negative() {
            return Err(Error::Invalid(format!("hat radius {radius} must be nonnegative")));
        }
        IdealPoint::new(center.clone())?;
        Ok(TestFn::Hat { center, radius, width })
    }

    pub fn constant(c: Rational) -> TestFn {
        if c.is_one() {
            TestFn::One
        } else {
            TestFn::Lin(vec![(c, TestFn::One)])
        }
    }

    pub fn max(f: TestFn, g: TestFn) -> TestFn {
        TestFn::Max(Box::new(f), Box::new(g))
    }

    pub fn min(f: TestFn, g: TestFn) -> TestFn {
        TestFn::Min(Box::new(f), Box::new(g))
    }

    /// Exact value at a rational point.
    pub fn eval(&self, x: &Rational) -> Rational {
        match self {
            TestFn::One => Rational::one(),
            TestFn::Hat { center, radius, width } => {
                let outside = positive_part(abs_diff(x, center) - radius);
                positive_part(Rational::one() - outside / width)
            }
            TestFn::Max(f, g) => max(&f.eval(x), &g.eval(x)),
            TestFn::Min(f, g) => crate::rational::min(&f.eval(x), &g.eval(x)),
            TestFn::Lin(terms) => terms.iter().map(|(a, f)| a * f.eval(x)).sum(),
        }
    }

    /// Exact piecewise-affine representation on `[0,1]`.
    pub fn to_piecewise(&self) -> PiecewiseAffine {
        match self {
            TestFn::One => PiecewiseAffine::constant(Rational::one()),
            TestFn::Hat { center, radius, width } => {
                let mut xs = vec![Rational::zero(), Rational::one()];
                for x in [
                    center - radius - width,
                    center - radius,
                    center + radius,
                    center + radius + width,
                ] {
                    if x.is_positive() && x < Rational::one() {
                        xs.push(x);
                    }
                }
                xs.sort();
                xs.dedup();
                let ys = xs.iter().map(|x| self.eval(x)).collect();
                PiecewiseAffine::from_nodes(xs, ys).simplified()
            }
            TestFn::Max(f, g) => f.to_piecewise().max(&g.to_piecewise()),
            TestFn::Min(f, g) => f.to_piecewise().min(&g.to_piecewise()),
            TestFn::Lin(terms) => terms
                .iter()
                .fold(PiecewiseAffine::constant(Rational::zero()), |acc, (a, f)| {
                    acc.lin(&Rational::one(), &f.to_piecewise(), a)
                }),
        }
    }

    /// Certified upper bound on `sup |f|`.
    pub fn sup_bound(&self) -> Rational {
        match self {
            TestFn::One | TestFn::Hat { .. } => Rational::one(),
            TestFn::Max(f, g) | TestFn::Min(f, g) => max(&f.sup_bound(), &g.sup_bound()),
            TestFn::Lin(terms) => terms.iter().map(|(a, f)| a.abs() * f.sup_bound()).sum(),
        }
    }

    /// Certified upper bound on the Lipschitz constant.
    pub fn lipschitz_bound(&self) -> Rational {
        match self {
            TestFn::One => Rational::zero(),
            TestFn::Hat { width, .. } => Rational::one() / width,
            TestFn::Max(f, g) | TestFn::Min(f, g) => max(&f.lipschitz_bound(), &g.lipschitz_bound()),
            TestFn::Lin(terms) => terms.iter().map(|(a, f)| a.abs() * f.lipschitz_bound()).sum(),
        }
    }

    /// The `i`-th test function of the fixed enumeration.
    ///
    /// `0` is the constant 1. Otherwise `(i-1) mod 4` selects hat, max, min or
    /// linear combination and `(i-1) div 4` is unpaired into the arguments;
    /// every argument index is smaller than `i`, so decoding terminates.
    pub fn from_index(i: u64) -> TestFn {
        if i == 0 {
            return TestFn::One;
        }
        let rest = (i - 1) / 4;
        match (i - 1) % 4 {
            0 => {
                let (s, rw) = unpair(rest);
                let (r, w) = unpair(rw);
                TestFn::Hat {
                    center: IdealPoint::from_index_u64(s).into_value(),
                    radius: nonneg_rational(r),
                    width: nonneg_rational(w + 1),
                }
            }
            1 => {
                let (f, g) = unpair(rest);
                TestFn::max(TestFn::from_index(f), TestFn::from_index(g))
            }
            2 => {
                let (f, g) = unpair(rest);
                TestFn::min(TestFn::from_index(f), TestFn::from_index(g))
            }
            _ => {
                let mut terms = Vec::new();
                let mut code = rest;
                while code > 0 {
                    let (head, tail) = unpair(code - 1);
                    let (coef, child) = unpair(head);
                    terms.push((signed_rational(coef), TestFn::from_index(child)));
                    code = tail;
                }
                TestFn::Lin(terms)
            }
        }
    }

    /// Index of `self` in the enumeration, when it fits in `u64`.
    pub fn index(&self) -> Option<u64> {
        fn small(x: Option<num::BigUint>) -> Option<u64> {
            x?.to_u64()
        }
        fn pair_checked(a: u64, b: u64) -> Option<u64> {
            let n = a.checked_add(b)?;
            let tri = (n as u128) * (n as u128 + 1) / 2 + b as u128;
            u64::try_from(tri).ok()
        }
        fn tagged(tag: u64, rest: u64) -> Option<u64> {
            rest.checked_mul(4)?.checked_add(tag + 1)
        }
        match self {
            TestFn::One => Some(0),
            TestFn::Hat { center, radius, width } => {
                let s = small(Some(IdealPoint::new(center.clone()).ok()?.index()))?;
                let r = small(nonneg_rational_index(radius))?;
                let w = small(nonneg_rational_index(width))?.checked_sub(1)?;
                tagged(0, pair_checked(s, pair_checked(r, w)?)?)
            }
            TestFn::Max(f, g) => tagged(1, pair_checked(f.index()?, g.index()?)?),
            TestFn::Min(f, g) => tagged(2, pair_checked(f.index()?, g.index()?)?),
            TestFn::Lin(terms) => {
                let mut code = 0u64;
                for (a, f) in terms.iter().rev() {
                    let head = pair_checked(small(signed_rational_index(a))?, f.index()?)?;
                    code = pair_checked(head, code)?.checked_add(1)?;
                }
                tagged(3, code)
            }
        }
    }

    /// Parses `hat(s,r,e)`, `const(c)`, `max(f,g)`, `min(f,g)`, `lin(a1*f1+a2*f2)`.
    pub fn parse(text: &str) -> Result<TestFn> {
        let mut parser = Parser {
            src: text.as_bytes(),
            pos: 0,
        };
        let f = parser.expr()?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(parser.error("trailing input"));
        }
        Ok(f)
    }
}

impl fmt::Display for TestFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFn::One => f.write_str("const(1)"),
            TestFn::Hat { center, radius, width } => write!(
                f,
                "hat({},{},{})",
                fmt_rational(center),
                fmt_rational(radius),
                fmt_rational(width)
            ),
            TestFn::Max(a, b) => write!(f, "max({a},{b})"),
            TestFn::Min(a, b) => write!(f, "min({a},{b})"),
            TestFn::Lin(terms) => {
                f.write_str("lin(")?;
                for (k, (a, g)) in terms.iter().enumerate() {
                    if k > 0 {
                        f.write_str("+")?;
                    }
                    write!(f, "{}*{g}", fmt_rational(a))?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> Error {
        Error::Parse(format!("test function: {what} at offset {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn rational(&mut self) -> Result<Rational> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.src.get(self.pos), Some(b'-') | Some(b'+')) {
            self.pos += 1;
        }
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'/') {
            self.pos += 1;
        }
        let text = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        parse_rational(text.trim_start_matches('+'))
    }

    fn expr(&mut self) -> Result<TestFn> {
        let name = self.ident();
        self.eat(b'(')?;
        let f = match name.as_str() {
            "hat" => {
                let s = self.rational()?;
                self.eat(b',')?;
                let r = self.rational()?;
                self.eat(b',')?;
                let e = self.rational()?;
                TestFn::hat(s, r, e)?
            }
            "const" => TestFn::constant(self.rational()?),
            "max" | "min" => {
                let a = self.expr()?;
                self.eat(b',')?;
                let b = self.expr()?;
                if name == "max" {
                    TestFn::max(a, b)
                } else {
                    TestFn::min(a, b)
                }
            }
            "lin" => {
                let mut terms = Vec::new();
                loop {
                    let a = self.rational()?;
                    self.eat(b'*')?;
                    terms.push((a, self.expr()?));
                    if self.peek() == Some(b'+') {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                TestFn::Lin(terms)
            }
            other => return Err(self.error(&format!("unknown function `{other}`"))),
        };
        self.eat(b')')?;
        Ok(f)
    }
}

/// A probability measure on `[0,1]` given by its two operational interfaces.
pub trait ComputableMeasure: Send + Sync {
    /// Lower bound on the measure of a finite union, nondecreasing in `stage`
    /// and converging to the true value.
    fn lower_union(&self, set: &IntervalUnion, stage: u64) -> Rational;

    /// `∫ g dμ` within `eps`.
    fn integrate(&self, g: &TestFn, eps: &Rational) -> Result<Rational>;

    /// Lower semi-computation of `μ(U)` from the stage-`t` realization.
    fn lower(&self, open: &ConstructiveOpen, stage: u64) -> Rational {
        self.lower_union(&open.realize(stage), stage)
    }

    /// True when `lower_union` is exact at every stage.
    fn is_exact(&self) -> bool {
        false
    }
}

/// Lebesgue measure, computed exactly.
#[derive(Clone, Copy, Debug, Default)]
pub struct Lebesgue;

pub fn lebesgue() -> Lebesgue {
    Lebesgue
}

impl ComputableMeasure for Lebesgue {
    fn lower_union(&self, set: &IntervalUnion, _stage: u64) -> Rational {
        set.measure()
    }

    fn integrate(&self, g: &TestFn, _eps: &Rational) -> Result<Rational> {
        Ok(g.to_piecewise().integral())
    }

    fn is_exact(&self) -> bool {
        true
    }
}

/// `∫ ν_F(i) dμ` within `eps`.
pub fn integral_of_enumerated(mu: &dyn ComputableMeasure, i: u64, eps: &Rational) -> Result<Rational> {
    mu.integrate(&TestFn::from_index(i), eps)
}

/// Tail-bound modulus `ε ↦ N` with `Σ_{i ≥ N} a_i ≤ ε`.
#[derive(Clone)]
pub struct SummabilityModulus {
    modulus: Arc<dyn Fn(&Rational) -> u64 + Send + Sync>,
    label: String,
}

impl fmt::Debug for SummabilityModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SummabilityModulus({})", self.label)
    }
}

impl SummabilityModulus {
    pub fn new(label: impl Into<String>, modulus: impl Fn(&Rational) -> u64 + Send + Sync + 'static) -> Self {
        SummabilityModulus {
            modulus: Arc::new(modulus),
            label: label.into(),
        }
    }

    pub fn at(&self, eps: &Rational) -> u64 {
        (self.modulus)(eps)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Exact tail `Σ_{i ≥ N} Cλ^i = Cλ^N/(1-λ)`.
pub fn geometric_tail(c: &Rational, lambda: &Rational, n: u64) -> Rational {
    c * pow(lambda, n) / (Rational::one() - lambda)
}

pub(crate) fn pow(x: &Rational, n: u64) -> Rational {
    num::pow::pow(x.clone(), n as usize)
}

/// Least `N` with `Cλ^N/(1-λ) ≤ ε`.
pub fn modulus_geometric(c: Rational, lambda: Rational) -> Result<SummabilityModulus> {
    if !lambda.is_positive() || lambda >= Rational::one() {
        return Err(Error::Invalid(format!("geometric ratio {lambda} must lie in (0,1)")));
    }
    if c.is_negative() {
        return Err(Error::Invalid(format!("geometric constant {c} must be nonnegative")));
    }
    let label = format!("sum_i {}*({})^i", fmt_rational(&c), fmt_rational(&lambda));
    Ok(SummabilityModulus::new(label, move |eps: &Rational| {
        if c.is_zero() {
            return 0;
        }
        let mut n = 0u64;
        let mut tail = &c / (Rational::one() - &lambda);
        while &tail > eps {
            tail *= &lambda;
            n += 1;
        }
        n
    }))
}
