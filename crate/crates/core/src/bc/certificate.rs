//! Line-oriented extraction certificates and their independent checker.
//!
//! ```text
//! # bc-certificate v1
//! # kind extract
//! seed center=1/2 radius=1/4
//! n0 n=2 stage=0 lower=1/2
//! step=0 n_i=2 m=3 ball=1/2:1/2 stage=1 V=1/4:3/4 lower=1/2
//! end steps=1
//! ```
//!
//! Each `step` record describes the passage from `V_i` to `V_{i+1}`: `m` is
//! the new start `n_{i+1}`, `ball` the Claim witness `B'` as `center:radius`,
//! `stage` the realization stage, `V` the new set and `lower` its certified
//! measure lower bound.

use std::fmt::Write as _;

use num::{One, Zero};

use super::BCSequence;
use crate::cms::IdealBall;
use crate::interval::IntervalUnion;
use crate::measures::ComputableMeasure;
use crate::rational::{fmt_rational, int, max, min, parse_rational, pow2_neg, Rational};
use crate::{Error, Result};

pub const CERTIFICATE_MAGIC: &str = "# bc-certificate v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepRecord {
    pub step: u64,
    pub n_i: u64,
    pub m: u64,
    pub ball: IdealBall,
    pub stage: u64,
    pub set: IntervalUnion,
    pub lower: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractionCertificate {
    /// Comment lines after the magic line, each starting with `#`.
    pub header: Vec<String>,
    pub seed: IdealBall,
    pub n0: u64,
    pub n0_stage: u64,
    pub n0_lower: Rational,
    pub steps: Vec<StepRecord>,
    /// Whether the `end` record is present.
    pub complete: bool,
}

impl ExtractionCertificate {
    /// The value of a `# key value` header line.
    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header.iter().find_map(|line| {
            let rest = line.strip_prefix('#')?.trim_start();
            let value = rest.strip_prefix(key)?;
            value.starts_with(' ').then(|| value.trim())
        })
    }

    pub fn final_set(&self) -> IntervalUnion {
        self.steps
            .last()
            .map(|s| s.set.clone())
            .unwrap_or_else(|| self.seed.to_union())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(CERTIFICATE_MAGIC);
        out.push('\n');
        for line in &self.header {
            out.push_str(line);
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "seed center={} radius={}",
            fmt_rational(self.seed.center()),
            fmt_rational(self.seed.radius())
        );
        let _ = writeln!(
            out,
            "n0 n={} stage={} lower={}",
            self.n0,
            self.n0_stage,
            fmt_rational(&self.n0_lower)
        );
        for s in &self.steps {
            let _ = writeln!(
                out,
                "step={} n_i={} m={} ball={}:{} stage={} V={} lower={}",
                s.step,
                s.n_i,
                s.m,
                fmt_rational(s.ball.center()),
                fmt_rational(s.ball.radius()),
                s.stage,
                s.set,
                fmt_rational(&s.lower)
            );
        }
        if self.complete {
            let _ = writeln!(out, "end steps={}", self.steps.len());
        }
        out
    }

    /// Parses the text form. A missing `end` record yields `complete = false`.
    pub fn parse(text: &str) -> Result<ExtractionCertificate> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == CERTIFICATE_MAGIC => {}
            _ => {
                return Err(Error::Parse(format!(
                    "certificate must start with `{CERTIFICATE_MAGIC}`"
                )))
            }
        }
        let mut header = Vec::new();
        let mut seed = None;
        let mut n0 = None;
        let mut steps = Vec::new();
        let mut complete = false;
        for (no, line) in lines {
            let at = |what: &str| Error::Parse(format!("line {}: {what}", no + 1));
            if complete {
                return Err(at("content after `end`"));
            }
            if line.starts_with('#') {
                if seed.is_some() {
                    return Err(at("header line after records"));
                }
                header.push(line.to_string());
                continue;
            }
            let head = line.split_whitespace().next().unwrap_or_default();
            let fields = Fields::new(line.split_whitespace().skip(usize::from(!head.contains('='))), no + 1)?;
            match head {
                "seed" => {
                    let ball = IdealBall::new(fields.rational("center")?, fields.rational("radius")?)
                        .map_err(|e| at(&e.to_string()))?;
                    seed = Some(ball);
                }
                "n0" => {
                    n0 = Some((
                        fields.natural("n")?,
                        fields.natural("stage")?,
                        fields.rational("lower")?,
                    ));
                }
                "end" => {
                    let count = fields.natural("steps")?;
                    if count != steps.len() as u64 {
                        return Err(at(&format!("end record claims {count} steps, found {}", steps.len())));
                    }
                    complete = true;
                }
                _ if head.starts_with("step=") => {
                    let (c, r) = fields
                        .text("ball")?
                        .split_once(':')
                        .ok_or_else(|| at("ball must be center:radius"))?;
                    let ball =
                        IdealBall::new(parse_rational(c)?, parse_rational(r)?).map_err(|e| at(&e.to_string()))?;
                    steps.push(StepRecord {
                        step: fields.natural("step")?,
                        n_i: fields.natural("n_i")?,
                        m: fields.natural("m")?,
                        ball,
                        stage: fields.natural("stage")?,
                        set: IntervalUnion::parse(fields.text("V")?)?,
                        lower: fields.rational("lower")?,
                    });
                }
                other => return Err(at(&format!("unknown record `{other}`"))),
            }
        }
        let seed = seed.ok_or_else(|| Error::Parse("missing seed record".into()))?;
        let (n0, n0_stage, n0_lower) = n0.ok_or_else(|| Error::Parse("missing n0 record".into()))?;
        Ok(ExtractionCertificate {
            header,
            seed,
            n0,
            n0_stage,
            n0_lower,
            steps,
            complete,
        })
    }
}

struct Fields<'a> {
    pairs: Vec<(&'a str, &'a str)>,
    line: usize,
}

impl<'a> Fields<'a> {
    fn new(words: impl Iterator<Item = &'a str>, line: usize) -> Result<Self> {
        let pairs = words
            .map(|w| {
                w.split_once('=')
                    .ok_or_else(|| Error::Parse(format!("line {line}: field `{w}` lacks `=`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Fields { pairs, line })
    }

    fn text(&self, key: &str) -> Result<&'a str> {
        self.pairs
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Parse(format!("line {}: missing field `{key}`", self.line)))
    }

    fn natural(&self, key: &str) -> Result<u64> {
        let v = self.text(key)?;
        v.parse()
            .map_err(|_| Error::Parse(format!("line {}: field `{key}` is not a natural number", self.line)))
    }

    fn rational(&self, key: &str) -> Result<Rational> {
        parse_rational(self.text(key)?).map_err(|e| Error::Parse(format!("line {}: {e}", self.line)))
    }
}

/// Outcome of a successful replay.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub steps: u64,
    pub final_set: IntervalUnion,
}

/// Re-certifies every step against `seq` and `measure` with exact arithmetic.
///
/// Checks, per step: the starts chain (`n_i` equals the previous `m`, and
/// `m > n_i`); `closure(V_{i+1}) ⊆ V_i`; `diam(V_{i+1}) ≤ 2^{-i}`;
/// `closure(V_{i+1})` inside the stage realization of every `U_k`,
/// `n_i ≤ k < m`; the recomputed lower bound dominates the recorded one,
/// which exceeds `2^{-m+1}`.
pub fn check_certificate(
    cert: &ExtractionCertificate,
    seq: &BCSequence,
    measure: &dyn ComputableMeasure,
) -> Result<CheckReport> {
    if !cert.complete {
        return Err(Error::Parse("certificate is truncated (no end record)".into()));
    }
    let fail = |loc: String, why: String| Err(Error::verification(loc, why));
    if cert.seed.radius() > &Rational::one() {
        return fail("seed".into(), "radius exceeds 1".into());
    }
    let mut prev = cert.seed.to_union();
    let seed_lower = measure.lower_union(&prev, cert.n0_stage);
    if seed_lower < cert.n0_lower {
        return fail(
            "n0".into(),
            format!("recorded lower {} exceeds recomputed {}", cert.n0_lower, seed_lower),
        );
    }
    if cert.n0_lower <= pow2_neg(cert.n0) * int(2) {
        return fail(
            "n0".into(),
            format!("lower {} does not exceed 2^(-n0+1)", cert.n0_lower),
        );
    }
    let mut start = cert.n0;
    for (j, s) in cert.steps.iter().enumerate() {
        let loc = format!("step {}", s.step);
        if s.step != j as u64 {
            return fail(loc, format!("expected step number {j}"));
        }
        if s.n_i != start {
            return fail(loc, format!("n_i = {} but the previous start is {start}", s.n_i));
        }
        if s.m <= s.n_i {
            return fail(loc, "m must exceed n_i".into());
        }
        if s.set.is_empty() {
            return fail(loc, "empty set".into());
        }
        if !s.set.closure_contained_in(&prev) {
            return fail(loc, "closure of V is not inside the previous set".into());
        }
        if s.set.diameter() > pow2_neg(s.step) {
            return fail(loc, format!("diameter {} exceeds 2^-{}", s.set.diameter(), s.step));
        }
        let lo = max(&(s.ball.center() - s.ball.radius()), &Rational::zero());
        let hi = min(&(s.ball.center() + s.ball.radius()), &Rational::one());
        let window = IntervalUnion::from_intervals([(lo.clone(), hi.clone())]);
        if !s.set.is_subset_of(&window) {
            return fail(loc, "V is not inside the witness ball".into());
        }
        for k in s.n_i..s.m {
            let realized = seq.layer(k).realize_within(s.stage, &lo, &hi);
            if !s.set.closure_contained_in(&realized) {
                return fail(loc, format!("closure of V is not inside the realization of U_{k}"));
            }
        }
        let recomputed = measure.lower_union(&s.set, s.stage);
        if recomputed < s.lower {
            return fail(
                loc,
                format!("recorded lower {} exceeds recomputed {}", s.lower, recomputed),
            );
        }
        if s.lower <= pow2_neg(s.m) * int(2) {
            return fail(loc, format!("lower {} does not exceed 2^(-m+1)", s.lower));
        }
        prev = s.set.clone();
        start = s.m;
    }
    Ok(CheckReport {
        steps: cert.steps.len() as u64,
        final_set: prev,
    })
}
