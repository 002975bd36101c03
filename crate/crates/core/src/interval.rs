//! Exact interval model: finite unions of open rational intervals of `(0,1)`.

use std::fmt;

use num::{One, Zero};

use crate::rational::{fmt_rational, max, min, parse_rational, Rational};
use crate::{Error, Result};

/// Closed rational interval `[lo, hi]` (possibly degenerate).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClosedInterval {
    lo: Rational,
    hi: Rational,
}

impl ClosedInterval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(lo <= hi, "closed interval with lo > hi");
        ClosedInterval { lo, hi }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_integer(2.into())
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &ClosedInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

impl fmt::Display for ClosedInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", fmt_rational(&self.lo), fmt_rational(&self.hi))
    }
}

/// A normalized finite union of open intervals inside `(0,1)`.
///
/// Parts are sorted, nonempty and pairwise disjoint. Parts that merely touch
/// (`hi_k == lo_{k+1}`) stay separate, so the shared endpoint is excluded.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IntervalUnion {
    parts: Vec<(Rational, Rational)>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        IntervalUnion { parts: Vec::new() }
    }

    pub fn unit() -> Self {
        IntervalUnion {
            parts: vec![(Rational::zero(), Rational::one())],
        }
    }

    /// Normalizes arbitrary open intervals `(lo, hi)`: clip to `(0,1)`, drop
    /// empties, sort, merge overlaps.
    pub fn from_intervals<I>(intervals: I) -> Self
    where
        I: IntoIterator<Item = (Rational, Rational)>,
    {
        let zero = Rational::zero();
        let one = Rational::one();
        let mut raw: Vec<(Rational, Rational)> = intervals
            .into_iter()
            .map(|(lo, hi)| (max(&lo, &zero), min(&hi, &one)))
            .filter(|(lo, hi)| lo < hi)
            .collect();
        raw.sort();
        Self::from_sorted(raw)
    }

    fn from_sorted(raw: Vec<(Rational, Rational)>) -> Self {
        let mut parts: Vec<(Rational, Rational)> = Vec::with_capacity(raw.len());
        for (lo, hi) in raw {
            match parts.last_mut() {
                Some(last) if lo < last.1 => {
                    if hi > last.1 {
                        last.1 = hi;
                    }
                }
                _ => parts.push((lo, hi)),
            }
        }
        IntervalUnion { parts }
    }

    pub fn parts(&self) -> &[(Rational, Rational)] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn measure(&self) -> Rational {
        self.parts.iter().map(|(lo, hi)| hi - lo).sum()
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let idx = self.parts.partition_point(|(_, hi)| hi <= x);
        self.parts.get(idx).is_some_and(|(lo, _)| lo < x)
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        if other.is_empty() {
            return self.clone();
        }
        if self.is_empty() {
            return other.clone();
        }
        let mut merged = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.parts.len() || j < other.parts.len() {
            let take_left = j >= other.parts.len() || (i < self.parts.len() && self.parts[i] <= other.parts[j]);
            if take_left {
                merged.push(self.parts[i].clone());
                i += 1;
            } else {
                merged.push(other.parts[j].clone());
                j += 1;
            }
        }
        Self::from_sorted(merged)
    }

    pub fn intersect(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut parts = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.parts.len() && j < other.parts.len() {
            let (a0, a1) = &self.parts[i];
            let (b0, b1) = &other.parts[j];
            let lo = max(a0, b0);
            let hi = min(a1, b1);
            if lo < hi {
                parts.push((lo, hi));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalUnion { parts }
    }

    /// Intersection with the open window `(lo, hi)`.
    pub fn restrict(&self, lo: &Rational, hi: &Rational) -> IntervalUnion {
        let start = self.parts.partition_point(|(_, b)| b <= lo);
        let parts = self.parts[start..]
            .iter()
            .take_while(|(a, _)| a < hi)
            .filter_map(|(a, b)| {
                let a = max(a, lo);
                let b = min(b, hi);
                (a < b).then_some((a, b))
            })
            .collect();
        IntervalUnion { parts }
    }

    /// Shrinks every part by `delta` on both sides, dropping the ones that vanish.
    pub fn shrink(&self, delta: &Rational) -> IntervalUnion {
        let parts = self
            .parts
            .iter()
            .map(|(a, b)| (a + delta, b - delta))
            .filter(|(a, b)| a < b)
            .collect();
        IntervalUnion { parts }
    }

    /// Connected components of the closure (touching parts join).
    pub fn closure(&self) -> Vec<ClosedInterval> {
        let mut out: Vec<ClosedInterval> = Vec::new();
        for (lo, hi) in &self.parts {
            match out.last_mut() {
                Some(last) if last.hi == *lo => last.hi = hi.clone(),
                _ => out.push(ClosedInterval::new(lo.clone(), hi.clone())),
            }
        }
        out
    }

    /// `[0,1] \ U` as closed components, including degenerate points.
    pub fn complement_closed(&self) -> Vec<ClosedInterval> {
        let mut out = Vec::new();
        let mut cursor = Rational::zero();
        for (lo, hi) in &self.parts {
            out.push(ClosedInterval::new(cursor.clone(), lo.clone()));
            cursor = hi.clone();
        }
        out.push(ClosedInterval::new(cursor, Rational::one()));
        out
    }

    /// Every part lies inside a single part of `other`.
    pub fn is_subset_of(&self, other: &IntervalUnion) -> bool {
        self.parts.iter().all(|(lo, hi)| {
            let idx = other.parts.partition_point(|(_, b)| b <= lo);
            other.parts.get(idx).is_some_and(|(a, b)| a <= lo && hi <= b)
        })
    }

    /// Certifies `closure(self) ⊂ other`: each closed component sits strictly
    /// inside one part of `other`.
    pub fn closure_contained_in(&self, other: &IntervalUnion) -> bool {
        self.closure().iter().all(|c| {
            let idx = other.parts.partition_point(|(_, b)| b <= c.lo());
            other.parts.get(idx).is_some_and(|(a, b)| a < c.lo() && c.hi() < b)
        })
    }

    /// Smallest closed interval containing the union.
    pub fn hull(&self) -> Option<ClosedInterval> {
        let first = self.parts.first()?;
        let last = self.parts.last()?;
        Some(ClosedInterval::new(first.0.clone(), last.1.clone()))
    }

    pub fn diameter(&self) -> Rational {
        self.hull().map(|h| h.length()).unwrap_or_else(Rational::zero)
    }

    /// Parses the `a:b,c:d` form produced by `Display` (`empty` for ∅).
    pub fn parse(text: &str) -> Result<IntervalUnion> {
        let text = text.trim();
        if text == "empty" {
            return Ok(IntervalUnion::empty());
        }
        let mut raw = Vec::new();
        for piece in text.split(',') {
            let (lo, hi) = piece
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("interval `{piece}` lacks `:`")))?;
            let lo = parse_rational(lo)?;
            let hi = parse_rational(hi)?;
            if lo >= hi {
                return Err(Error::Parse(format!("empty interval `{piece}`")));
            }
            raw.push((lo, hi));
        }
        let union = IntervalUnion::from_intervals(raw.clone());
        if union.parts != raw {
            return Err(Error::Parse(format!("interval list `{text}` is not normalized")));
        }
        Ok(union)
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str("empty");
        }
        for (k, (lo, hi)) in self.parts.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}", fmt_rational(lo), fmt_rational(hi))?;
        }
        Ok(())
    }
}
