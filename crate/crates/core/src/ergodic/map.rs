//! Piecewise-affine interval maps and their cell trees.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num::{One, Signed, ToPrimitive, Zero};

use crate::cms::{ConstructiveOpen, GDelta, OpenSet};
use crate::interval::IntervalUnion;
use crate::piecewise::{midpoint, Affine};
use crate::rational::{fmt_rational, int, max, min, parse_rational, Rational};
use crate::{Error, Result};

/// One branch: `x ↦ slope·x + offset` on `[lo, hi)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub lo: Rational,
    pub hi: Rational,
    pub map: Affine,
}

/// Interval map on `[0,1]`, affine on each branch. The last branch also owns `1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PAMap {
    branches: Vec<Branch>,
    base: Option<u64>,
}

impl PAMap {
    /// Validates that the branch domains partition `[0,1)` in order and that
    /// every branch maps into `[0,1]`.
    pub fn new(branches: Vec<Branch>) -> Result<PAMap> {
        if branches.is_empty() {
            return Err(Error::Invalid("a map needs at least one branch".into()));
        }
        let mut cursor = Rational::zero();
        for (j, b) in branches.iter().enumerate() {
            if b.lo != cursor {
                return Err(Error::Invalid(format!(
                    "branch {j} starts at {} instead of {cursor}",
                    b.lo
                )));
            }
            if b.lo >= b.hi {
                return Err(Error::Invalid(format!("branch {j} has an empty domain")));
            }
            if b.map.slope.is_zero() {
                return Err(Error::Invalid(format!("branch {j} is constant")));
            }
            for y in [b.map.eval(&b.lo), b.map.eval(&b.hi)] {
                if y.is_negative() || y > Rational::one() {
                    return Err(Error::Invalid(format!("branch {j} leaves [0,1] (value {y})")));
                }
            }
            cursor = b.hi.clone();
        }
        if !cursor.is_one() {
            return Err(Error::Invalid(format!("branches end at {cursor} instead of 1")));
        }
        let base = detect_base(&branches);
        Ok(PAMap { branches, base })
    }

    /// `T_b(x) = bx mod 1`.
    pub fn b_adic(b: u64) -> Result<PAMap> {
        if b < 2 {
            return Err(Error::Invalid(format!("base {b} must be at least 2")));
        }
        let branches = (0..b)
            .map(|k| Branch {
                lo: Rational::new(k.into(), b.into()),
                hi: Rational::new((k + 1).into(), b.into()),
                map: Affine::new(int(b), -int(k)),
            })
            .collect();
        PAMap::new(branches)
    }

    /// Parses `xb:<b>` or a list of `[a, c) -> slope p, offset r` entries
    /// separated by `;` or newlines.
    pub fn parse(text: &str) -> Result<PAMap> {
        let text = text.trim();
        if let Some(b) = text.strip_prefix("xb:") {
            let b = b
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad base in `{text}`")))?;
            return PAMap::b_adic(b);
        }
        let mut branches = Vec::new();
        for entry in text.split([';', '\n']).map(str::trim).filter(|e| !e.is_empty()) {
            branches.push(parse_branch(entry)?);
        }
        PAMap::new(branches)
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// `Some(b)` when the map is `x ↦ bx mod 1`.
    pub fn base(&self) -> Option<u64> {
        self.base
    }

    pub fn is_expanding(&self) -> bool {
        self.branches.iter().all(|b| b.map.slope.abs() > Rational::one())
    }

    /// Index of the branch owning `x ∈ [0,1]`.
    pub fn branch_index(&self, x: &Rational) -> usize {
        let k = self.branches.partition_point(|b| b.hi <= *x);
        k.min(self.branches.len() - 1)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.branches[self.branch_index(x)].map.eval(x)
    }

    /// Interior branch endpoints.
    pub fn cut_points(&self) -> Vec<Rational> {
        self.branches[1..].iter().map(|b| b.lo.clone()).collect()
    }

    /// Splits the cell `(lo, hi)`, on which `T^d = g`, where its image crosses
    /// one of `cuts` (sorted, interior to `(0,1)`). Returns the sub-cells in
    /// increasing order with the midpoint of each image piece.
    pub(crate) fn split_cell(
        &self,
        lo: &Rational,
        hi: &Rational,
        g: &Affine,
        cuts: &[Rational],
    ) -> Vec<(Rational, Rational, Rational)> {
        let (ya, yb) = (g.eval(lo), g.eval(hi));
        let (y_lo, y_hi) = if ya <= yb { (ya, yb) } else { (yb, ya) };
        let first = cuts.partition_point(|c| *c <= y_lo);
        let last = cuts.partition_point(|c| *c < y_hi);
        let mut ys = Vec::with_capacity(last - first + 2);
        ys.push(y_lo);
        ys.extend(cuts[first..last].iter().cloned());
        ys.push(y_hi);
        let mut out: Vec<(Rational, Rational, Rational)> = ys
            .windows(2)
            .map(|w| {
                let xa = (&w[0] - &g.offset) / &g.slope;
                let xb = (&w[1] - &g.offset) / &g.slope;
                let (a, b) = if xa <= xb { (xa, xb) } else { (xb, xa) };
                (a, b, midpoint(&w[0], &w[1]))
            })
            .collect();
        out.sort_by(|p, q| p.0.cmp(&q.0));
        out
    }

    /// Cells of `T^depth` meeting `(lo, hi)`, with `T^depth` on each; `None`
    /// when more than `budget` cells would be produced.
    pub fn cells_within(
        &self,
        depth: u64,
        lo: &Rational,
        hi: &Rational,
        budget: usize,
    ) -> Option<Vec<(Rational, Rational, Affine)>> {
        let cuts = self.cut_points();
        let mut level = vec![(
            Rational::zero(),
            Rational::one(),
            Affine::new(Rational::one(), Rational::zero()),
        )];
        for _ in 0..depth {
            let mut next = Vec::new();
            for (a, b, g) in &level {
                for (ca, cb, y) in self.split_cell(a, b, g, &cuts) {
                    if cb <= *lo || ca >= *hi {
                        continue;
                    }
                    let branch = &self.branches[self.branch_index(&y)];
                    next.push((ca, cb, branch.map.compose(g)));
                    if next.len() > budget {
                        return None;
                    }
                }
            }
            level = next;
        }
        Some(level)
    }

    /// Domain of computability: layer `n` removes the endpoints of the cells of
    /// `T^{n+1}`, i.e. the preimages of order `≤ n` of the branch endpoints.
    pub fn domain(&self, budget: usize) -> GDelta {
        let map = self.clone();
        GDelta::new(move |n| {
            ConstructiveOpen::from_set(DomainLayer {
                map: map.clone(),
                depth: n + 1,
                budget,
                whole: OnceLock::new(),
                windows: Mutex::default(),
            })
        })
    }
}

fn detect_base(branches: &[Branch]) -> Option<u64> {
    let b = branches.len() as u64;
    let matches = branches.iter().enumerate().all(|(k, br)| {
        br.lo == Rational::new((k as u64).into(), b.into()) && br.map == Affine::new(int(b), -int(k as u64))
    });
    (b >= 2 && matches).then_some(b)
}

fn parse_branch(entry: &str) -> Result<Branch> {
    let bad = |what: &str| Error::Parse(format!("branch `{entry}`: {what}"));
    let (domain, rule) = entry.split_once("->").ok_or_else(|| bad("missing `->`"))?;
    let domain = domain.trim();
    let inner = domain
        .strip_prefix('[')
        .and_then(|d| d.strip_suffix(')').or_else(|| d.strip_suffix(']')))
        .ok_or_else(|| bad("domain must look like `[a, b)`"))?;
    let (lo, hi) = inner.split_once(',').ok_or_else(|| bad("domain needs two endpoints"))?;
    let mut slope = None;
    let mut offset = None;
    for field in rule.split(',') {
        let mut words = field.split_whitespace();
        match (words.next(), words.next(), words.next()) {
            (Some("slope"), Some(v), None) => slope = Some(parse_rational(v)?),
            (Some("offset"), Some(v), None) => offset = Some(parse_rational(v)?),
            _ => return Err(bad(&format!("unexpected `{}`", field.trim()))),
        }
    }
    Ok(Branch {
        lo: parse_rational(lo.trim())?,
        hi: parse_rational(hi.trim())?,
        map: Affine::new(
            slope.ok_or_else(|| bad("missing slope"))?,
            offset.unwrap_or_else(Rational::zero),
        ),
    })
}

impl fmt::Display for PAMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(b) = self.base {
            return write!(f, "xb:{b}");
        }
        for (j, b) in self.branches.iter().enumerate() {
            if j > 0 {
                f.write_str("; ")?;
            }
            let close = if j + 1 == self.branches.len() { ']' } else { ')' };
            write!(
                f,
                "[{}, {}{close} -> slope {}, offset {}",
                fmt_rational(&b.lo),
                fmt_rational(&b.hi),
                fmt_rational(&b.map.slope),
                fmt_rational(&b.map.offset)
            )?;
        }
        Ok(())
    }
}

/// `(0,1)` minus the cell endpoints of `T^depth`. The whole layer is
/// computed once when it fits the budget; otherwise windows are realized
/// separately and remembered.
struct DomainLayer {
    map: PAMap,
    depth: u64,
    budget: usize,
    whole: OnceLock<Option<IntervalUnion>>,
    windows: Mutex<HashMap<(Rational, Rational), IntervalUnion>>,
}

/// Windows remembered per layer before the memo is reset.
const WINDOW_MEMO: usize = 4096;

impl DomainLayer {
    fn cells_union(&self, lo: &Rational, hi: &Rational) -> Option<IntervalUnion> {
        self.map
            .cells_within(self.depth, lo, hi, self.budget)
            .map(|cells| IntervalUnion::from_intervals(cells.into_iter().map(|(a, b, _)| (max(&a, lo), min(&b, hi)))))
    }
}

impl OpenSet for DomainLayer {
    fn realize(&self, stage: u64) -> IntervalUnion {
        self.realize_within(stage, &Rational::zero(), &Rational::one())
    }

    fn realize_within(&self, _stage: u64, lo: &Rational, hi: &Rational) -> IntervalUnion {
        let whole = self
            .whole
            .get_or_init(|| self.cells_union(&Rational::zero(), &Rational::one()));
        if let Some(union) = whole {
            return union.restrict(lo, hi);
        }
        let key = (lo.clone(), hi.clone());
        if let Some(hit) = self.windows.lock().expect("domain memo poisoned").get(&key) {
            return hit.clone();
        }
        // a window beyond the budget realizes as empty, which is sound
        let union = self.cells_union(lo, hi).unwrap_or_else(IntervalUnion::empty);
        let mut memo = self.windows.lock().expect("domain memo poisoned");
        if memo.len() >= WINDOW_MEMO {
            memo.clear();
        }
        memo.insert(key, union.clone());
        union
    }
}

/// Orbit of a rational point, `x, Tx, …, T^{n-1}x`.
pub fn orbit(map: &PAMap, x: &Rational, n: usize) -> Vec<Rational> {
    let mut out = Vec::with_capacity(n);
    let mut y = x.clone();
    for _ in 0..n {
        let next = map.eval(&y);
        out.push(std::mem::replace(&mut y, next));
    }
    out
}

/// Base-`b` digits of `x ∈ [0,1)`, first `n` of them.
pub fn digits(x: &Rational, b: u64, n: usize) -> Vec<u64> {
    let mut y = x.clone();
    let base = int(b);
    (0..n)
        .map(|_| {
            let scaled = &y * &base;
            let d = scaled.floor();
            y = &scaled - &d;
            d.to_integer().to_u64().expect("digit fits")
        })
        .collect()
}
