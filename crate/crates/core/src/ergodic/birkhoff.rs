//! Exact Birkhoff averages `f_n = S_n^φ/n` and their deviation opens.

use std::sync::Mutex;

use num::{One, Signed, Zero};

use super::map::PAMap;
use super::observable::Observable;
use crate::cms::{ConstructiveOpen, OpenSet};
use crate::interval::IntervalUnion;
use crate::piecewise::{merge_breakpoints, Affine, PiecewiseAffine};
use crate::rational::{int, max, min, Rational};
use crate::{Error, Result};

/// Default cap on pieces (and lazy frontier nodes).
pub const DEFAULT_PIECE_BUDGET: usize = 2_000_000;

/// Branch endpoints together with the observable's breakpoints.
fn cuts_for(map: &PAMap, phi: &PiecewiseAffine) -> Vec<Rational> {
    let inner = &phi.breakpoints()[1..phi.breakpoints().len() - 1];
    merge_breakpoints(&map.cut_points(), inner)
}

fn identity() -> Affine {
    Affine::new(Rational::one(), Rational::zero())
}

/// One step down the cell tree: the children of a cell `(lo, hi)` with
/// `T^d = g` and `S_d = s`, each carrying `T^{d+1}` and `S_{d+1}`.
fn children(
    map: &PAMap,
    phi: &PiecewiseAffine,
    cuts: &[Rational],
    lo: &Rational,
    hi: &Rational,
    g: &Affine,
    s: &Affine,
) -> Vec<(Rational, Rational, Affine, Affine)> {
    map.split_cell(lo, hi, g, cuts)
        .into_iter()
        .map(|(a, b, y)| {
            let piece = &phi.pieces()[phi.piece_index(&y)];
            let branch = &map.branches()[map.branch_index(&y)];
            (a, b, branch.map.compose(g), s.add(&piece.compose(g)))
        })
        .collect()
}

/// Exact `f_n = (1/n) Σ_{i<n} φ∘T^i` as a piecewise-affine function.
///
/// Breakpoints are the cell endpoints of `T^n` refined by the preimages of
/// the observable's breakpoints; equal neighbours are not merged, so the
/// breakpoint set is exactly where `f_n` may fail to be computable.
pub fn birkhoff_fn(map: &PAMap, phi: &Observable, n: u64, budget: usize) -> Result<PiecewiseAffine> {
    if n == 0 {
        return Err(Error::Invalid("Birkhoff averages start at n = 1".into()));
    }
    let pw = phi.to_piecewise();
    let cuts = cuts_for(map, &pw);
    let mut level = vec![(
        Rational::zero(),
        Rational::one(),
        identity(),
        Affine::constant(Rational::zero()),
    )];
    for _ in 0..n {
        let mut next = Vec::with_capacity(level.len() * 2);
        for (lo, hi, g, s) in &level {
            next.extend(children(map, &pw, &cuts, lo, hi, g, s));
            if next.len() > budget {
                return Err(Error::Budget(format!("f_{n} needs more than {budget} pieces")));
            }
        }
        level = next;
    }
    level.sort_by(|p, q| p.0.cmp(&q.0));
    let inv_n = Rational::one() / int(n);
    let mut xs = Vec::with_capacity(level.len() + 1);
    let mut pieces = Vec::with_capacity(level.len());
    for (lo, hi, _, s) in level {
        if xs.is_empty() {
            xs.push(lo);
        }
        xs.push(hi);
        pieces.push(s.scale(&inv_n));
    }
    Ok(PiecewiseAffine::new(xs, pieces))
}

/// `f_n(x)` by exact orbit evaluation.
pub fn birkhoff_at(map: &PAMap, phi: &Observable, n: u64, x: &Rational) -> Rational {
    let pw = phi.to_piecewise();
    let mut y = x.clone();
    let mut sum = Rational::zero();
    for _ in 0..n {
        sum += pw.eval(&y);
        y = map.eval(&y);
    }
    sum / int(n)
}

/// `{x ∈ (lo, hi): |a(x) - target| < ε}`, an open interval or empty.
fn affine_band(
    a: &Affine,
    lo: &Rational,
    hi: &Rational,
    target: &Rational,
    eps: &Rational,
) -> Option<(Rational, Rational)> {
    if a.slope.is_zero() {
        let inside = (&a.offset - target).abs() < *eps;
        return inside.then(|| (lo.clone(), hi.clone()));
    }
    let x1 = (target - eps - &a.offset) / &a.slope;
    let x2 = (target + eps - &a.offset) / &a.slope;
    let (u, v) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
    let (u, v) = (max(&u, lo), min(&v, hi));
    (u < v).then_some((u, v))
}

/// Interior of `{x : |f(x) - target| < ε}` with every breakpoint of `f` removed.
pub fn deviation_union(f: &PiecewiseAffine, target: &Rational, eps: &Rational) -> IntervalUnion {
    let xs = f.breakpoints();
    IntervalUnion::from_intervals(
        f.pieces()
            .iter()
            .zip(xs.windows(2))
            .filter_map(|(a, w)| affine_band(a, &w[0], &w[1], target, eps)),
    )
}

pub fn deviation_open(f: &PiecewiseAffine, target: &Rational, eps: &Rational) -> ConstructiveOpen {
    ConstructiveOpen::finite(deviation_union(f, target, eps))
}

// ---------------------------------------------------------------------------
// Lazily refined block opens

struct Node {
    lo: Rational,
    hi: Rational,
    g: Affine,
    s: Affine,
    /// Sub-interval of the cell where every checked `n` satisfies the band.
    allowed: (Rational, Rational),
}

struct BlockState {
    depth: u64,
    frontier: Vec<Node>,
    /// Decided parts, tagged with the depth at which they were decided.
    decided: Vec<(u64, Rational, Rational)>,
    saturated: Option<String>,
    cache: Option<(u64, IntervalUnion)>,
}

/// `⋂_{lo ≤ n < hi} [|f_n - target| < ε]`, realized by refining the cell
/// tree one level per stage.
///
/// A node of depth `d` knows `S_d` exactly and bounds the later sums by
/// `S_d + (n-d)·[min φ, max φ]`; it is emitted as soon as those bounds
/// certify every remaining `n`, and dropped once some checked `n` fails
/// everywhere on it. Stage `t` realizes the parts decided at depth `≤ t`.
/// The realization at a stage does not depend on the order of calls.
pub struct BirkhoffBlockOpen {
    map: PAMap,
    phi: PiecewiseAffine,
    cuts: Vec<Rational>,
    phi_min: Rational,
    phi_max: Rational,
    target: Rational,
    eps: Rational,
    lo_n: u64,
    hi_n: u64,
    budget: usize,
    state: Mutex<BlockState>,
}

impl BirkhoffBlockOpen {
    pub fn new(
        map: &PAMap,
        phi: &Observable,
        target: Rational,
        eps: Rational,
        lo_n: u64,
        hi_n: u64,
        budget: usize,
    ) -> BirkhoffBlockOpen {
        let pw = phi.to_piecewise();
        let cuts = cuts_for(map, &pw);
        let phi_max = pw
            .pieces()
            .iter()
            .zip(pw.breakpoints().windows(2))
            .flat_map(|(p, w)| [p.eval(&w[0]), p.eval(&w[1])])
            .max()
            .expect("at least one piece");
        let phi_min = pw.min_value();
        let open = BirkhoffBlockOpen {
            map: map.clone(),
            phi: pw,
            cuts,
            phi_min,
            phi_max,
            target,
            eps,
            lo_n,
            hi_n,
            budget,
            state: Mutex::new(BlockState {
                depth: 0,
                frontier: Vec::new(),
                decided: Vec::new(),
                saturated: None,
                cache: None,
            }),
        };
        let root = Node {
            lo: Rational::zero(),
            hi: Rational::one(),
            g: identity(),
            s: Affine::constant(Rational::zero()),
            allowed: (Rational::zero(), Rational::one()),
        };
        {
            let mut state = open.state.lock().expect("block state poisoned");
            open.settle(root, 0, &mut state);
        }
        open
    }

    /// Emits, keeps or drops a node whose checks up to `n = depth` are done.
    fn settle(&self, node: Node, depth: u64, state: &mut BlockState) {
        let first = self.lo_n.max(depth + 1);
        if first >= self.hi_n || self.future_certified(&node, depth, first) {
            state.decided.push((depth, node.allowed.0, node.allowed.1));
        } else {
            state.frontier.push(node);
        }
    }

    /// `S_n ∈ S_d + (n-d)[min φ, max φ]` keeps the band for every `n` in
    /// `first..hi_n`; both conditions are affine in `n`, so the two ends suffice.
    fn future_certified(&self, node: &Node, depth: u64, first: u64) -> bool {
        let (a, b) = &node.allowed;
        let (sa, sb) = (node.s.eval(a), node.s.eval(b));
        let (s_lo, s_hi) = if sa <= sb { (sa, sb) } else { (sb, sa) };
        let upper = &self.target + &self.eps;
        let lower = &self.target - &self.eps;
        [first, self.hi_n - 1].iter().all(|&n| {
            let steps = int(n - depth);
            let nn = int(n);
            &s_hi + &steps * &self.phi_max < &upper * &nn && &s_lo + &steps * &self.phi_min > &lower * &nn
        })
    }

    fn advance(&self, state: &mut BlockState) {
        let depth = state.depth + 1;
        let check = depth >= self.lo_n && depth < self.hi_n;
        let frontier = std::mem::take(&mut state.frontier);
        for node in frontier {
            for (lo, hi, g, s) in children(&self.map, &self.phi, &self.cuts, &node.lo, &node.hi, &node.g, &node.s) {
                let mut allowed = (max(&lo, &node.allowed.0), min(&hi, &node.allowed.1));
                if allowed.0 >= allowed.1 {
                    continue;
                }
                if check {
                    let avg = s.scale(&(Rational::one() / int(depth)));
                    match affine_band(&avg, &allowed.0, &allowed.1, &self.target, &self.eps) {
                        Some(band) => allowed = band,
                        None => continue,
                    }
                }
                self.settle(Node { lo, hi, g, s, allowed }, depth, state);
            }
        }
        state.depth = depth;
        if state.frontier.len() > self.budget {
            state.saturated = Some(format!(
                "refinement frontier exceeds {} cells at depth {depth} (block {}..{}, eps {})",
                self.budget, self.lo_n, self.hi_n, self.eps
            ));
        }
    }

    fn realize_locked(&self, stage: u64, state: &mut BlockState) -> IntervalUnion {
        while state.depth < stage && !state.frontier.is_empty() && state.saturated.is_none() {
            self.advance(state);
        }
        if let Some((s, u)) = &state.cache {
            if *s == stage {
                return u.clone();
            }
        }
        let union = IntervalUnion::from_intervals(
            state
                .decided
                .iter()
                .filter(|(d, _, _)| *d <= stage)
                .map(|(_, a, b)| (a.clone(), b.clone())),
        );
        state.cache = Some((stage, union.clone()));
        union
    }

    /// Whether the tree is fully decided (the realization is exact).
    pub fn is_complete(&self) -> bool {
        self.state.lock().expect("block state poisoned").frontier.is_empty()
    }
}

impl OpenSet for BirkhoffBlockOpen {
    fn realize(&self, stage: u64) -> IntervalUnion {
        let mut state = self.state.lock().expect("block state poisoned");
        self.realize_locked(stage, &mut state)
    }

    fn blocked(&self) -> Option<String> {
        self.state.lock().expect("block state poisoned").saturated.clone()
    }
}
