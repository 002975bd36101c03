//! Points with a dense orbit, built by nested balls.
//!
//! Step `i` shrinks the current ball `C` to a ball whose closure lies in
//! `C`, inside one cell of `T^n` for some `n > i`, and inside
//! `(T^n)^{-1}(B_i)` where `B_i` is ideal ball number `i`. The limit point
//! visits every ideal ball, and avoids every cell endpoint, so it lies in
//! the domain of computability of every iterate.

use std::sync::{Arc, Mutex};

use num::{One, Zero};

use super::map::PAMap;
use crate::cms::{ComputablePoint, IdealBall};
use crate::rational::{fmt_rational, half, int, max, min, parse_rational, pow2_neg, Rational};
use crate::{Error, Result};

/// One step of the construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Visit {
    /// Number `i` of the ideal ball `B_i` being visited.
    pub ball_index: u64,
    /// The iterate with `T^n(chosen) ⊆ B_i`.
    pub n: u64,
    /// Ball whose closure lies in the previous ball; the next ball is
    /// `B(center, radius/2)`.
    pub chosen: IdealBall,
}

impl Visit {
    pub fn next_ball(&self) -> IdealBall {
        IdealBall::new(self.chosen.center().clone(), self.chosen.radius() * half()).expect("positive radius")
    }

    pub fn to_line(&self) -> String {
        format!(
            "visit {} {} {} {}",
            self.ball_index,
            self.n,
            fmt_rational(self.chosen.center()),
            fmt_rational(self.chosen.radius())
        )
    }

    pub fn parse_line(line: &str) -> Result<Visit> {
        let bad = || Error::Parse(format!("bad visit line `{line}`"));
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "visit" {
            return Err(bad());
        }
        Ok(Visit {
            ball_index: fields[1].parse().map_err(|_| bad())?,
            n: fields[2].parse().map_err(|_| bad())?,
            chosen: IdealBall::new(parse_rational(fields[3])?, parse_rational(fields[4])?)?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct DenseConfig {
    /// Start ball.
    pub seed: IdealBall,
    /// Iterates tried per step are `i+1 ..= i+1+extra_iterates`.
    pub extra_iterates: u64,
    /// Cap on the cells enumerated per iterate.
    pub cell_budget: usize,
}

impl Default for DenseConfig {
    fn default() -> Self {
        DenseConfig {
            seed: IdealBall::new(Rational::new(1.into(), 2.into()), Rational::new(1.into(), 2.into()))
                .expect("valid seed"),
            extra_iterates: 64,
            cell_budget: 100_000,
        }
    }
}

struct DenseState {
    current: IdealBall,
    visits: Vec<Visit>,
}

/// Lazily extended dense-orbit construction.
#[derive(Clone)]
pub struct DenseOrbit {
    map: PAMap,
    config: DenseConfig,
    state: Arc<Mutex<DenseState>>,
}

impl DenseOrbit {
    pub fn new(map: &PAMap, config: DenseConfig) -> DenseOrbit {
        let current = config.seed.clone();
        DenseOrbit {
            map: map.clone(),
            config,
            state: Arc::new(Mutex::new(DenseState {
                current,
                visits: Vec::new(),
            })),
        }
    }

    /// Runs the construction until `count` balls have been visited.
    pub fn visit_first(&self, count: u64) -> Result<Vec<Visit>> {
        let mut state = self.state.lock().expect("dense state poisoned");
        while (state.visits.len() as u64) < count {
            let i = state.visits.len() as u64;
            let visit = self.step(i, &state.current)?;
            state.current = visit.next_ball();
            state.visits.push(visit);
        }
        Ok(state.visits[..count as usize].to_vec())
    }

    fn step(&self, i: u64, current: &IdealBall) -> Result<Visit> {
        let target = IdealBall::from_index(i);
        let (t_lo, t_hi) = (target.center() - target.radius(), target.center() + target.radius());
        let lo = max(&(current.center() - current.radius()), &Rational::zero());
        let hi = min(&(current.center() + current.radius()), &Rational::one());
        let cap = i + 1 + self.config.extra_iterates;
        for n in i + 1..=cap {
            let cells = self
                .map
                .cells_within(n, &lo, &hi, self.config.cell_budget)
                .ok_or_else(|| {
                    Error::Budget(format!(
                        "visiting {target}: cells of T^{n} in ({lo}, {hi}) exceed {}",
                        self.config.cell_budget
                    ))
                })?;
            for (a, b, g) in cells {
                let u = (&t_lo - &g.offset) / &g.slope;
                let v = (&t_hi - &g.offset) / &g.slope;
                let (u, v) = if u <= v { (u, v) } else { (v, u) };
                let p_lo = max(&max(&a, &lo), &u);
                let p_hi = min(&min(&b, &hi), &v);
                if p_lo >= p_hi {
                    continue;
                }
                let radius = min(&((&p_hi - &p_lo) / int(4)), &pow2_neg(i + 2));
                let chosen = IdealBall::new((&p_lo + &p_hi) * half(), radius)?;
                return Ok(Visit {
                    ball_index: i,
                    n,
                    chosen,
                });
            }
        }
        Err(Error::Budget(format!(
            "no iterate T^n with n <= {cap} maps part of {current} into {target}"
        )))
    }

    /// The limit point; approximant `k` runs the construction until the
    /// current ball has radius at most `2^{-k}`.
    pub fn point(&self) -> ComputablePoint {
        let me = self.clone();
        let header = vec![
            "# kind dense".to_string(),
            format!("# map {}", self.map),
            format!(
                "# seed {} {}",
                fmt_rational(self.config.seed.center()),
                fmt_rational(self.config.seed.radius())
            ),
        ];
        ComputablePoint::new(
            move |k| {
                let bound = pow2_neg(k as u64);
                let mut count = 0;
                loop {
                    let ball = match me.visit_first(count)?.last() {
                        Some(v) => v.next_ball(),
                        None => me.config.seed.clone(),
                    };
                    if *ball.radius() <= bound {
                        return Ok(ball.center().clone());
                    }
                    count += 1;
                }
            },
            header,
        )
    }

    /// Header and visit lines for the first `count` visits.
    pub fn certificate(&self, count: u64) -> Result<Vec<String>> {
        let mut lines = self.point().certificate().to_vec();
        lines.extend(self.visit_first(count)?.iter().map(Visit::to_line));
        Ok(lines)
    }
}

/// Replays visits with exact interval iteration.
///
/// For each visit: the ball index is the step number, the closure of the
/// chosen ball lies in the previous ball, and iterating the closed ball
/// keeps every image strictly inside one branch domain for the first `n`
/// steps (so `n > i` also covers the domain layers), with `T^n` of it strictly inside `B_i`.
pub fn check_visits(map: &PAMap, seed: &IdealBall, visits: &[Visit]) -> Result<()> {
    let mut previous = seed.clone();
    for (step, visit) in visits.iter().enumerate() {
        let i = step as u64;
        let fail = |reason: String| Error::verification(format!("visit {i}"), reason);
        if visit.ball_index != i {
            return Err(fail(format!("ball index {} out of order", visit.ball_index)));
        }
        if !visit.chosen.closure_within(&previous) {
            return Err(fail(format!("{} is not compactly inside {previous}", visit.chosen)));
        }
        if visit.n <= i {
            return Err(fail(format!("iterate {} must exceed {i}", visit.n)));
        }
        let mut lo = visit.chosen.center() - visit.chosen.radius();
        let mut hi = visit.chosen.center() + visit.chosen.radius();
        for k in 0..visit.n {
            let branch = &map.branches()[map.branch_index(&lo)];
            if !(branch.lo < lo && hi < branch.hi) {
                return Err(fail(format!(
                    "T^{k} of the ball, [{lo}, {hi}], is not inside one branch interior"
                )));
            }
            let (a, b) = (branch.map.eval(&lo), branch.map.eval(&hi));
            (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        }
        let target = IdealBall::from_index(i);
        if !(target.contains(&lo) && target.contains(&hi)) {
            return Err(fail(format!(
                "T^{} of the ball, [{lo}, {hi}], is not inside {target}",
                visit.n
            )));
        }
        previous = visit.next_ball();
    }
    Ok(())
}
