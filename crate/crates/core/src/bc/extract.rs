//! Computable points in a Borel–Cantelli set, by nested finite unions.

use std::sync::{Arc, Mutex};

use num::{One, Zero};

use super::certificate::{ExtractionCertificate, StepRecord};
use super::BCSequence;
use crate::cms::{ComputablePoint, IdealBall};
use crate::interval::IntervalUnion;
use crate::measures::ComputableMeasure;
use crate::rational::{int, max, min, pow2_neg, Rational};
use crate::{Error, Result};

/// Budgets for the extraction loop. `None` means unbounded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractConfig {
    /// Largest stage used to certify the seed measure.
    pub seed_stages: u64,
    /// Largest global dovetailing bound `T` per Claim search.
    pub search_budget: Option<u64>,
    /// Largest number of refinement steps.
    pub step_budget: Option<u64>,
    /// Extra header lines copied into the certificate.
    pub header: Vec<String>,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            seed_stages: 64,
            search_budget: Some(256),
            step_budget: None,
            header: Vec::new(),
        }
    }
}

struct LoopState {
    seq: BCSequence,
    measure: Arc<dyn ComputableMeasure>,
    config: ExtractConfig,
    /// `V_0, V_1, …`
    sets: Vec<IntervalUnion>,
    /// `n_0, n_1, …`
    starts: Vec<u64>,
    certificate: ExtractionCertificate,
}

/// Handle on a running extraction; steps are computed on demand.
#[derive(Clone)]
pub struct ExtractedPoint {
    state: Arc<Mutex<LoopState>>,
}

/// Starts the extraction from `seed`.
///
/// Fails fast when `μ(seed)` cannot be certified positive within
/// `config.seed_stages` stages. Chooses `n_0` least with
/// `2^{-n_0+1} < lower(seed)`, so the first nested set is the seed itself.
pub fn extract_point(
    seq: &BCSequence,
    measure: Arc<dyn ComputableMeasure>,
    seed: &IdealBall,
    config: ExtractConfig,
) -> Result<ExtractedPoint> {
    if !seq.is_normal() {
        return Err(Error::Invalid(format!(
            "sequence `{}` is not in normal form",
            seq.label()
        )));
    }
    if seed.radius() > &Rational::one() {
        return Err(Error::Invalid(format!("seed radius {} exceeds 1", seed.radius())));
    }
    let v0 = seed.to_union();
    let mut certified = None;
    for stage in 0..=config.seed_stages {
        let lower = measure.lower_union(&v0, stage);
        if lower > Rational::zero() {
            certified = Some((stage, lower));
            break;
        }
    }
    let (stage, lower) = certified.ok_or_else(|| {
        Error::Budget(format!(
            "seed {seed} has no certified positive measure within {} stages",
            config.seed_stages
        ))
    })?;
    let mut n0 = 0u64;
    while pow2_neg(n0) * int(2) >= lower {
        n0 += 1;
    }
    let mut header = config.header.clone();
    if !header.iter().any(|l| l.starts_with("# kind ")) {
        header.insert(0, "# kind extract".to_string());
    }
    let certificate = ExtractionCertificate {
        header,
        seed: seed.clone(),
        n0,
        n0_stage: stage,
        n0_lower: lower,
        steps: Vec::new(),
        complete: false,
    };
    Ok(ExtractedPoint {
        state: Arc::new(Mutex::new(LoopState {
            seq: seq.clone(),
            measure,
            config,
            sets: vec![v0],
            starts: vec![n0],
            certificate,
        })),
    })
}

impl ExtractedPoint {
    /// Runs the loop until `V_k` exists.
    pub fn run_to(&self, k: u64) -> Result<()> {
        let mut state = self.state.lock().expect("extraction state poisoned");
        while (state.sets.len() as u64) <= k {
            if let Some(cap) = state.config.step_budget {
                if state.sets.len() as u64 > cap {
                    return Err(Error::Budget(format!("step budget {cap} exhausted")));
                }
            }
            state.step()?;
        }
        Ok(())
    }

    /// `V_k` (runs the loop as needed).
    pub fn set(&self, k: u64) -> Result<IntervalUnion> {
        self.run_to(k)?;
        let state = self.state.lock().expect("extraction state poisoned");
        Ok(state.sets[k as usize].clone())
    }

    pub fn steps_done(&self) -> u64 {
        self.state.lock().expect("extraction state poisoned").sets.len() as u64 - 1
    }

    pub fn n0(&self) -> u64 {
        self.state.lock().expect("extraction state poisoned").starts[0]
    }

    /// Certificate of the steps run so far, closed with an `end` record.
    pub fn certificate(&self) -> ExtractionCertificate {
        let state = self.state.lock().expect("extraction state poisoned");
        let mut cert = state.certificate.clone();
        cert.complete = true;
        cert
    }

    /// The limit point: approximant `n` is the midpoint of the first part of
    /// `V_{n+2}`, whose closure has diameter `≤ 2^{-n-1}` and holds the limit.
    pub fn point(&self) -> ComputablePoint {
        let handle = self.clone();
        ComputablePoint::new(
            move |n| {
                let v = handle.set(n as u64 + 2)?;
                let (lo, hi) = v.parts()[0].clone();
                Ok((lo + hi) / int(2))
            },
            Vec::new(),
        )
    }
}

impl LoopState {
    /// One refinement `V_i → V_{i+1}` via the Claim search.
    fn step(&mut self) -> Result<()> {
        let i = self.sets.len() as u64 - 1;
        let n_i = *self.starts.last().expect("n_0 present");
        let v_i = self.sets.last().expect("V_0 present").clone();
        let hull = v_i.hull().ok_or_else(|| Error::Invalid(format!("V_{i} is empty")))?;
        let radius = pow2_neg(i + 1);
        let grid = pow2_neg(i + 2);
        // candidate centers k·2^{-i-2} whose ball meets the hull of V_i
        let first_k = ((hull.lo() - &radius) / &grid).floor().to_integer();
        let last_k = ((hull.hi() + &radius) / &grid).ceil().to_integer();
        let zero = Rational::zero();
        let one = Rational::one();
        let candidates: Vec<IdealBall> = num::range_inclusive(first_k, last_k)
            .map(|k| Rational::from_integer(k) * &grid)
            .filter(|c| *c >= zero && *c <= one)
            .filter_map(|c| IdealBall::new(c, radius.clone()).ok())
            .collect();

        let cap = self.config.search_budget;
        let mut big_t = 1u64;
        loop {
            if let Some(cap) = cap {
                if big_t > cap {
                    return Err(Error::Budget(format!(
                        "step {i}: no Claim witness with dovetailing bound {cap} (n_i = {n_i})"
                    )));
                }
            }
            for m in n_i + 1..=n_i + big_t {
                for k in n_i..m {
                    if let Some(why) = self.seq.layer(k).blocked_reason() {
                        return Err(Error::Budget(format!("step {i}: layer {k} unreachable: {why}")));
                    }
                }
                for ball in candidates.iter().take(big_t as usize) {
                    if let Some(found) = self.try_witness(&v_i, ball, n_i, m, big_t) {
                        self.accept(i, n_i, m, ball, big_t, found);
                        return Ok(());
                    }
                }
            }
            big_t += 1;
        }
    }

    /// Tests the strict inequality `lower(V_i ∩ B' ∩ ⋂_{n_i ≤ k < m} U_k) > 2^{-m+1}`
    /// at `stage`, returning the shrunk successor when it certifies.
    fn try_witness(
        &self,
        v_i: &IntervalUnion,
        ball: &IdealBall,
        n_i: u64,
        m: u64,
        stage: u64,
    ) -> Option<(IntervalUnion, Rational)> {
        let lo = max(&(ball.center() - ball.radius()), &Rational::zero());
        let hi = min(&(ball.center() + ball.radius()), &Rational::one());
        let threshold = pow2_neg(m) * int(2);
        let mut w = v_i.restrict(&lo, &hi);
        for k in n_i..m {
            if w.is_empty() {
                return None;
            }
            w = w.intersect(&self.seq.layer(k).realize_within(stage, &lo, &hi));
        }
        if w.is_empty() || self.measure.lower_union(&w, stage) <= threshold {
            return None;
        }
        // shrink each part until the successor certifies on its own
        let mut bits = 2 + m;
        loop {
            let candidate = w.shrink(&pow2_neg(bits));
            if !candidate.is_empty() && candidate.closure_contained_in(&w) {
                let lower = self.measure.lower_union(&candidate, stage);
                if lower > threshold {
                    return Some((candidate, lower));
                }
            }
            bits += 1;
            if bits > 4 * m + 256 {
                return None;
            }
        }
    }

    fn accept(&mut self, i: u64, n_i: u64, m: u64, ball: &IdealBall, stage: u64, found: (IntervalUnion, Rational)) {
        let (next, lower) = found;
        self.certificate.steps.push(StepRecord {
            step: i,
            n_i,
            m,
            ball: ball.clone(),
            stage,
            set: next.clone(),
            lower,
        });
        self.sets.push(next);
        self.starts.push(m);
    }
}

/// A computable point from nested sets with certified `closure(V_{i+1}) ⊆ V_i`
/// and `diam(V_i) ≤ 2^{-i+1}`; approximant `n` is taken from `V_{n+2}`.
pub fn shrinking_to_point(sets: Vec<IntervalUnion>) -> Result<ComputablePoint> {
    for (i, v) in sets.iter().enumerate() {
        if v.is_empty() {
            return Err(Error::verification(format!("V_{i}"), "empty set"));
        }
        if v.diameter() > pow2_neg(i as u64) * int(2) {
            return Err(Error::verification(format!("V_{i}"), "diameter exceeds 2^(-i+1)"));
        }
        if i > 0 && !v.closure_contained_in(&sets[i - 1]) {
            return Err(Error::verification(
                format!("V_{i}"),
                "closure not inside the previous set",
            ));
        }
    }
    let sets = Arc::new(sets);
    Ok(ComputablePoint::new(
        move |n| {
            let v = sets.get(n as usize + 2).ok_or_else(|| {
                Error::Budget(format!(
                    "approximant {n} needs V_{} but only {} sets are given",
                    n + 2,
                    sets.len()
                ))
            })?;
            let (lo, hi) = v.parts()[0].clone();
            Ok((lo + hi) / int(2))
        },
        Vec::new(),
    ))
}
