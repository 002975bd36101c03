//! Absolutely normal numbers and μ-typical points, by extraction from
//! intersected typical-point sequences.

use std::sync::Arc;

use num::{One, ToPrimitive};

use crate::bc::{extract_point, intersect_uniform_finite, normal_form, BCSequence, ExtractConfig, ExtractedPoint};
use crate::cms::IdealBall;
use crate::ergodic::{
    lebesgue_constants, modulus_for, typical_bc, ModulusProvider, Observable, ObservableConstants, PAMap,
};
use crate::interval::ClosedInterval;
use crate::measures::{ComputableMeasure, Lebesgue};
use crate::rational::{fmt_rational, int, pow2_neg, Rational};
use crate::{Error, Result};

/// A normal-number job: frequencies of every word of length `1..=max_word_len`
/// in every base, extracted from `seed` until the enclosing interval has
/// diameter at most `2^{-precision}`.
#[derive(Clone, Debug)]
pub struct NormalJob {
    pub bases: Vec<u64>,
    pub max_word_len: u32,
    pub seed: IdealBall,
    pub precision: u32,
    pub provider: ModulusProvider,
    pub alpha: Rational,
    pub piece_budget: usize,
    pub extract: ExtractConfig,
}

impl NormalJob {
    pub fn validate(&self) -> Result<()> {
        if self.bases.is_empty() {
            return Err(Error::Invalid("at least one base is required".into()));
        }
        if let Some(b) = self.bases.iter().find(|&&b| b < 2) {
            return Err(Error::Invalid(format!("base {b} must be at least 2")));
        }
        if self.max_word_len == 0 {
            return Err(Error::Invalid("maximal word length must be at least 1".into()));
        }
        if self.precision == 0 {
            return Err(Error::Invalid("precision must be at least 1".into()));
        }
        Ok(())
    }

    /// Every `(base, word)` pair, bases in the given order, words by length
    /// then lexicographically.
    pub fn words(&self) -> Vec<(u64, Vec<u64>)> {
        let mut out = Vec::new();
        for &b in &self.bases {
            for len in 1..=self.max_word_len {
                let count = b.pow(len);
                for k in 0..count {
                    let mut word = vec![0; len as usize];
                    let mut r = k;
                    for slot in word.iter_mut().rev() {
                        *slot = r % b;
                        r /= b;
                    }
                    out.push((b, word));
                }
            }
        }
        out
    }
}

/// Result of a finished extraction.
pub struct PointOutcome {
    /// The sequence the point was extracted from, for replay.
    pub sequence: BCSequence,
    pub extraction: ExtractedPoint,
    /// Closed hull of the last nested set, which holds the point.
    pub interval: ClosedInterval,
    /// Determined digits per base (normal jobs only).
    pub digits: Vec<(u64, Vec<u64>)>,
}

/// The sequence `R_{b,w}` for one cylinder under `T_b` and Lebesgue measure.
pub fn cylinder_sequence(
    base: u64,
    word: &[u64],
    provider: ModulusProvider,
    alpha: &Rational,
    piece_budget: usize,
) -> Result<BCSequence> {
    let map = PAMap::b_adic(base)?;
    let obs = Observable::cylinder(base, word.to_vec())?;
    let constants = lebesgue_constants(&map, &obs);
    let modulus = modulus_for(provider, &obs, &constants, alpha)?;
    let target = obs.lebesgue_mean();
    Ok(typical_bc(&map, &obs, &target, &modulus, piece_budget))
}

/// Normal form of the interleaved `R_{b,w}` over every configured word.
pub fn normal_sequence(job: &NormalJob) -> Result<BCSequence> {
    job.validate()?;
    let members = job
        .words()
        .iter()
        .map(|(b, w)| cylinder_sequence(*b, w, job.provider, &job.alpha, job.piece_budget))
        .collect::<Result<Vec<_>>>()?;
    Ok(normal_form(&intersect_uniform_finite(members)?))
}

/// Extracts an absolutely normal (up to the configured words) point.
pub fn normal_point(job: &NormalJob) -> Result<PointOutcome> {
    let seq = normal_sequence(job)?;
    let mut config = job.extract.clone();
    config.header = normal_header(job);
    let extraction = extract_point(&seq, Arc::new(Lebesgue), &job.seed, config)?;
    let interval = run_to_precision(&extraction, job.precision)?;
    let digits = job
        .bases
        .iter()
        .map(|&b| (b, determined_digits(&interval, b)))
        .collect();
    Ok(PointOutcome {
        sequence: seq,
        extraction,
        interval,
        digits,
    })
}

fn normal_header(job: &NormalJob) -> Vec<String> {
    let bases: Vec<String> = job.bases.iter().map(u64::to_string).collect();
    vec![
        "# kind normal".to_string(),
        format!("# bases {}", bases.join(",")),
        format!("# max_word_len {}", job.max_word_len),
        format!("# modulus {}", job.provider),
        format!("# alpha {}", fmt_rational(&job.alpha)),
        format!("# budget-pieces {}", job.piece_budget),
    ]
}

/// Runs until `diam V_k ≤ 2^{-precision}` and returns the closed hull of `V_k`.
fn run_to_precision(extraction: &ExtractedPoint, precision: u32) -> Result<ClosedInterval> {
    // diam V_k ≤ 2^{-(k-1)}
    let k = precision as u64 + 1;
    let set = extraction.set(k)?;
    let hull = set
        .hull()
        .ok_or_else(|| Error::Invalid(format!("nested set V_{k} is empty")))?;
    debug_assert!(hull.length() <= pow2_neg(precision as u64));
    Ok(hull)
}

/// Base-`b` digits shared by every point of `interval`: the word `w` is
/// emitted while `interval` lies inside the open cylinder of `w`.
pub fn determined_digits(interval: &ClosedInterval, base: u64) -> Vec<u64> {
    let b = int(base);
    let (mut lo, mut hi) = (interval.lo().clone(), interval.hi().clone());
    let mut out = Vec::new();
    while hi > lo {
        let (sl, sh) = (&lo * &b, &hi * &b);
        let d = sl.floor();
        if !(d < sl && sh < &d + Rational::one()) {
            break;
        }
        out.push(d.to_integer().to_u64().expect("digit below the base"));
        lo = sl - &d;
        hi = sh - d;
    }
    out
}

/// An observable with its mean under the measure and certified constants.
#[derive(Clone, Debug)]
pub struct TypicalObservable {
    pub observable: Observable,
    pub mean: Rational,
    pub constants: ObservableConstants,
}

/// Normal form of the interleaved typical-point sequences of `observables`.
pub fn typical_sequence(
    map: &PAMap,
    observables: &[TypicalObservable],
    provider: ModulusProvider,
    alpha: &Rational,
    piece_budget: usize,
) -> Result<BCSequence> {
    if observables.is_empty() {
        return Err(Error::Invalid("at least one observable is required".into()));
    }
    let members = observables
        .iter()
        .map(|o| {
            let modulus = modulus_for(provider, &o.observable, &o.constants, alpha)?;
            Ok(typical_bc(map, &o.observable, &o.mean, &modulus, piece_budget))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(normal_form(&intersect_uniform_finite(members)?))
}

/// Extracts a point typical for every listed observable, in the support
/// near `seed`.
#[allow(clippy::too_many_arguments)]
pub fn mu_typical_point(
    map: &PAMap,
    measure: Arc<dyn ComputableMeasure>,
    observables: &[TypicalObservable],
    provider: ModulusProvider,
    alpha: &Rational,
    seed: &IdealBall,
    precision: u32,
    piece_budget: usize,
    mut config: ExtractConfig,
) -> Result<PointOutcome> {
    let seq = typical_sequence(map, observables, provider, alpha, piece_budget)?;
    if !config.header.iter().any(|l| l.starts_with("# kind ")) {
        config.header.insert(0, "# kind typical".to_string());
    }
    let extraction = extract_point(&seq, measure, seed, config)?;
    let interval = run_to_precision(&extraction, precision)?;
    Ok(PointOutcome {
        sequence: seq,
        extraction,
        interval,
        digits: Vec::new(),
    })
}
