//! Integration against the invariant (SRB) measure of a piecewise-affine
//! expanding map, given a user-certified decay of correlations.

use std::fmt;
use std::sync::Mutex;

use num::{BigInt, One, Signed, Zero};

use crate::ergodic::PAMap;
use crate::interval::IntervalUnion;
use crate::measures::{ComputableMeasure, TestFn};
use crate::piecewise::{midpoint, PiecewiseAffine};
use crate::rational::{fmt_rational, int, max, parse_rational, pow2_neg, Rational};
use crate::{Error, Result};

/// Rate at which `∫ψ∘T^n dm` approaches `∫ψ dμ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecayProfile {
    /// `|∫ψ∘T^n dm − ∫ψ dμ| ≤ C·λ^n·‖ψ‖_{L¹}`.
    Exponential { c: Rational, lambda: Rational },
    /// `|∫ψ∘T^n dm − ∫ψ dμ| ≤ C·‖ψ‖_{Lip}·n^{s−1}`, with the Lipschitz norm
    /// `sup|ψ| + Lip(ψ)` bounding every Hölder norm of order `1−s`.
    Polynomial { c: Rational, s: Rational },
}

impl DecayProfile {
    pub fn exponential(c: Rational, lambda: Rational) -> Result<DecayProfile> {
        let p = DecayProfile::Exponential { c, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn polynomial(c: Rational, s: Rational) -> Result<DecayProfile> {
        let p = DecayProfile::Polynomial { c, s };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let (c, rate, name) = match self {
            DecayProfile::Exponential { c, lambda } => (c, lambda, "lambda"),
            DecayProfile::Polynomial { c, s } => (c, s, "s"),
        };
        if !c.is_positive() {
            return Err(Error::Invalid(format!("decay constant C = {c} must be positive")));
        }
        if !rate.is_positive() || *rate >= Rational::one() {
            return Err(Error::Invalid(format!("decay {name} = {rate} must lie in (0,1)")));
        }
        Ok(())
    }

    /// `exp:<C>:<λ>` or `poly:<C>:<s>`.
    pub fn parse(text: &str) -> Result<DecayProfile> {
        let fields: Vec<&str> = text.trim().split(':').collect();
        match fields.as_slice() {
            ["exp", c, l] => DecayProfile::exponential(parse_rational(c)?, parse_rational(l)?),
            ["poly", c, s] => DecayProfile::polynomial(parse_rational(c)?, parse_rational(s)?),
            _ => Err(Error::Parse(format!(
                "decay profile `{text}` must be exp:C:lambda or poly:C:s"
            ))),
        }
    }

    /// Least `n` whose profile bound for `ψ` is at most `eps/2`.
    pub fn iterations(&self, psi: &TestFn, eps: &Rational) -> Result<u64> {
        self.validate()?;
        if !eps.is_positive() {
            return Err(Error::Invalid(format!("accuracy {eps} must be positive")));
        }
        let goal = eps / int(2);
        match self {
            DecayProfile::Exponential { c, lambda } => {
                let mut bound = c * l1_norm(&psi.to_piecewise());
                let mut n = 0;
                while bound > goal {
                    bound *= lambda;
                    n += 1;
                }
                Ok(n)
            }
            DecayProfile::Polynomial { c, s } => {
                // C·L·n^{s-1} ≤ goal  ⇔  n^{1-s} ≥ C·L/goal; with 1-s = p/q
                // this is n^p ≥ (C·L/goal)^q, decided on integers.
                let norm = psi.sup_bound() + psi.lipschitz_bound();
                let x = c * norm / goal;
                let e = Rational::one() - s;
                let p = u32::try_from(e.numer().clone()).map_err(|_| Error::Invalid("exponent too large".into()))?;
                let q = u32::try_from(e.denom().clone()).map_err(|_| Error::Invalid("exponent too large".into()))?;
                let rhs = num::pow::pow(x, q as usize);
                let holds = |n: u64| num::pow::pow(int(n), p as usize) >= rhs;
                let mut hi = 1u64;
                while !holds(hi) {
                    hi = hi
                        .checked_mul(2)
                        .ok_or_else(|| Error::Budget("iteration count overflows".into()))?;
                }
                let mut lo = hi / 2;
                while lo + 1 < hi {
                    let mid = lo + (hi - lo) / 2;
                    if holds(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                Ok(if holds(lo) { lo } else { hi })
            }
        }
    }
}

impl fmt::Display for DecayProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecayProfile::Exponential { c, lambda } => write!(f, "exp:{}:{}", fmt_rational(c), fmt_rational(lambda)),
            DecayProfile::Polynomial { c, s } => write!(f, "poly:{}:{}", fmt_rational(c), fmt_rational(s)),
        }
    }
}

/// `∫|f|` over `[0,1]`, exact.
pub fn l1_norm(f: &PiecewiseAffine) -> Rational {
    f.pieces()
        .iter()
        .zip(f.breakpoints().windows(2))
        .map(|(p, w)| {
            let (a, b) = (&w[0], &w[1]);
            let (fa, fb) = (p.eval(a), p.eval(b));
            if fa.is_negative() != fb.is_negative() && !fa.is_zero() && !fb.is_zero() {
                let root = -&p.offset / &p.slope;
                p.integral(a, &root).abs() + p.integral(&root, b).abs()
            } else {
                p.integral(a, b).abs()
            }
        })
        .sum()
}

/// Step density on `[0,1]`: `values[k]` on `[xs[k], xs[k+1])`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepDensity {
    pub xs: Vec<Rational>,
    pub values: Vec<Rational>,
}

impl StepDensity {
    pub fn lebesgue() -> StepDensity {
        StepDensity {
            xs: vec![Rational::zero(), Rational::one()],
            values: vec![Rational::one()],
        }
    }

    pub fn to_piecewise(&self) -> PiecewiseAffine {
        PiecewiseAffine::step(self.xs.clone(), self.values.clone())
    }

    /// Transfer operator `(Lf)(y) = Σ_{Tx=y} f(x)/|T'(x)|`, exact on step
    /// functions; neighbours with equal values are merged.
    pub fn transfer(&self, map: &PAMap, budget: usize) -> Result<StepDensity> {
        // (position, jump) events of the image density
        let mut events: Vec<(Rational, Rational)> = Vec::new();
        for branch in map.branches() {
            let weight = Rational::one() / branch.map.slope.abs();
            for (w, v) in self.xs.windows(2).zip(&self.values) {
                let lo = max(&w[0], &branch.lo);
                let hi = crate::rational::min(&w[1], &branch.hi);
                if lo >= hi || v.is_zero() {
                    continue;
                }
                let (ya, yb) = (branch.map.eval(&lo), branch.map.eval(&hi));
                let (ya, yb) = if ya <= yb { (ya, yb) } else { (yb, ya) };
                let h = v * &weight;
                events.push((ya, h.clone()));
                events.push((yb, -h));
            }
            if events.len() > 2 * budget {
                return Err(Error::Budget(format!(
                    "transfer operator needs more than {budget} pieces"
                )));
            }
        }
        events.sort_by(|a, b| a.0.cmp(&b.0));
        let mut xs = vec![Rational::zero()];
        let mut values = Vec::new();
        let mut level = Rational::zero();
        let mut k = 0;
        while k < events.len() {
            let x = events[k].0.clone();
            while k < events.len() && events[k].0 == x {
                level += &events[k].1;
                k += 1;
            }
            if x.is_zero() {
                values.clear();
                values.push(level.clone());
                continue;
            }
            if x >= Rational::one() {
                break;
            }
            if values.is_empty() {
                values.push(Rational::zero());
            }
            if *values.last().expect("nonempty") != level {
                xs.push(x);
                values.push(level.clone());
            }
        }
        if values.is_empty() {
            values.push(Rational::zero());
        }
        xs.push(Rational::one());
        if values.len() > budget {
            return Err(Error::Budget(format!(
                "transfer operator needs more than {budget} pieces"
            )));
        }
        Ok(StepDensity { xs, values })
    }
}

/// `L^n 1` for `n = 0, 1, …`, computed on demand.
pub struct DensityCache {
    map: PAMap,
    budget: usize,
    densities: Mutex<Vec<StepDensity>>,
}

impl DensityCache {
    pub fn new(map: &PAMap, budget: usize) -> DensityCache {
        DensityCache {
            map: map.clone(),
            budget,
            densities: Mutex::new(vec![StepDensity::lebesgue()]),
        }
    }

    pub fn density(&self, n: u64) -> Result<StepDensity> {
        let mut cache = self.densities.lock().expect("density cache poisoned");
        while cache.len() as u64 <= n {
            // a fixed point of the transfer operator repeats forever
            if let [.., prev, last] = cache.as_slice() {
                if prev == last {
                    return Ok(last.clone());
                }
            }
            let next = cache.last().expect("L^0 1 present").transfer(&self.map, self.budget)?;
            cache.push(next);
        }
        Ok(cache[n as usize].clone())
    }

    /// `∫ψ∘T^n dm = ∫ψ·L^n 1 dm`.
    pub fn pushforward_integral(&self, psi: &TestFn, n: u64) -> Result<Rational> {
        Ok(psi.to_piecewise().weighted_integral(&self.density(n)?.to_piecewise()))
    }
}

/// `∫ψ dμ` within `eps`, where `μ` is the invariant measure the profile
/// describes: `∫ψ∘T^n dm` exactly, with `n` from [`DecayProfile::iterations`].
pub fn srb_integrate(
    map: &PAMap,
    psi: &TestFn,
    profile: &DecayProfile,
    eps: &Rational,
    piece_budget: usize,
) -> Result<Rational> {
    let n = profile.iterations(psi, eps)?;
    DensityCache::new(map, piece_budget).pushforward_integral(psi, n)
}

/// The invariant measure as a [`ComputableMeasure`].
///
/// `lower_union` at stage `t` integrates, for each part `(a, b)`, the hat
/// with plateau `(a + w, b − w)` and slopes of width `w = (b−a)/2^{t+2}`,
/// which lies below the indicator; the accuracy of each integral is charged
/// against the bound, and the running maximum over stages keeps it monotone.
pub struct SrbMeasure {
    profile: DecayProfile,
    densities: DensityCache,
}

pub fn srb_measure(map: &PAMap, profile: &DecayProfile, piece_budget: usize) -> Result<SrbMeasure> {
    profile.validate()?;
    Ok(SrbMeasure {
        profile: profile.clone(),
        densities: DensityCache::new(map, piece_budget),
    })
}

impl SrbMeasure {
    pub fn profile(&self) -> &DecayProfile {
        &self.profile
    }

    fn integrate_within(&self, g: &TestFn, eps: &Rational) -> Result<Rational> {
        let n = self.profile.iterations(g, eps)?;
        self.densities.pushforward_integral(g, n)
    }

    fn lower_at(&self, set: &IntervalUnion, stage: u64) -> Result<Rational> {
        if set.is_empty() {
            return Ok(Rational::zero());
        }
        let eps = pow2_neg(stage + 1) / Rational::from_integer(BigInt::from(set.len()));
        let mut total = Rational::zero();
        for (a, b) in set.parts() {
            let len = b - a;
            let width = &len / Rational::from_integer(BigInt::one() << (stage + 2));
            let hat = TestFn::hat(midpoint(a, b), &len / int(2) - &width, width)?;
            total += self.integrate_within(&hat, &eps)? - &eps;
        }
        Ok(max(&total, &Rational::zero()))
    }
}

impl ComputableMeasure for SrbMeasure {
    fn lower_union(&self, set: &IntervalUnion, stage: u64) -> Rational {
        // a stage whose integration exceeds the budget contributes nothing
        (0..=stage)
            .filter_map(|t| self.lower_at(set, t).ok())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    fn integrate(&self, g: &TestFn, eps: &Rational) -> Result<Rational> {
        self.integrate_within(g, eps)
    }
}
