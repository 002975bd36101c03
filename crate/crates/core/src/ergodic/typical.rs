//! Borel–Cantelli sequences of typical points.

use std::fmt;
use std::str::FromStr;

use num::Zero;

use super::birkhoff::BirkhoffBlockOpen;
use super::map::PAMap;
use super::modulus::{
    as_modulus, centered_sup, cylinder_constant, cylinder_variance, lipschitz_variance, variance_modulus,
};
use super::observable::Observable;
use crate::bc::{bc_from_blocks, BCSequence, ConvergenceModulus};
use crate::cms::ConstructiveOpen;
use crate::rational::Rational;
use crate::{Error, Result};

/// Source of the convergence modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModulusProvider {
    /// ln²-ergodicity constants along `n_i = ⌈(1+i^{-α})^i⌉`.
    Ln2Decay,
    /// Variance bounds along a geometric subsequence.
    Independence,
}

impl FromStr for ModulusProvider {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "paper-ln2" => Ok(ModulusProvider::Ln2Decay),
            "independence" => Ok(ModulusProvider::Independence),
            other => Err(Error::Parse(format!(
                "unknown modulus provider `{other}` (expected paper-ln2 or independence)"
            ))),
        }
    }
}

impl fmt::Display for ModulusProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModulusProvider::Ln2Decay => "paper-ln2",
            ModulusProvider::Independence => "independence",
        })
    }
}

/// Certified constants of an observable for a fixed system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservableConstants {
    /// `M ≥ sup |φ|`.
    pub sup: Rational,
    /// ln²-ergodicity constant `c_{φ,φ}`, when known.
    pub ln2: Option<Rational>,
    /// `V` with `n·Var(f_n) ≤ V` for all `n`, when known.
    pub variance: Option<Rational>,
}

/// Constants derivable for `T_b` with Lebesgue measure: cylinders of the
/// same base get both constants, Lipschitz test functions the variance
/// constant. Other systems only get `M`; ln² constants must be supplied.
pub fn lebesgue_constants(map: &PAMap, obs: &Observable) -> ObservableConstants {
    let sup = obs.sup_bound();
    let mut out = ObservableConstants {
        sup,
        ln2: None,
        variance: None,
    };
    let Some(b) = map.base() else {
        return out;
    };
    match obs {
        Observable::Cylinder { base, word } if *base == b => {
            out.ln2 = cylinder_constant(b, word).ok();
            out.variance = Some(cylinder_variance(b, word));
        }
        Observable::Test(g) => {
            let pw = g.to_piecewise();
            let mean = pw.integral();
            out.variance = Some(lipschitz_variance(b, &centered_sup(&pw, &mean), &g.lipschitz_bound()));
        }
        Observable::Cylinder { .. } => {}
    }
    out
}

/// The modulus of `provider` for an observable with the given constants.
///
/// Constant observables get `N = 0` since `f_n` equals the mean exactly.
pub fn modulus_for(
    provider: ModulusProvider,
    obs: &Observable,
    constants: &ObservableConstants,
    alpha: &Rational,
) -> Result<ConvergenceModulus> {
    if obs.is_constant() {
        return Ok(ConvergenceModulus::zero());
    }
    match provider {
        ModulusProvider::Ln2Decay => {
            let c = constants
                .ln2
                .as_ref()
                .ok_or_else(|| Error::Invalid(format!("no ln^2-ergodicity constant for {obs}")))?;
            as_modulus(&constants.sup, c, alpha)
        }
        ModulusProvider::Independence => {
            let v = constants
                .variance
                .as_ref()
                .ok_or_else(|| Error::Invalid(format!("no variance constant for {obs}")))?;
            variance_modulus(format!("independence(M={}, V={v})", constants.sup), &constants.sup, v)
        }
    }
}

/// BC sequence whose set consists of points typical for `obs` (averages
/// converge to `target`, the mean of `obs` under the invariant measure).
///
/// Layer `i` is `⋂_{k_i ≤ n < k_{i+1}} [|f_n - target| < 2^{-i}]` intersected
/// with layer `i` of the map's domain, with `k_i` from the modulus at
/// `(2^{-i}, 2^{-i})`. Deviation sets are realized lazily on the cell tree
/// (see [`BirkhoffBlockOpen`]); `piece_budget` caps every refinement.
pub fn typical_bc(
    map: &PAMap,
    obs: &Observable,
    target: &Rational,
    modulus: &ConvergenceModulus,
    piece_budget: usize,
) -> BCSequence {
    let (m, phi, t) = (map.clone(), obs.clone(), target.clone());
    bc_from_blocks(
        format!("typical({map}, {obs}, {})", modulus.label()),
        move |lo, hi, eps| {
            ConstructiveOpen::from_set(BirkhoffBlockOpen::new(
                &m,
                &phi,
                t.clone(),
                eps.clone(),
                lo,
                hi,
                piece_budget,
            ))
        },
        map.domain(piece_budget),
        modulus,
    )
}

/// Mean of `obs` under Lebesgue measure, checked to be positive-width data.
pub fn lebesgue_target(obs: &Observable) -> Rational {
    let t = obs.lebesgue_mean();
    debug_assert!(t >= Rational::zero() || matches!(obs, Observable::Test(_)));
    t
}
