//! Explicit BC sequences with exactly known complements, used by examples,
//! tests and the command line.

use num::{One, Zero};

use super::BCSequence;
use crate::cms::{ConstructiveOpen, IdealPoint};
use crate::interval::IntervalUnion;
use crate::measures::modulus_geometric;
use crate::rational::{int, max, min, pow2_neg, Rational};

/// `(0,1)` minus the closed interval `[lo, hi]`.
pub fn excluding(lo: &Rational, hi: &Rational) -> IntervalUnion {
    IntervalUnion::from_intervals([(Rational::zero(), lo.clone()), (hi.clone(), Rational::one())])
}

/// Closed `4^{-n-2}`-neighbourhood of the `n`-th ideal point, clipped to `[0,1]`.
pub fn rational_exclusion_zone(n: u64) -> (Rational, Rational) {
    let q_n = IdealPoint::from_index_u64(n).into_value();
    let r = pow2_neg(2 * n + 4);
    (
        max(&(&q_n - &r), &Rational::zero()),
        min(&(&q_n + &r), &Rational::one()),
    )
}

/// `U_n = (0,1) \ [q_n - 4^{-n-2}, q_n + 4^{-n-2}]`.
///
/// `μ(U_nᶜ) ≤ 2^{-2n-3} < 2^{-n}` under Lebesgue measure, so the sequence is
/// in normal form; tails are bounded by `Σ_{n ≥ N} 4^{-n}/8`.
pub fn rational_exclusion() -> BCSequence {
    let tail = modulus_geometric(Rational::new(1.into(), 8.into()), Rational::new(1.into(), 4.into()))
        .expect("valid geometric series");
    BCSequence::new(
        "rational-exclusion",
        |n| {
            let (lo, hi) = rational_exclusion_zone(n);
            ConstructiveOpen::finite(excluding(&lo, &hi))
        },
        tail,
    )
    .assume_normal()
}

/// Excluded closed interval of [`eighths`] at layer `n ≥ 1`: length `3·8^{-n}`,
/// placed at `q_n·(1 - 3·8^{-n})`.
pub fn eighths_zone(n: u64) -> (Rational, Rational) {
    let len = int(3) * pow2_neg(3 * n);
    let lo = IdealPoint::from_index_u64(n).into_value() * (Rational::one() - &len);
    let hi = &lo + len;
    (lo, hi)
}

/// Layers with complement measure exactly `3·8^{-n}` for `n ≥ 1` (layer 0 is
/// empty). Not in normal form; tails bounded by `Σ_{n ≥ N} 3·8^{-n}`.
pub fn eighths() -> BCSequence {
    let tail = modulus_geometric(int(3), Rational::new(1.into(), 8.into())).expect("valid geometric series");
    BCSequence::new(
        "eighths",
        |n| {
            if n == 0 {
                return ConstructiveOpen::empty();
            }
            let (lo, hi) = eighths_zone(n);
            ConstructiveOpen::finite(excluding(&lo, &hi))
        },
        tail,
    )
}
