//! Computable-metric-space layer for `[0,1]` with the Euclidean metric.
//!
//! Ideal points are the rationals of `[0,1]`, numbered bijectively through
//! the Calkin–Wilf tree; ideal balls are numbered by pairing a center index
//! with a radius index. Constructive open sets are stage-indexed
//! enumerations of ideal balls, and every kind also knows how to realize a
//! stage prefix as an exact [`IntervalUnion`].

use std::fmt;
use std::sync::Arc;

use num::bigint::{BigInt, BigUint};
use num::{One, Signed, ToPrimitive, Zero};

use crate::interval::{ClosedInterval, IntervalUnion};
use crate::rational::{abs_diff, pow2_neg, Rational};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Pairings

/// `φ(n, i) = n(n+1)/2 + i` on the triangle `0 ≤ i ≤ n`.
pub fn tri_encode(n: u64, i: u64) -> u64 {
    debug_assert!(i <= n);
    n * (n + 1) / 2 + i
}

/// Inverse of [`tri_encode`].
pub fn tri_decode(m: u64) -> (u64, u64) {
    // largest n with n(n+1)/2 <= m
    let mut n = (((8.0 * m as f64 + 1.0).sqrt() - 1.0) / 2.0) as u64;
    while n * (n + 1) / 2 > m {
        n -= 1;
    }
    while (n + 1) * (n + 2) / 2 <= m {
        n += 1;
    }
    (n, m - n * (n + 1) / 2)
}

/// Cantor pairing `ℕ×ℕ → ℕ`, built on the triangle numbering.
pub fn pair(a: u64, b: u64) -> u64 {
    tri_encode(a + b, b)
}

pub fn unpair(m: u64) -> (u64, u64) {
    let (n, i) = tri_decode(m);
    (n - i, i)
}

pub fn pair_big(a: &BigUint, b: &BigUint) -> BigUint {
    let n = a + b;
    (&n * (&n + 1u32)) / 2u32 + b
}

pub fn unpair_big(m: &BigUint) -> (BigUint, BigUint) {
    // n = floor((sqrt(8m+1)-1)/2)
    let n: BigUint = ((m * 8u32 + 1u32).sqrt() - 1u32) / 2u32;
    let i = m - (&n * (&n + 1u32)) / 2u32;
    (&n - &i, i)
}

// ---------------------------------------------------------------------------
// Calkin–Wilf numbering of the positive rationals

/// The `k`-th positive rational (`k ≥ 1`) in Calkin–Wilf order, as `(num, den)`.
pub fn calkin_wilf(k: &BigUint) -> (BigUint, BigUint) {
    assert!(!k.is_zero(), "Calkin-Wilf indices start at 1");
    let mut a = BigUint::one();
    let mut b = BigUint::one();
    let bits = k.bits();
    for pos in (0..bits.saturating_sub(1)).rev() {
        if k.bit(pos) {
            a = &a + &b;
        } else {
            b = &a + &b;
        }
    }
    (a, b)
}

/// Calkin–Wilf index of the positive rational `a/b` in lowest terms.
pub fn calkin_wilf_index(a: &BigUint, b: &BigUint) -> BigUint {
    let (mut a, mut b) = (a.clone(), b.clone());
    let mut path: Vec<bool> = Vec::new();
    while !(a.is_one() && b.is_one()) {
        if a < b {
            // (a, b) came from (a, b - a) by a left step; jump over runs
            let steps = if a.is_one() { &b - 1u32 } else { (&b - 1u32) / &a };
            let steps = steps.max(BigUint::one());
            let run = steps.to_usize().expect("index too large");
            path.extend(std::iter::repeat_n(false, run));
            b -= &a * &steps;
        } else {
            let steps = if b.is_one() { &a - 1u32 } else { (&a - 1u32) / &b };
            let steps = steps.max(BigUint::one());
            let run = steps.to_usize().expect("index too large");
            path.extend(std::iter::repeat_n(true, run));
            a -= &b * &steps;
        }
    }
    let mut k = BigUint::one();
    for bit in path.iter().rev() {
        k <<= 1u32;
        if *bit {
            k += 1u32;
        }
    }
    k
}

fn to_rational(n: BigUint, d: BigUint) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Positive rational with radius index `j ≥ 0` (Calkin–Wilf position `j + 1`).
pub fn positive_rational(j: u64) -> Rational {
    let (a, b) = calkin_wilf(&BigUint::from(j + 1));
    to_rational(a, b)
}

pub fn positive_rational_index(x: &Rational) -> Option<BigUint> {
    if !x.is_positive() {
        return None;
    }
    let a = x.numer().to_biguint()?;
    let b = x.denom().to_biguint()?;
    Some(calkin_wilf_index(&a, &b) - 1u32)
}

/// Nonnegative rationals: `0 ↦ 0`, `k ↦ cw(k)`.
pub fn nonneg_rational(k: u64) -> Rational {
    if k == 0 {
        Rational::zero()
    } else {
        positive_rational(k - 1)
    }
}

pub fn nonneg_rational_index(x: &Rational) -> Option<BigUint> {
    if x.is_zero() {
        Some(BigUint::zero())
    } else {
        positive_rational_index(x).map(|j| j + 1u32)
    }
}

/// Signed rationals: `0 ↦ 0`, `2k-1 ↦ cw(k)`, `2k ↦ -cw(k)`.
pub fn signed_rational(k: u64) -> Rational {
    if k == 0 {
        return Rational::zero();
    }
    let magnitude = positive_rational((k - 1) / 2);
    if k % 2 == 1 {
        magnitude
    } else {
        -magnitude
    }
}

pub fn signed_rational_index(x: &Rational) -> Option<BigUint> {
    if x.is_zero() {
        return Some(BigUint::zero());
    }
    let j = positive_rational_index(&x.abs())?;
    Some(if x.is_positive() {
        j * 2u32 + 1u32
    } else {
        j * 2u32 + 2u32
    })
}

// ---------------------------------------------------------------------------
// Ideal points and balls

/// An ideal point: a rational of `[0,1]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IdealPoint(Rational);

impl IdealPoint {
    pub fn new(value: Rational) -> Result<Self> {
        if value.is_negative() || value > Rational::one() {
            return Err(Error::Invalid(format!("ideal point {value} outside [0,1]")));
        }
        Ok(IdealPoint(value))
    }

    /// `0 ↦ 0`, `1 ↦ 1`, `k ≥ 2 ↦ x/(1+x)` with `x` the `(k-1)`-th Calkin–Wilf rational.
    pub fn from_index(index: &BigUint) -> Self {
        if index.is_zero() {
            return IdealPoint(Rational::zero());
        }
        if index.is_one() {
            return IdealPoint(Rational::one());
        }
        let (a, b) = calkin_wilf(&(index - 1u32));
        let sum = &a + &b;
        IdealPoint(to_rational(a, sum))
    }

    pub fn from_index_u64(index: u64) -> Self {
        Self::from_index(&BigUint::from(index))
    }

    pub fn index(&self) -> BigUint {
        if self.0.is_zero() {
            return BigUint::zero();
        }
        if self.0.is_one() {
            return BigUint::one();
        }
        let p = self.0.numer().to_biguint().expect("nonnegative");
        let q = self.0.denom().to_biguint().expect("positive");
        calkin_wilf_index(&p, &(&q - &p)) + 1u32
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn into_value(self) -> Rational {
        self.0
    }
}

impl fmt::Display for IdealPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Open ball `B(center, radius)` with an ideal center and positive rational radius.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IdealBall {
    center: IdealPoint,
    radius: Rational,
}

impl IdealBall {
    pub fn new(center: Rational, radius: Rational) -> Result<Self> {
        if !radius.is_positive() {
            return Err(Error::Invalid(format!("ball radius {radius} must be positive")));
        }
        Ok(IdealBall {
            center: IdealPoint::new(center)?,
            radius,
        })
    }

    /// Ball number `k ↦ (center index, radius index) = unpair(k)`.
    pub fn from_index(k: u64) -> Self {
        let (c, r) = unpair(k);
        IdealBall {
            center: IdealPoint::from_index_u64(c),
            radius: positive_rational(r),
        }
    }

    pub fn from_index_big(k: &BigUint) -> Self {
        let (c, r) = unpair_big(k);
        let (a, b) = calkin_wilf(&(r + 1u32));
        IdealBall {
            center: IdealPoint::from_index(&c),
            radius: to_rational(a, b),
        }
    }

    pub fn index(&self) -> BigUint {
        let r = positive_rational_index(&self.radius).expect("positive radius");
        pair_big(&self.center.index(), &r)
    }

    /// The ball spanned by an open interval `(lo, hi)` with `lo` in `[0,1]`.
    pub fn spanning(lo: &Rational, hi: &Rational) -> Result<Self> {
        let two = Rational::from_integer(BigInt::from(2));
        IdealBall::new((lo + hi) / &two, (hi - lo) / two)
    }

    pub fn center(&self) -> &Rational {
        self.center.value()
    }

    pub fn center_point(&self) -> &IdealPoint {
        &self.center
    }

    pub fn radius(&self) -> &Rational {
        &self.radius
    }

    pub fn contains(&self, x: &Rational) -> bool {
        abs_diff(x, self.center()) < self.radius
    }

    /// Strict certificate `d(c, c') + r < r'` that the closure of `self` lies in `other`.
    pub fn closure_within(&self, other: &IdealBall) -> bool {
        abs_diff(self.center(), other.center()) + &self.radius < other.radius
    }

    /// The ball as a normalized union (clipped to `(0,1)`).
    pub fn to_union(&self) -> IntervalUnion {
        IntervalUnion::from_intervals([(self.center() - &self.radius, self.center() + &self.radius)])
    }

    pub fn closure(&self) -> ClosedInterval {
        ClosedInterval::new(self.center() - &self.radius, self.center() + &self.radius)
    }
}

impl fmt::Display for IdealBall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B({}, {})", self.center(), self.radius)
    }
}

// ---------------------------------------------------------------------------
// Constructive open sets

/// Behaviour shared by every constructive open set.
///
/// `ball_at` is the enumeration proper (total, restartable; `None` skips).
/// `realize` returns the exact interval-model inner approximation at a
/// stage: monotone in the stage, contained in the set, exhausting it in the
/// limit. For enumerated sets it is the union of the balls emitted so far;
/// structured kinds interpret the stage as a refinement level.
pub trait OpenSet: Send + Sync {
    fn realize(&self, stage: u64) -> IntervalUnion;

    fn ball_at(&self, stage: u64) -> Option<IdealBall> {
        let (level, j) = unpair(stage);
        let parts = self.realize(level);
        let (lo, hi) = parts.parts().get(j as usize)?;
        IdealBall::spanning(lo, hi).ok()
    }

    /// Realization restricted to the window `(lo, hi)`.
    fn realize_within(&self, stage: u64, lo: &Rational, hi: &Rational) -> IntervalUnion {
        self.realize(stage).restrict(lo, hi)
    }

    /// Why no realization will ever be produced, for sets whose defining
    /// indices lie beyond what can be evaluated (their realizations are
    /// empty, which is sound but never exhausts the set).
    fn blocked(&self) -> Option<String> {
        None
    }
}

#[derive(Clone)]
pub struct ConstructiveOpen(Arc<dyn OpenSet>);

impl fmt::Debug for ConstructiveOpen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ConstructiveOpen")
    }
}

impl ConstructiveOpen {
    pub fn from_set(set: impl OpenSet + 'static) -> Self {
        ConstructiveOpen(Arc::new(set))
    }

    pub fn empty() -> Self {
        Self::finite(IntervalUnion::empty())
    }

    /// The whole space, realized as `(0,1)`.
    pub fn whole() -> Self {
        Self::finite(IntervalUnion::unit())
    }

    pub fn finite(union: IntervalUnion) -> Self {
        Self::from_set(FiniteOpen(union))
    }

    pub fn ball(ball: IdealBall) -> Self {
        Self::balls(vec![ball])
    }

    /// Emits the listed balls at stages `0, 1, …` and skips afterwards.
    pub fn balls(balls: Vec<IdealBall>) -> Self {
        Self::enumerated(move |t| balls.get(t as usize).cloned())
    }

    pub fn enumerated(f: impl Fn(u64) -> Option<IdealBall> + Send + Sync + 'static) -> Self {
        Self::from_set(EnumeratedOpen(Arc::new(f)))
    }

    /// A set whose realization is out of reach; realizes as empty.
    pub fn blocked(reason: impl Into<String>) -> Self {
        Self::from_set(BlockedOpen(reason.into()))
    }

    pub fn ball_at(&self, stage: u64) -> Option<IdealBall> {
        self.0.ball_at(stage)
    }

    pub fn blocked_reason(&self) -> Option<String> {
        self.0.blocked()
    }

    pub fn realize(&self, stage: u64) -> IntervalUnion {
        self.0.realize(stage)
    }

    pub fn realize_within(&self, stage: u64, lo: &Rational, hi: &Rational) -> IntervalUnion {
        self.0.realize_within(stage, lo, hi)
    }
}

struct BlockedOpen(String);

impl OpenSet for BlockedOpen {
    fn realize(&self, _stage: u64) -> IntervalUnion {
        IntervalUnion::empty()
    }

    fn blocked(&self) -> Option<String> {
        Some(self.0.clone())
    }
}

struct FiniteOpen(IntervalUnion);

impl OpenSet for FiniteOpen {
    fn realize(&self, _stage: u64) -> IntervalUnion {
        self.0.clone()
    }

    fn ball_at(&self, stage: u64) -> Option<IdealBall> {
        let (lo, hi) = self.0.parts().get(stage as usize)?;
        IdealBall::spanning(lo, hi).ok()
    }

    fn realize_within(&self, _stage: u64, lo: &Rational, hi: &Rational) -> IntervalUnion {
        self.0.restrict(lo, hi)
    }
}

type BallFn = Arc<dyn Fn(u64) -> Option<IdealBall> + Send + Sync>;

struct EnumeratedOpen(BallFn);

impl OpenSet for EnumeratedOpen {
    fn realize(&self, stage: u64) -> IntervalUnion {
        IntervalUnion::from_intervals(
            (0..=stage)
                .filter_map(|t| (self.0)(t))
                .map(|b| (b.center() - b.radius(), b.center() + b.radius())),
        )
    }

    fn ball_at(&self, stage: u64) -> Option<IdealBall> {
        (self.0)(stage)
    }
}

type FamilyFn = Arc<dyn Fn(u64) -> ConstructiveOpen + Send + Sync>;

struct FamilyUnion {
    family: FamilyFn,
    len: Option<u64>,
}

impl OpenSet for FamilyUnion {
    fn realize(&self, stage: u64) -> IntervalUnion {
        let last = match self.len {
            Some(0) => return IntervalUnion::empty(),
            Some(n) => stage.min(n - 1),
            None => stage,
        };
        (0..=last).fold(IntervalUnion::empty(), |acc, j| {
            acc.union(&(self.family)(j).realize(stage))
        })
    }

    fn ball_at(&self, stage: u64) -> Option<IdealBall> {
        let (member, inner) = unpair(stage);
        if self.len.is_some_and(|n| member >= n) {
            return None;
        }
        (self.family)(member).ball_at(inner)
    }
}

/// Exact intersection on the interval model.
struct ExactIntersection(Vec<ConstructiveOpen>);

impl OpenSet for ExactIntersection {
    fn realize(&self, stage: u64) -> IntervalUnion {
        let mut acc = IntervalUnion::unit();
        for part in &self.0 {
            if acc.is_empty() {
                break;
            }
            acc = acc.intersect(&part.realize(stage));
        }
        acc
    }

    fn realize_within(&self, stage: u64, lo: &Rational, hi: &Rational) -> IntervalUnion {
        let mut acc = IntervalUnion::unit().restrict(lo, hi);
        for part in &self.0 {
            if acc.is_empty() {
                break;
            }
            acc = acc.intersect(&part.realize_within(stage, lo, hi));
        }
        acc
    }

    fn blocked(&self) -> Option<String> {
        self.0.iter().find_map(|p| p.blocked_reason())
    }
}

/// Metric-space intersection: ideal balls certified inside a ball of each side.
struct GenericIntersection(ConstructiveOpen, ConstructiveOpen);

impl OpenSet for GenericIntersection {
    fn ball_at(&self, stage: u64) -> Option<IdealBall> {
        let (candidate, rest) = unpair(stage);
        let (i, j) = unpair(rest);
        let ball = IdealBall::from_index(candidate);
        let outer_u = self.0.ball_at(i)?;
        let outer_v = self.1.ball_at(j)?;
        (ball.closure_within(&outer_u) && ball.closure_within(&outer_v)).then_some(ball)
    }

    fn realize(&self, stage: u64) -> IntervalUnion {
        IntervalUnion::from_intervals(
            (0..=stage)
                .filter_map(|t| self.ball_at(t))
                .map(|b| (b.center() - b.radius(), b.center() + b.radius())),
        )
    }
}

/// Confirms `s ∈ U` when some ball among stages `0..=budget` strictly contains `s`.
/// Returns the confirming stage; `None` means "not yet confirmed".
pub fn semidecide_member(open: &ConstructiveOpen, point: &IdealPoint, budget: u64) -> Option<u64> {
    (0..=budget).find(|&t| open.ball_at(t).is_some_and(|b| b.contains(point.value())))
}

/// Union of a uniform family, enumerated through the Cantor pairing on
/// `(member, stage)`.
pub fn open_union(family: impl Fn(u64) -> ConstructiveOpen + Send + Sync + 'static) -> ConstructiveOpen {
    ConstructiveOpen::from_set(FamilyUnion {
        family: Arc::new(family),
        len: None,
    })
}

pub fn open_union_finite(members: Vec<ConstructiveOpen>) -> ConstructiveOpen {
    let len = members.len() as u64;
    let members = Arc::new(members);
    ConstructiveOpen::from_set(FamilyUnion {
        family: Arc::new(move |j| members[j as usize].clone()),
        len: Some(len),
    })
}

/// Generic metric-space intersection (dovetailed closure certificates).
pub fn open_intersect(u: &ConstructiveOpen, v: &ConstructiveOpen) -> ConstructiveOpen {
    ConstructiveOpen::from_set(GenericIntersection(u.clone(), v.clone()))
}

/// Exact intersection of finitely many opens on the interval model.
pub fn intersect_exact(parts: Vec<ConstructiveOpen>) -> ConstructiveOpen {
    ConstructiveOpen::from_set(ExactIntersection(parts))
}

/// `T^{-1}(target)` from fast approximants of the images of ideal points and a
/// uniform-continuity modulus.
///
/// `images(i, n)` must be within `2^{-n}` of `T(s_i)`; `modulus(ε)` must
/// satisfy `|x - x'| < modulus(ε) ⇒ |T x - T x'| < ε`. For a triple
/// `(i, j, n)` with tolerance `ε_j = 2^{-j}`, the ball `B(s_i, modulus(ε_j))`
/// is emitted when `|images(i, n) - center| + 2^{-n} + ε_j < radius`.
/// `ball_at` walks the triples through nested Cantor pairing; `realize(t)`
/// collects every triple with `i, j, n ≤ t`.
pub fn preimage_from_modulus(
    images: impl Fn(u64, u64) -> Rational + Send + Sync + 'static,
    modulus: impl Fn(&Rational) -> Rational + Send + Sync + 'static,
    target: IdealBall,
) -> ConstructiveOpen {
    ConstructiveOpen::from_set(PreimageOpen {
        images: Arc::new(images),
        modulus: Arc::new(modulus),
        target,
    })
}

type ImageFn = Arc<dyn Fn(u64, u64) -> Rational + Send + Sync>;
type ModulusFn = Arc<dyn Fn(&Rational) -> Rational + Send + Sync>;

struct PreimageOpen {
    images: ImageFn,
    modulus: ModulusFn,
    target: IdealBall,
}

impl PreimageOpen {
    fn candidate(&self, i: u64, j: u64, n: u64) -> Option<IdealBall> {
        let eps = pow2_neg(j);
        let approx = (self.images)(i, n);
        let bound = abs_diff(&approx, self.target.center()) + pow2_neg(n) + &eps;
        if bound < *self.target.radius() {
            IdealBall::new(IdealPoint::from_index_u64(i).into_value(), (self.modulus)(&eps)).ok()
        } else {
            None
        }
    }
}

impl OpenSet for PreimageOpen {
    fn ball_at(&self, stage: u64) -> Option<IdealBall> {
        let (pair_ij, n) = unpair(stage);
        let (i, j) = unpair(pair_ij);
        self.candidate(i, j, n)
    }

    fn realize(&self, stage: u64) -> IntervalUnion {
        let mut balls = Vec::new();
        for i in 0..=stage {
            for j in 0..=stage {
                for n in 0..=stage {
                    if let Some(b) = self.candidate(i, j, n) {
                        balls.push((b.center() - b.radius(), b.center() + b.radius()));
                    }
                }
            }
        }
        IntervalUnion::from_intervals(balls)
    }
}

// ---------------------------------------------------------------------------
// G_δ sets

/// Intersection of a uniform sequence of constructive opens.
#[derive(Clone)]
pub struct GDelta {
    layers: FamilyFn,
}

impl GDelta {
    pub fn new(layers: impl Fn(u64) -> ConstructiveOpen + Send + Sync + 'static) -> Self {
        GDelta {
            layers: Arc::new(layers),
        }
    }

    /// The full space (every layer is `(0,1)`).
    pub fn whole() -> Self {
        GDelta::new(|_| ConstructiveOpen::whole())
    }

    pub fn layer(&self, n: u64) -> ConstructiveOpen {
        (self.layers)(n)
    }

    /// Nested layer `D_0 ∩ … ∩ D_n`.
    pub fn nested(&self, n: u64) -> ConstructiveOpen {
        intersect_exact((0..=n).map(|k| self.layer(k)).collect())
    }

    /// Intersection of two G_δ sets, layer by layer.
    pub fn meet(&self, other: &GDelta) -> GDelta {
        let (a, b) = (self.clone(), other.clone());
        GDelta::new(move |n| intersect_exact(vec![a.layer(n), b.layer(n)]))
    }
}

// ---------------------------------------------------------------------------
// Computable points

type ApproxFn = Arc<dyn Fn(u32) -> Result<Rational> + Send + Sync>;

/// A point given by an approximant within `2^{-n}` of the limit at index `n`.
///
/// Approximants may be produced lazily by an unbounded search; they fail
/// only when a configured budget runs out.
#[derive(Clone)]
pub struct ComputablePoint {
    approximant: ApproxFn,
    certificate: Vec<String>,
}

impl fmt::Debug for ComputablePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComputablePoint")
            .field("certificate_lines", &self.certificate.len())
            .finish()
    }
}

impl ComputablePoint {
    pub fn new(
        approximant: impl Fn(u32) -> Result<Rational> + Send + Sync + 'static,
        certificate: Vec<String>,
    ) -> Self {
        ComputablePoint {
            approximant: Arc::new(approximant),
            certificate,
        }
    }

    pub fn constant(x: Rational) -> Self {
        Self::new(move |_| Ok(x.clone()), Vec::new())
    }

    pub fn approximant(&self, n: u32) -> Result<Rational> {
        (self.approximant)(n)
    }

    pub fn certificate(&self) -> &[String] {
        &self.certificate
    }

    pub fn with_certificate(mut self, certificate: Vec<String>) -> Self {
        self.certificate = certificate;
        self
    }
}

/// `[a_n - 2^{-n}, a_n + 2^{-n}] ∩ [0,1]`, which contains the limit.
pub fn refine(point: &ComputablePoint, n: u32) -> Result<ClosedInterval> {
    let a = point.approximant(n)?;
    let eps = pow2_neg(n as u64);
    let lo = crate::rational::max(&(&a - &eps), &Rational::zero());
    let hi = crate::rational::min(&(&a + &eps), &Rational::one());
    Ok(ClosedInterval::new(lo, hi))
}
