//! Effective almost-sure convergence of Birkhoff averages.
//!
//! Two providers of `(ε, δ) ↦ N` with `μ[∃ n ≥ N: |f_n - ∫φ| ≥ ε] < δ`:
//! the ln²-ergodicity route along `n_i = ⌈(1+i^{-α})^i⌉`, and a variance
//! route for systems with summable correlations along a geometric subsequence.

use num::bigint::{BigInt, BigUint};
use num::{One, Signed, ToPrimitive, Zero};

use crate::bc::{ConvergenceModulus, Horizon};
use crate::certified::{ln2_bounds, ln_lower, ln_sq_over_n_max_upper, power_bounds, root_bounds};
use crate::measures::pow;
use crate::rational::{int, pow2_neg, Rational};
use crate::{Error, Result};

/// Default exponent of the subsequence.
pub fn default_alpha() -> Rational {
    Rational::new(1.into(), 3.into())
}

fn alpha_parts(alpha: &Rational) -> Result<(u32, u32)> {
    let half = Rational::new(1.into(), 2.into());
    if !alpha.is_positive() || *alpha >= half {
        return Err(Error::Invalid(format!("alpha = {alpha} must lie in (0, 1/2)")));
    }
    let p = alpha.numer().to_u32();
    let q = alpha.denom().to_u32();
    match (p, q) {
        (Some(p), Some(q)) if q <= 1 << 16 => Ok((p, q)),
        _ => Err(Error::Invalid(format!("alpha = {alpha} has too large a denominator"))),
    }
}

fn ceil_big(x: &Rational) -> BigUint {
    x.ceil().to_integer().to_biguint().expect("nonnegative")
}

/// `n_i = ⌈(1 + i^{-α})^i⌉`, with certified bounds that are refined until
/// the ceiling is determined.
pub fn seq_ni(alpha: &Rational, i: u64) -> Result<BigUint> {
    let (p, q) = alpha_parts(alpha)?;
    if i == 0 {
        return Err(Error::Invalid("the subsequence starts at i = 1".into()));
    }
    let mut bits = 64u64;
    loop {
        let (r_lo, r_hi) = root_bounds(i, p, q, bits);
        if r_lo == r_hi {
            let x = Rational::one() + Rational::one() / r_lo;
            return Ok(ceil_big(&pow(&x, i)));
        }
        let x_lo = Rational::one() + Rational::one() / r_hi;
        let x_hi = Rational::one() + Rational::one() / r_lo;
        let (lo, hi) = power_bounds(&x_lo, &x_hi, i, bits + i);
        let (c_lo, c_hi) = (ceil_big(&lo), ceil_big(&hi));
        if c_lo == c_hi {
            return Ok(c_lo);
        }
        bits *= 2;
        if bits > 1 << 16 {
            return Err(Error::Invalid(format!("could not separate n_{i} from an integer")));
        }
    }
}

/// Least `k` with certified `k^{1-α} ≥ 64`; from there on `n_k ≥ 2^64`,
/// since `ln(1+x) ≥ x·ln 2` on `[0,1]` gives `n_k ≥ 2^{k^{1-α}}`.
pub fn u64_threshold(alpha: &Rational) -> Result<u64> {
    let (p, q) = alpha_parts(alpha)?;
    let mut k = 1u64;
    while root_bounds(k, q - p, q, 32).0 < int(64) {
        k *= 2;
    }
    let (mut lo, mut hi) = (k / 2, k);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if root_bounds(mid, q - p, q, 32).0 >= int(64) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `n_k` as a horizon: `Beyond` once `n_k` provably exceeds `u64`.
pub fn seq_ni_horizon(alpha: &Rational, k: u64) -> Result<Horizon> {
    if k >= u64_threshold(alpha)? {
        return Ok(Horizon::Beyond(format!(
            "n_{k} >= 2^(k^(1-alpha)) >= 2^64 with alpha = {alpha}"
        )));
    }
    let n = seq_ni(alpha, k)?;
    Ok(match n.to_u64() {
        Some(v) => Horizon::At(v),
        None => Horizon::Beyond(format!("n_{k} = {n}")),
    })
}

/// Certified upper bound on `1/β_i - 1`, nonincreasing in `i`:
/// `n_{i+1}/n_i ≤ 1 + i^{-α} + (1 + i^{-α})^{-i} ≤ 1 + i^{-α} + 2^{-⌊i^{1-α}⌋}`.
pub fn beta_gap_upper(alpha: &Rational, i: u64) -> Result<Rational> {
    let (p, q) = alpha_parts(alpha)?;
    if i == 0 {
        return Err(Error::Invalid("beta_i starts at i = 1".into()));
    }
    let root_lo = root_bounds(i, p, q, 64).0;
    let expo = root_bounds(i, q - p, q, 64).0.floor().to_integer();
    let expo = expo.to_u64().unwrap_or(u64::MAX);
    Ok(Rational::one() / root_lo + pow2_neg(expo))
}

/// Least `i ≥ 1` with `β_j > 1 - γ` for every `j ≥ i` (capped at `cap`).
fn beta_index(alpha: &Rational, gamma: &Rational, cap: u64) -> Result<Option<u64>> {
    if *gamma >= Rational::one() {
        return Ok(Some(1));
    }
    let bound = gamma / (Rational::one() - gamma);
    if beta_gap_upper(alpha, cap)? >= bound {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0u64, cap);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if beta_gap_upper(alpha, mid)? < bound {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// `(M²/n + c/L(n)²)/δ²`, `L(n)` a certified lower bound on `ln n`.
pub fn chebyshev_bound(m: &Rational, c: &Rational, n: u64, delta: &Rational) -> Rational {
    assert!(n >= 2, "the bound starts at n = 2");
    let mut v = m * m / int(n);
    if !c.is_zero() {
        let l = ln_lower(n);
        v += c / (&l * &l);
    }
    v / (delta * delta)
}

/// The ln²-ergodicity modulus.
///
/// For deviation `ε` and measure `δ`: `i_0` is the least index from which
/// `β_i > 1 - ε/(4M)`, so each block `n_i ≤ n < n_{i+1}` deviates by `ε` only
/// where `f_{n_i}` deviates by `ε/2`; `j_0` is the least `J ≥ 2` with
/// `(M²K + c)·(J-1)^{-(1-2α)} / ((1-2α)·ln²2·(ε/2)²) < δ`, which bounds
/// `Σ_{j ≥ J} μ(A_{n_j}(ε/2))` through `ln n_j ≥ j^{1-α} ln 2` and
/// `1/n ≤ K/ln² n`. The horizon is `n_{max(i_0, j_0)}`.
pub fn as_modulus(m: &Rational, c: &Rational, alpha: &Rational) -> Result<ConvergenceModulus> {
    let (p, q) = alpha_parts(alpha)?;
    if m.is_negative() || c.is_negative() {
        return Err(Error::Invalid("M and c must be nonnegative".into()));
    }
    let threshold = u64_threshold(alpha)?;
    let (m, c, alpha) = (m.clone(), c.clone(), alpha.clone());
    let k_const = ln_sq_over_n_max_upper();
    let ln2_lo = ln2_bounds().0;
    let label = format!("paper-ln2(M={m}, c={c}, alpha={alpha})");
    Ok(ConvergenceModulus::new(label, move |eps, delta| {
        if m.is_zero() {
            return Horizon::At(0);
        }
        let gamma = eps / (int(4) * &m);
        let i0 = match beta_index(&alpha, &gamma, threshold).expect("alpha checked") {
            Some(i) => i,
            None => return Horizon::Beyond(format!("i_0 >= {threshold}, so n_(i_0) >= 2^64")),
        };
        let half_eps = eps / int(2);
        let r = (&m * &m * &k_const + &c)
            / (Rational::new(int_big(q - 2 * p), int_big(q)) * &ln2_lo * &ln2_lo * &half_eps * &half_eps * delta);
        let j0 = least_power_exceeding(&r, q, q - 2 * p) + 1u32;
        let k = match j0.to_u64() {
            Some(j) if j < threshold => j.max(i0),
            _ => return Horizon::Beyond(format!("j_0 = {j0} >= {threshold}, so n_(j_0) >= 2^64")),
        };
        seq_ni_horizon(&alpha, k).expect("alpha checked")
    }))
}

fn int_big(n: u32) -> BigInt {
    BigInt::from(n)
}

/// Least `y ≥ 1` with `y^e > r^q`.
fn least_power_exceeding(r: &Rational, q: u32, e: u32) -> BigUint {
    let rq = pow(r, q as u64);
    let floor = rq.floor().to_integer().to_biguint().unwrap_or_default();
    floor.nth_root(e) + 1u32
}

/// Variance-route modulus for observables with `n·Var(f_n) ≤ V` for all `n`.
///
/// With `γ = ε/(4M)` the subsequence `n_{j+1} = n_j + ⌊γ n_j⌋` started at any
/// `n_J ≥ 1/γ` has `1 - β_j < γ` and `n_{j+1} ≥ (1 + γ/2) n_j`, so
/// `Σ_{j ≥ J} μ(A_{n_j}(ε/2)) ≤ 4V(2+γ)/(ε²γ n_J)`. The horizon is the least
/// start `N ≥ 1/γ` making that bound `< δ`.
pub fn variance_modulus(label: impl Into<String>, m: &Rational, v: &Rational) -> Result<ConvergenceModulus> {
    if m.is_negative() || v.is_negative() {
        return Err(Error::Invalid("M and V must be nonnegative".into()));
    }
    let (m, v) = (m.clone(), v.clone());
    Ok(ConvergenceModulus::new(
        label,
        move |eps, delta| match variance_horizon(&m, &v, eps, delta) {
            Some(n) => Horizon::At(n),
            None => Horizon::Beyond(format!("variance horizon for eps = {eps}, delta = {delta} exceeds u64")),
        },
    ))
}

/// `γ = ε/(4M)` of [`variance_modulus`].
pub fn variance_gamma(m: &Rational, eps: &Rational) -> Rational {
    eps / (int(4) * m)
}

/// `4V(2+γ)/(ε²γN)`: the tail bound of [`variance_modulus`] from a start `N ≥ 1/γ`.
pub fn variance_tail(m: &Rational, v: &Rational, eps: &Rational, start: u64) -> Rational {
    let gamma = variance_gamma(m, eps);
    int(4) * v * (int(2) + &gamma) / (eps * eps * &gamma * int(start))
}

fn variance_horizon(m: &Rational, v: &Rational, eps: &Rational, delta: &Rational) -> Option<u64> {
    if m.is_zero() || v.is_zero() {
        return Some(0);
    }
    let gamma = variance_gamma(m, eps);
    let start = (Rational::one() / &gamma).ceil().to_integer();
    // least N with 4V(2+γ)/(ε²γN) < δ
    let ratio = int(4) * v * (int(2) + &gamma) / (eps * eps * &gamma * delta);
    let mut n = ratio.floor().to_integer() + BigInt::one();
    if n < start {
        n = start;
    }
    n.to_u64()
}

/// The next element `n + max(1, ⌊γn⌋)` of the variance subsequence.
pub fn variance_step(gamma: &Rational, n: u64) -> u64 {
    let inc = (gamma * int(n)).floor().to_integer().to_u64().unwrap_or(u64::MAX);
    n.saturating_add(inc.max(1))
}

/// `6·c`: an ln²-ergodicity constant from ln²-decay of correlations with constant `c`.
pub fn ln2_from_decay(c_decay: &Rational) -> Result<Rational> {
    if c_decay.is_negative() {
        return Err(Error::Invalid(format!("decay constant {c_decay} must be nonnegative")));
    }
    Ok(int(6) * c_decay)
}

/// ln²-ergodicity constant `2(|w|+1)K` of a cylinder indicator under `T_b`
/// and Lebesgue, `K ≥ max_{n≥2} ln(n)²/n`.
///
/// Centered correlations vanish beyond lag `|w|-1` and are bounded by the
/// cylinder measure, so `(1/n)|Σ_{i<n} C_i| ≤ (|w|+1)/n ≤ (|w|+1)K/ln(n)²`;
/// the factor 2 covers the doubled correlation sum in the Chebyshev step.
pub fn cylinder_constant(base: u64, word: &[u64]) -> Result<Rational> {
    if base < 2 || word.iter().any(|&d| d >= base) {
        return Err(Error::Invalid(format!("invalid word over base {base}")));
    }
    Ok(int(2) * int(word.len() as u64 + 1) * ln_sq_over_n_max_upper())
}

/// `V = (|w|+1)·b^{-|w|}` with `n·Var(f_n) ≤ V` for a cylinder indicator
/// under `T_b` and Lebesgue.
///
/// `n·Var(f_n) ≤ C_0 + 2Σ_{0<k<|w|} C_k^+`, `C_0 ≤ p` and `C_k^+ ≤ p·b^{-k}`
/// (an overlap of `w` with its shift by `k`), with `p = b^{-|w|}`; this is
/// at most `|w|·p`.
pub fn cylinder_variance(base: u64, word: &[u64]) -> Rational {
    let p = Rational::one() / pow(&int(base), word.len() as u64);
    int(word.len() as u64 + 1) * p
}

/// `V = M_c² + L·M_c/(b-1)` for a Lipschitz observable under `T_b` and
/// Lebesgue, where `M_c = sup|φ - ∫φ|` and `L` bounds the Lipschitz constant.
///
/// `|C_k| ≤ L·M_c·b^{-k}/2` by comparing `φ - ∫φ` with its value at the
/// centre of each depth-`k` cell, on which `φ∘T^k` integrates to `∫φ`.
pub fn lipschitz_variance(base: u64, centered_sup: &Rational, lipschitz: &Rational) -> Rational {
    centered_sup * centered_sup + lipschitz * centered_sup / int(base - 1)
}

/// `sup |φ - mean|` for a piecewise-affine `φ`, exact.
pub fn centered_sup(phi: &crate::piecewise::PiecewiseAffine, mean: &Rational) -> Rational {
    phi.pieces()
        .iter()
        .zip(phi.breakpoints().windows(2))
        .flat_map(|(p, w)| [p.eval(&w[0]), p.eval(&w[1])])
        .map(|y| (y - mean).abs())
        .max()
        .unwrap_or_else(Rational::zero)
}
