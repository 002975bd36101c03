//! Certified real bounds: logarithms, roots and powers with directed rounding.
//!
//! Logarithms use 60-bit fixed point in `u128`: `ln k = e·ln 2 + 2·atanh(z)`
//! after the dyadic reduction `k = 2^e·y`, `y ∈ [1,2)`, `z = (y-1)/(y+1)`.
//! Every truncation is rounded in the safe direction, so the returned pairs
//! bracket the true value.

use std::sync::OnceLock;

use num::bigint::{BigInt, BigUint};
use num::{One, Signed, ToPrimitive, Zero};

use crate::rational::Rational;

const FRAC: u32 = 60;
const ONE: u128 = 1 << FRAC;

fn mul_floor(a: u128, b: u128) -> u128 {
    (a * b) >> FRAC
}

fn mul_ceil(a: u128, b: u128) -> u128 {
    (a * b + (ONE - 1)) >> FRAC
}

/// Fixed-point bounds on `atanh(num/den)` for `0 ≤ num/den ≤ 1/3`.
fn atanh_fixed(num: u128, den: u128) -> (u128, u128) {
    let z_lo = (num << FRAC) / den;
    let z_hi = (num << FRAC).div_ceil(den);
    if num == 0 {
        return (0, 0);
    }
    let z2_lo = mul_floor(z_lo, z_lo);
    let z2_hi = mul_ceil(z_hi, z_hi);
    let (mut p_lo, mut p_hi) = (z_lo, z_hi);
    let (mut s_lo, mut s_hi) = (0u128, 0u128);
    let mut j: u128 = 0;
    while p_hi > 0 && j < 64 {
        let d = 2 * j + 1;
        s_lo += p_lo / d;
        s_hi += p_hi.div_ceil(d);
        p_lo = mul_floor(p_lo, z2_lo);
        p_hi = mul_ceil(p_hi, z2_hi);
        j += 1;
    }
    // remaining tail ≤ p_hi/(2j+1) · 1/(1-z²) ≤ p_hi·9/8
    s_hi += (p_hi * 9).div_ceil(8) + 1;
    (s_lo, s_hi)
}

fn ln2_fixed() -> (u128, u128) {
    static LN2: OnceLock<(u128, u128)> = OnceLock::new();
    *LN2.get_or_init(|| {
        let (lo, hi) = atanh_fixed(1, 3);
        (2 * lo, 2 * hi)
    })
}

/// Fixed-point bounds on `ln k`, `k ≥ 1`.
fn ln_fixed(k: u64) -> (u128, u128) {
    assert!(k >= 1, "logarithm of zero");
    let e = 63 - k.leading_zeros() as u128;
    let base = 1u128 << e;
    let (a_lo, a_hi) = atanh_fixed(k as u128 - base, k as u128 + base);
    let (l2_lo, l2_hi) = ln2_fixed();
    (e * l2_lo + 2 * a_lo, e * l2_hi + 2 * a_hi)
}

fn fixed_to_rational(m: u128) -> Rational {
    Rational::new(BigInt::from(m), BigInt::from(ONE))
}

/// Rational `(L, U)` with `L ≤ ln n ≤ U` and `U - L ≤ 2^{-40}` for `n < 2^{63}`.
pub fn ln_bounds(n: u64) -> (Rational, Rational) {
    let (lo, hi) = ln_fixed(n);
    (fixed_to_rational(lo), fixed_to_rational(hi))
}

pub fn ln2_bounds() -> (Rational, Rational) {
    let (lo, hi) = ln2_fixed();
    (fixed_to_rational(lo), fixed_to_rational(hi))
}

/// Lower bound on `ln n` for arbitrary `n ≥ 1` (top 63 bits plus the shift).
pub fn ln_lower_big(n: &BigUint) -> Rational {
    assert!(!n.is_zero(), "logarithm of zero");
    let bits = n.bits();
    if bits <= 63 {
        return ln_bounds(n.to_u64().expect("fits")).0;
    }
    let shift = bits - 63;
    let top = (n >> shift).to_u64().expect("fits");
    ln_bounds(top).0 + Rational::from_integer(BigInt::from(shift)) * ln2_bounds().0
}

/// Fixed-point upper bound on `1/ln(k)^2`, `k ≥ 2`.
fn inv_ln_sq_upper_fixed(k: u64) -> u128 {
    let (lo, _) = ln_fixed(k);
    let r = (ONE * ONE).div_ceil(lo);
    mul_ceil(r, r)
}

fn inv_ln_sq_lower_fixed(k: u64) -> u128 {
    let (_, hi) = ln_fixed(k);
    let r = (ONE * ONE) / hi;
    mul_floor(r, r)
}

/// Certified comparison `Σ_{k=2}^n 1/ln(k)² ≤ 2n/ln(n)² + 4`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LnSqSumCertificate {
    pub n: u64,
    pub lhs_upper: Rational,
    pub rhs_lower: Rational,
    pub holds: bool,
}

fn ln_sq_sum_rhs_lower_fixed(n: u64) -> u128 {
    2 * n as u128 * inv_ln_sq_lower_fixed(n) + 4 * ONE
}

pub fn certify_ln_sq_sum(n: u64) -> LnSqSumCertificate {
    assert!(n >= 2, "the sum starts at k = 2");
    let lhs: u128 = (2..=n).map(inv_ln_sq_upper_fixed).sum();
    let rhs = ln_sq_sum_rhs_lower_fixed(n);
    LnSqSumCertificate {
        n,
        lhs_upper: fixed_to_rational(lhs),
        rhs_lower: fixed_to_rational(rhs),
        holds: lhs <= rhs,
    }
}

/// Certifies the inequality for every `n` in `2..=max_n` in one pass;
/// returns the first failing `n`, if any.
pub fn certify_ln_sq_sum_upto(max_n: u64) -> Result<(), u64> {
    let mut lhs = 0u128;
    for n in 2..=max_n {
        lhs += inv_ln_sq_upper_fixed(n);
        if lhs > ln_sq_sum_rhs_lower_fixed(n) {
            return Err(n);
        }
    }
    Ok(())
}

/// Certified upper bound on `Σ_{k=2}^n 1/ln(k)²`.
pub fn inv_ln_sq_sum_upper(n: u64) -> Rational {
    fixed_to_rational((2..=n).map(inv_ln_sq_upper_fixed).sum())
}

/// Certified upper bound `K ≥ max_{n ≥ 2} ln(n)²/n`.
///
/// `x ↦ ln(x)²/x` increases up to `e²` and decreases after, so the integer
/// maximum is attained at 7 or 8.
pub fn ln_sq_over_n_max_upper() -> Rational {
    let bound = |n: u64| {
        let (_, hi) = ln_bounds(n);
        &hi * &hi / Rational::from_integer(BigInt::from(n))
    };
    crate::rational::max(&bound(7), &bound(8))
}

pub fn ln_lower(n: u64) -> Rational {
    ln_bounds(n).0
}

// ---------------------------------------------------------------------------
// Roots and powers in big fixed point

fn floor_scaled(x: &Rational, bits: u64) -> BigInt {
    (x * Rational::from_integer(BigInt::one() << bits as usize))
        .floor()
        .to_integer()
}

fn ceil_scaled(x: &Rational, bits: u64) -> BigInt {
    (x * Rational::from_integer(BigInt::one() << bits as usize))
        .ceil()
        .to_integer()
}

fn scaled_to_rational(m: BigInt, bits: u64) -> Rational {
    Rational::new(m, BigInt::one() << bits as usize)
}

/// Bounds on `n^{p/q}` with `bits` fractional bits (exact when it is rational).
pub fn root_bounds(n: u64, p: u32, q: u32, bits: u64) -> (Rational, Rational) {
    let base = num::pow::pow(BigUint::from(n), p as usize);
    let exact = base.nth_root(q);
    if num::pow::pow(exact.clone(), q as usize) == base {
        let v = Rational::from_integer(BigInt::from(exact));
        return (v.clone(), v);
    }
    let scaled = base << (bits as usize * q as usize);
    let r = scaled.nth_root(q);
    (
        scaled_to_rational(BigInt::from(r.clone()), bits),
        scaled_to_rational(BigInt::from(r + 1u32), bits),
    )
}

/// Bounds on `x^e` for `0 ≤ lo ≤ x ≤ hi`, truncating to `bits` fractional
/// bits with outward rounding after each multiplication.
pub fn power_bounds(lo: &Rational, hi: &Rational, e: u64, bits: u64) -> (Rational, Rational) {
    assert!(!lo.is_negative() && lo <= hi);
    let mut acc_lo = BigInt::one() << bits as usize;
    let mut acc_hi = acc_lo.clone();
    let mut b_lo = floor_scaled(lo, bits);
    let mut b_hi = ceil_scaled(hi, bits);
    let mut e = e;
    let mul_lo = |a: &BigInt, b: &BigInt| (a * b) >> bits as usize;
    let mul_hi = |a: &BigInt, b: &BigInt| {
        let prod = a * b;
        let mask = (BigInt::one() << bits as usize) - 1;
        let carry = if (&prod & &mask).is_zero() {
            BigInt::zero()
        } else {
            BigInt::one()
        };
        (prod >> bits as usize) + carry
    };
    while e > 0 {
        if e & 1 == 1 {
            acc_lo = mul_lo(&acc_lo, &b_lo);
            acc_hi = mul_hi(&acc_hi, &b_hi);
        }
        e >>= 1;
        if e > 0 {
            b_lo = mul_lo(&b_lo, &b_lo);
            b_hi = mul_hi(&b_hi, &b_hi);
        }
    }
    (scaled_to_rational(acc_lo, bits), scaled_to_rational(acc_hi, bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q;

    fn to_f64(x: &Rational) -> f64 {
        x.numer().to_f64().unwrap() / x.denom().to_f64().unwrap()
    }

    #[test]
    fn ln_bounds_bracket_and_are_tight() {
        for n in [1u64, 2, 3, 7, 8, 10, 1000, 99_991, 1 << 40, u64::MAX >> 1] {
            let (lo, hi) = ln_bounds(n);
            assert!(lo <= hi);
            assert!(&hi - &lo <= Rational::new(BigInt::one(), BigInt::one() << 40));
            let f = (n as f64).ln();
            assert!(to_f64(&lo) <= f + 1e-12 && f - 1e-12 <= to_f64(&hi), "n = {n}");
        }
        let (lo, hi) = ln2_bounds();
        // 0.693147180559945309417232...
        let reference = Rational::new(BigInt::from(693_147_180_559_945_309u64), BigInt::from(10u64).pow(18));
        let ulp = Rational::new(BigInt::one(), BigInt::from(10u64).pow(18));
        assert!(lo <= &reference + &ulp && &reference - &ulp <= hi);
    }

    #[test]
    fn ln_of_big_numbers_is_a_lower_bound() {
        let n = BigUint::one() << 200usize;
        let lo = ln_lower_big(&(n.clone() + 12345u32));
        let f = 200.0 * std::f64::consts::LN_2;
        assert!(to_f64(&lo) <= f + 1e-9);
        assert!(to_f64(&lo) >= f - 1e-9);
    }

    #[test]
    fn ln_sq_sum_anchor_values() {
        assert!(certify_ln_sq_sum(2).holds);
        let c55 = certify_ln_sq_sum(55);
        assert!(c55.holds);
        assert!(c55.lhs_upper <= q(10, 1));
        assert!(inv_ln_sq_sum_upper(55) <= q(10, 1));
    }

    #[test]
    fn ln_sq_constant_is_just_above_the_integer_maximum() {
        let k = ln_sq_over_n_max_upper();
        let f = to_f64(&k);
        assert!(f >= 7f64.ln().powi(2) / 7.0);
        assert!(f < 0.541);
        for n in 2..10_000u64 {
            assert!((n as f64).ln().powi(2) / (n as f64) <= f);
        }
    }

    #[test]
    fn roots_and_powers() {
        assert_eq!(root_bounds(8, 1, 3, 30), (q(2, 1), q(2, 1)));
        let (lo, hi) = root_bounds(2, 1, 2, 40);
        assert!(&lo * &lo <= q(2, 1) && q(2, 1) <= &hi * &hi);
        let (lo, hi) = power_bounds(&q(3, 2), &q(3, 2), 8, 64);
        assert_eq!((lo, hi), (q(6561, 256), q(6561, 256)));
        let (lo, hi) = power_bounds(&q(1, 3), &q(1, 3), 5, 32);
        assert!(lo <= q(1, 243) && q(1, 243) <= hi);
    }
}
