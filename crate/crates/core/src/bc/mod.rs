//! Constructive Borel–Cantelli sequences and their algebra.
//!
//! A sequence `(U_n)` of uniformly constructive opens whose complement
//! measures `μ(U_nᶜ)` are effectively summable defines the set
//! `⋃_k ⋂_{n≥k} U_n`. Normal form means `μ(U_nᶜ) < 2^{-n}` for every `n`.

mod certificate;
pub mod crafted;
mod extract;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::cms::{intersect_exact, tri_decode, tri_encode, ConstructiveOpen, GDelta};
use crate::measures::SummabilityModulus;
use crate::rational::{int, pow2_neg, Rational};
use crate::{Error, Result};

pub use certificate::{check_certificate, CheckReport, ExtractionCertificate, StepRecord, CERTIFICATE_MAGIC};
pub use extract::{extract_point, shrinking_to_point, ExtractConfig, ExtractedPoint};

type LayerFn = Arc<dyn Fn(u64) -> ConstructiveOpen + Send + Sync>;

/// A constructive Borel–Cantelli sequence.
#[derive(Clone)]
pub struct BCSequence {
    layers: LayerFn,
    tail: SummabilityModulus,
    normal: bool,
    label: String,
}

impl fmt::Debug for BCSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BCSequence")
            .field("label", &self.label)
            .field("normal", &self.normal)
            .field("tail", &self.tail.label())
            .finish()
    }
}

impl BCSequence {
    /// `tail` must bound the tails of `Σ μ(U_nᶜ)`.
    pub fn new(
        label: impl Into<String>,
        layers: impl Fn(u64) -> ConstructiveOpen + Send + Sync + 'static,
        tail: SummabilityModulus,
    ) -> Self {
        BCSequence {
            layers: Arc::new(layers),
            tail,
            normal: false,
            label: label.into(),
        }
    }

    /// Marks the sequence as normal: the caller certifies `μ(U_nᶜ) < 2^{-n}`.
    pub fn assume_normal(mut self) -> Self {
        self.normal = true;
        self
    }

    /// Every layer is `(0,1)`.
    pub fn whole() -> Self {
        BCSequence::new(
            "whole",
            |_| ConstructiveOpen::whole(),
            SummabilityModulus::new("0", |_| 0),
        )
        .assume_normal()
    }

    pub fn layer(&self, n: u64) -> ConstructiveOpen {
        (self.layers)(n)
    }

    pub fn tail_modulus(&self) -> &SummabilityModulus {
        &self.tail
    }

    pub fn is_normal(&self) -> bool {
        self.normal
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Least `N ≥ 0` with `2^{-N+shift} ≤ ε`.
fn dyadic_tail_modulus(shift: u64, label: String) -> SummabilityModulus {
    SummabilityModulus::new(label, move |eps: &Rational| {
        let mut n = 0u64;
        while pow2_neg(n) * int(1 << shift) > *eps {
            n += 1;
        }
        n
    })
}

/// Strictly increasing block starts `n_i` derived from a monotone schedule.
struct BlockStarts {
    schedule: Box<dyn Fn(u64) -> u64 + Send + Sync>,
    cache: Mutex<Vec<u64>>,
}

impl BlockStarts {
    fn new(schedule: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Self {
        BlockStarts {
            schedule: Box::new(schedule),
            cache: Mutex::new(Vec::new()),
        }
    }

    fn get(&self, i: u64) -> u64 {
        let mut cache = self.cache.lock().expect("block cache poisoned");
        while cache.len() as u64 <= i {
            let k = cache.len() as u64;
            let raw = (self.schedule)(k);
            let next = match cache.last() {
                Some(&prev) => raw.max(prev + 1),
                None => raw,
            };
            cache.push(next);
        }
        cache[i as usize]
    }
}

/// Block starts of [`normal_form`]: `n_i = max(A(2^{-i-1}), n_{i-1} + 1)`.
pub fn normal_form_blocks(seq: &BCSequence) -> impl Fn(u64) -> u64 + Send + Sync {
    let tail = seq.tail.clone();
    let starts = Arc::new(BlockStarts::new(move |i| tail.at(&pow2_neg(i + 1))));
    move |i| starts.get(i)
}

/// Normal form: `U'_i = ⋂_{n_i ≤ n < n_{i+1}} U_n`.
///
/// `Σ_{n ≥ n_i} μ(U_nᶜ) ≤ 2^{-i-1}` gives `μ(U'_iᶜ) < 2^{-i}`, and the
/// starts increase strictly, so the BC set is unchanged.
pub fn normal_form(seq: &BCSequence) -> BCSequence {
    let blocks = Arc::new(normal_form_blocks(seq));
    let inner = seq.clone();
    let label = format!("normal({})", seq.label);
    let layers = move |i: u64| {
        let (lo, hi) = (blocks(i), blocks(i + 1));
        intersect_exact((lo..hi).map(|n| inner.layer(n)).collect())
    };
    // Σ_{i ≥ N} 2^{-i-1} = 2^{-N}
    BCSequence::new(label, layers, dyadic_tail_modulus(0, "sum_i 2^-(i+1)".into())).assume_normal()
}

/// `W_n = U_n ∩ V_n` with `μ(W_nᶜ) < 2^{-n+1}`; BC set is the intersection.
pub fn intersect_finite(a: &BCSequence, b: &BCSequence) -> Result<BCSequence> {
    for s in [a, b] {
        if !s.normal {
            return Err(Error::Invalid(format!("sequence `{}` is not in normal form", s.label)));
        }
    }
    let (x, y) = (a.clone(), b.clone());
    let label = format!("({}) & ({})", a.label, b.label);
    Ok(BCSequence::new(
        label,
        move |n| intersect_exact(vec![x.layer(n), y.layer(n)]),
        // Σ_{n ≥ N} 2^{-n+1} = 2^{-N+2}
        dyadic_tail_modulus(2, "sum_n 2^-(n-1)".into()),
    ))
}

/// Weight `a_m = 2^{-n}` attached to position `m = φ(n, i)` of the interleaving.
pub fn interleaved_weight(m: u64) -> Rational {
    pow2_neg(tri_decode(m).0)
}

/// Exact tail `Σ_{m ≥ N} a_m = (n₀+1-i₀)2^{-n₀} + (n₀+3)2^{-n₀}` where `N = φ(n₀, i₀)`.
pub fn interleaved_tail(big_n: u64) -> Rational {
    let (n0, i0) = tri_decode(big_n);
    (int(n0 + 1 - i0) + int(n0 + 3)) * pow2_neg(n0)
}

fn interleaved_modulus() -> SummabilityModulus {
    SummabilityModulus::new("sum_m 2^-n(m)", |eps: &Rational| {
        // the tail is nonincreasing in N; walk rows, then positions
        let mut n0 = 0u64;
        while interleaved_tail(tri_encode(n0 + 1, 0)) > *eps {
            n0 += 1;
        }
        let mut big_n = tri_encode(n0, 0);
        while interleaved_tail(big_n) > *eps {
            big_n += 1;
        }
        big_n
    })
}

/// Interleaves a uniform family of normal-form sequences: `V_m = U^i_n` with
/// `φ(n, i) = m`. The BC set of the result lies in every member's BC set.
///
/// Members must be in normal form; the family is only sampled lazily, so
/// this is checked for member 0 and documented for the rest.
pub fn intersect_uniform(family: impl Fn(u64) -> BCSequence + Send + Sync + 'static) -> Result<BCSequence> {
    let first = family(0);
    if !first.normal {
        return Err(Error::Invalid(format!(
            "member `{}` is not in normal form",
            first.label
        )));
    }
    let family = Arc::new(family);
    let label = format!("interleave({}, ..)", first.label);
    Ok(BCSequence::new(
        label,
        move |m| {
            let (n, i) = tri_decode(m);
            family(i).layer(n)
        },
        interleaved_modulus(),
    ))
}

/// Finite family, padded with [`BCSequence::whole`] beyond its end.
pub fn intersect_uniform_finite(members: Vec<BCSequence>) -> Result<BCSequence> {
    if members.is_empty() {
        return Err(Error::Invalid("empty family".into()));
    }
    if let Some(bad) = members.iter().find(|s| !s.normal) {
        return Err(Error::Invalid(format!("member `{}` is not in normal form", bad.label)));
    }
    let members = Arc::new(members);
    intersect_uniform(move |i| members.get(i as usize).cloned().unwrap_or_else(BCSequence::whole))
}

// ---------------------------------------------------------------------------
// Effective almost-sure convergence

/// Result of a convergence modulus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Horizon {
    /// The guarantee holds from this index on.
    At(u64),
    /// The certified index does not fit in 64 bits; the text says how large it is.
    Beyond(String),
}

impl Horizon {
    pub fn index(&self) -> Option<u64> {
        match self {
            Horizon::At(n) => Some(*n),
            Horizon::Beyond(_) => None,
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::At(n) => write!(f, "{n}"),
            Horizon::Beyond(why) => write!(f, "beyond u64 ({why})"),
        }
    }
}

type ModulusFn = Arc<dyn Fn(&Rational, &Rational) -> Horizon + Send + Sync>;

/// `(ε, δ) ↦ N` with `μ[∃ n ≥ N: |f_n - f| ≥ ε] < δ`.
#[derive(Clone)]
pub struct ConvergenceModulus {
    modulus: ModulusFn,
    label: String,
}

impl fmt::Debug for ConvergenceModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConvergenceModulus({})", self.label)
    }
}

impl ConvergenceModulus {
    pub fn new(
        label: impl Into<String>,
        modulus: impl Fn(&Rational, &Rational) -> Horizon + Send + Sync + 'static,
    ) -> Self {
        ConvergenceModulus {
            modulus: Arc::new(modulus),
            label: label.into(),
        }
    }

    /// `N = 0` everywhere (valid when `f_n ≡ f`).
    pub fn zero() -> Self {
        ConvergenceModulus::new("zero", |_, _| Horizon::At(0))
    }

    pub fn at(&self, eps: &Rational, delta: &Rational) -> Horizon {
        (self.modulus)(eps, delta)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Block starts `k_i = max(N(2^{-i}, 2^{-i}), k_{i-1} + 1)`; `None` once a
/// start is out of reach.
pub fn convergence_blocks(
    modulus: &ConvergenceModulus,
) -> impl Fn(u64) -> std::result::Result<u64, String> + Send + Sync {
    let modulus = modulus.clone();
    let cache: Arc<Mutex<Vec<std::result::Result<u64, String>>>> = Arc::new(Mutex::new(Vec::new()));
    move |i| {
        let mut cache = cache.lock().expect("block cache poisoned");
        while cache.len() as u64 <= i {
            let k = cache.len() as u64;
            let eps = pow2_neg(k);
            let next = match (cache.last().cloned(), modulus.at(&eps, &eps)) {
                (Some(Err(why)), _) | (_, Horizon::Beyond(why)) => Err(why),
                (Some(Ok(prev)), Horizon::At(n)) => Ok(n.max(prev + 1)),
                (None, Horizon::At(n)) => Ok(n),
            };
            cache.push(next);
        }
        cache[i as usize].clone()
    }
}

/// BC sequence from effective a.s. convergence, with deviation opens given
/// per block: `block_opens(lo, hi, ε)` realizes `⋂_{lo ≤ n < hi} [|f_n - f| < ε]`.
///
/// Layer `i` is `block_opens(k_i, k_{i+1}, 2^{-i}) ∩ D_i`; its complement has
/// measure `< 2^{-i}`, so the result is in normal form.
pub fn bc_from_blocks(
    label: impl Into<String>,
    block_opens: impl Fn(u64, u64, &Rational) -> ConstructiveOpen + Send + Sync + 'static,
    domains: GDelta,
    modulus: &ConvergenceModulus,
) -> BCSequence {
    let blocks = Arc::new(convergence_blocks(modulus));
    // layers may carry refinement state, so each is built once
    let built: Arc<Mutex<HashMap<u64, ConstructiveOpen>>> = Arc::default();
    let layers = move |i: u64| {
        if let Some(layer) = built.lock().expect("layer cache poisoned").get(&i) {
            return layer.clone();
        }
        let layer = match (blocks(i), blocks(i + 1)) {
            (Ok(lo), Ok(hi)) => intersect_exact(vec![block_opens(lo, hi, &pow2_neg(i)), domains.layer(i)]),
            (Err(why), _) | (_, Err(why)) => ConstructiveOpen::blocked(format!("layer {i}: convergence index {why}")),
        };
        built
            .lock()
            .expect("layer cache poisoned")
            .entry(i)
            .or_insert(layer)
            .clone()
    };
    // Σ_{i ≥ N} 2^{-i} = 2^{-N+1}
    BCSequence::new(label, layers, dyadic_tail_modulus(1, "sum_i 2^-i".into())).assume_normal()
}

/// BC sequence from per-index deviation opens `dev_opens(n, ε)`.
pub fn bc_from_eff_as_convergence(
    dev_opens: impl Fn(u64, &Rational) -> ConstructiveOpen + Send + Sync + 'static,
    domains: GDelta,
    modulus: &ConvergenceModulus,
) -> BCSequence {
    let dev = Arc::new(dev_opens);
    bc_from_blocks(
        format!("convergence({})", modulus.label()),
        move |lo, hi, eps| intersect_exact((lo..hi).map(|n| dev(n, eps)).collect()),
        domains,
        modulus,
    )
}
