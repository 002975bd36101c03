use bcset::cms::{IdealBall, OpenSet};
use bcset::ergodic::*;
use bcset::interval::IntervalUnion;
use bcset::measures::TestFn;
use bcset::{q, Error, Rational};
use num::bigint::BigUint;
use num::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Base-`b` digits by repeated multiplication, independent of the map code.
fn digit_expansion(x: &Rational, b: u64, n: usize) -> Vec<u64> {
    let mut y = x.clone();
    let base = Rational::from_integer(b.into());
    let mut out = Vec::new();
    for _ in 0..n {
        y *= &base;
        let d = y.floor();
        out.push(d.to_integer().to_u64().unwrap());
        y -= d;
    }
    out
}

/// `f_n(x)` for a cylinder indicator by counting word occurrences.
fn cylinder_average(x: &Rational, b: u64, word: &[u64], n: usize) -> Rational {
    let digits = digit_expansion(x, b, n + word.len());
    let hits = (0..n).filter(|&i| digits[i..i + word.len()] == *word).count();
    Rational::new((hits as u64).into(), (n as u64).into())
}

fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    let den: u64 = rng.gen_range(2..1_000_000);
    Rational::new(rng.gen_range(1..den).into(), den.into())
}

fn markov_lebesgue() -> PAMap {
    PAMap::parse("[0, 1/3) -> slope 3, offset 0; [1/3, 1] -> slope 3/2, offset -1/2").unwrap()
}

#[test]
fn map_parsing_and_validation() {
    let d = PAMap::parse("xb:2").unwrap();
    assert_eq!(d.base(), Some(2));
    assert_eq!(d.to_string(), "xb:2");
    let same = PAMap::parse("[0, 1/2) -> slope 2, offset 0; [1/2, 1] -> slope 2, offset -1").unwrap();
    assert_eq!(same, d);
    let m = markov_lebesgue();
    assert!(m.is_expanding());
    assert_eq!(PAMap::parse(&m.to_string()).unwrap(), m);
    assert!(matches!(PAMap::parse("[0, 1/2) -> slope 2"), Err(Error::Invalid(_))));
    assert!(matches!(PAMap::parse("[0, 1] -> slope 2"), Err(Error::Invalid(_))));
    assert!(matches!(PAMap::parse("[0, 1] -> offset 1/2"), Err(Error::Parse(_))));
    assert!(matches!(PAMap::b_adic(1), Err(Error::Invalid(_))));
    assert_eq!(m.eval(&q(1, 3)), q(0, 1));
    assert_eq!(m.eval(&q(1, 1)), q(1, 1));
}

#[test]
fn observables_parse_and_integrate() {
    let c = Observable::parse("cyl:3:21").unwrap();
    assert_eq!(c.to_string(), "cyl:3:21");
    assert_eq!(c.lebesgue_mean(), q(1, 9));
    assert_eq!(Observable::cylinder_interval(3, &[2, 1]), (q(7, 9), q(1, 9)));
    assert_eq!(c.to_piecewise().eval(&q(15, 18)), q(1, 1));
    assert_eq!(c.to_piecewise().eval(&q(1, 2)), q(0, 1));
    assert!(Observable::parse("cyl:2:2").is_err());
    assert!(Observable::parse("cyl:2:").unwrap().is_constant());
    let h = Observable::parse("hat(1/2, 1/4, 1/4)").unwrap();
    assert_eq!(h.lebesgue_mean(), q(3, 4));
    assert!(!h.is_constant());
    assert!(Observable::parse("const(3/7)").unwrap().is_constant());
}

#[test]
fn second_birkhoff_average_of_the_zero_cylinder() {
    let map = PAMap::b_adic(2).unwrap();
    let phi = Observable::parse("cyl:2:0").unwrap();
    let f2 = birkhoff_fn(&map, &phi, 2, 1000).unwrap();
    assert_eq!(f2.breakpoints(), &[q(0, 1), q(1, 4), q(1, 2), q(3, 4), q(1, 1)]);
    let values: Vec<Rational> = f2.pieces().iter().map(|p| p.offset.clone()).collect();
    assert_eq!(values, vec![q(1, 1), q(1, 2), q(1, 2), q(0, 1)]);
    assert!(f2.pieces().iter().all(|p| p.slope.is_zero()));
    assert!(birkhoff_fn(&map, &phi, 0, 10).is_err());
    assert!(matches!(birkhoff_fn(&map, &phi, 12, 100), Err(Error::Budget(_))));
}

#[test]
fn birkhoff_functions_match_digit_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (b, word) in [(2u64, vec![0u64]), (2, vec![1, 0]), (3, vec![2])] {
        let map = PAMap::b_adic(b).unwrap();
        let phi = Observable::cylinder(b, word.clone()).unwrap();
        for n in 1..=7 {
            let f = birkhoff_fn(&map, &phi, n, 100_000).unwrap();
            for _ in 0..40 {
                let x = random_rational(&mut rng);
                let want = cylinder_average(&x, b, &word, n as usize);
                // breakpoints are where f_n may be discontinuous; compare off them
                if f.breakpoints().contains(&x) {
                    continue;
                }
                assert_eq!(f.eval(&x), want, "b={b} w={word:?} n={n} x={x}");
                assert_eq!(birkhoff_at(&map, &phi, n, &x), want);
            }
        }
    }
}

proptest! {
    #[test]
    fn birkhoff_fn_agrees_with_orbit_sums(num in 1u64..9999, n in 1u64..6) {
        let x = Rational::new(num.into(), 10_000.into());
        let map = markov_lebesgue();
        let phi = Observable::parse("max(hat(1/3, 1/10, 1/5), lin(1/2*hat(4/5, 0, 1/10)))").unwrap();
        let f = birkhoff_fn(&map, &phi, n, 100_000).unwrap();
        prop_assume!(!f.breakpoints().contains(&x));
        // independent oracle: explicit orbit with explicit branch formulas
        let mut y = x.clone();
        let mut sum = Rational::zero();
        let pw = phi.to_piecewise();
        for _ in 0..n {
            sum += pw.eval(&y);
            y = if y < q(1, 3) { y * q(3, 1) } else { y * q(3, 2) - q(1, 2) };
        }
        prop_assert_eq!(f.eval(&x), sum / Rational::from_integer(n.into()));
    }

    #[test]
    fn deviation_sets_are_exact_off_breakpoints(num in 1u64..9999) {
        let x = Rational::new(num.into(), 10_000.into());
        let map = PAMap::b_adic(2).unwrap();
        let phi = Observable::parse("hat(1/2, 1/8, 1/4)").unwrap();
        let f = birkhoff_fn(&map, &phi, 4, 10_000).unwrap();
        let (target, eps) = (q(1, 2), q(1, 8));
        let union = deviation_union(&f, &target, &eps);
        prop_assume!(!f.breakpoints().contains(&x));
        let inside = (f.eval(&x) - &target) < eps && (&target - f.eval(&x)) < eps;
        prop_assert_eq!(union.contains(&x), inside);
    }
}

#[test]
fn deviation_union_excludes_breakpoints() {
    // f_1 of the zero cylinder is the step 1 on [0,1/2), 0 on [1/2,1]
    let map = PAMap::b_adic(2).unwrap();
    let phi = Observable::parse("cyl:2:0").unwrap();
    let f1 = birkhoff_fn(&map, &phi, 1, 10).unwrap();
    let u = deviation_union(&f1, &q(1, 1), &q(1, 2));
    assert_eq!(u.parts(), &[(q(0, 1), q(1, 2))]);
    let f2 = birkhoff_fn(&map, &phi, 2, 10).unwrap();
    let v = deviation_union(&f2, &q(1, 2), &q(1, 4));
    // the two middle pieces stay separate so 1/2 is excluded
    assert_eq!(v.parts(), &[(q(1, 4), q(1, 2)), (q(1, 2), q(3, 4))]);
    assert!(!v.contains(&q(1, 2)));
}

#[test]
fn lazy_block_opens_match_explicit_intersections() {
    let map = PAMap::b_adic(2).unwrap();
    for (phi, target, eps, lo, hi) in [
        ("cyl:2:0", q(1, 2), q(1, 4), 4u64, 9u64),
        ("cyl:2:1", q(1, 2), q(3, 8), 2, 7),
        ("hat(1/2, 1/8, 1/4)", q(3, 4), q(1, 3), 3, 6),
    ] {
        let obs = Observable::parse(phi).unwrap();
        let mut explicit = IntervalUnion::unit();
        for n in lo..hi {
            let f = birkhoff_fn(&map, &obs, n, 100_000).unwrap();
            explicit = explicit.intersect(&deviation_union(&f, &target, &eps));
        }
        let lazy = BirkhoffBlockOpen::new(&map, &obs, target.clone(), eps.clone(), lo, hi, 100_000);
        let mut previous = IntervalUnion::empty();
        for stage in 0..=hi {
            let r = lazy.realize(stage);
            assert!(previous.is_subset_of(&r), "{phi}: realizations must grow");
            assert!(r.is_subset_of(&explicit) || r.measure() <= explicit.measure());
            previous = r;
        }
        assert!(lazy.is_complete());
        assert_eq!(previous.measure(), explicit.measure(), "{phi}");
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let x = random_rational(&mut rng);
            assert_eq!(previous.contains(&x), explicit.contains(&x), "{phi} at {x}");
        }
    }
}

#[test]
fn lazy_block_opens_report_saturation() {
    let map = PAMap::b_adic(2).unwrap();
    let obs = Observable::parse("cyl:2:0").unwrap();
    let open = BirkhoffBlockOpen::new(&map, &obs, q(1, 2), q(1, 64), 1000, 2000, 64);
    let _ = open.realize(40);
    assert!(open.blocked().unwrap().contains("frontier"));
}

#[test]
fn subsequence_anchor_values() {
    let alpha = default_alpha();
    assert_eq!(seq_ni(&alpha, 1).unwrap(), BigUint::from(2u32));
    // 8^{1/3} = 2, 1.5^8 = 25.62…
    assert_eq!(seq_ni(&alpha, 8).unwrap(), BigUint::from(26u32));
    // floating-point oracle away from integers
    for i in 1..=60u64 {
        let x = (1.0 + (i as f64).powf(-1.0 / 3.0)).powi(i as i32);
        if (x - x.round()).abs() < 1e-6 {
            continue;
        }
        let n = seq_ni(&alpha, i).unwrap().to_f64().unwrap();
        assert_eq!(n, x.ceil(), "n_{i}");
    }
    assert!(seq_ni(&alpha, 0).is_err());
    assert!(seq_ni(&q(1, 2), 3).is_err());
}

#[test]
fn subsequence_ratio_bound_holds_and_decreases() {
    let alpha = default_alpha();
    let mut previous = beta_gap_upper(&alpha, 1).unwrap();
    let mut n_i = seq_ni(&alpha, 1).unwrap();
    for i in 1..=1000u64 {
        let gap = beta_gap_upper(&alpha, i).unwrap();
        assert!(gap <= previous, "gap bound must not increase at {i}");
        previous = gap.clone();
        if i <= 200 {
            let n_next = seq_ni(&alpha, i + 1).unwrap();
            // 1/β_i - 1 = n_{i+1}/n_i - 1
            let ratio = Rational::new(n_next.clone().into(), n_i.clone().into()) - Rational::one();
            assert!(ratio <= gap, "i = {i}");
            assert!(n_next >= n_i);
            n_i = n_next;
        }
    }
    assert!(beta_gap_upper(&alpha, 1000).unwrap() < q(1, 5));
}

#[test]
fn u64_threshold_is_where_the_subsequence_overflows() {
    let alpha = default_alpha();
    let k = u64_threshold(&alpha).unwrap();
    assert_eq!(k, 512);
    assert!(seq_ni(&alpha, k).unwrap().bits() > 64);
    assert!(matches!(
        seq_ni_horizon(&alpha, k).unwrap(),
        bcset::bc::Horizon::Beyond(_)
    ));
    assert!(matches!(seq_ni_horizon(&alpha, 8).unwrap(), bcset::bc::Horizon::At(26)));
}

/// `μ[|f_n − 1/2| ≥ δ]` for the zero cylinder, by counting zero digits.
fn exact_deviation_measure(n: u64, delta: &Rational) -> Rational {
    let mut total = BigUint::zero();
    let mut binom = BigUint::one();
    for k in 0..=n {
        let freq = Rational::new(k.into(), n.into());
        let dev = if freq >= q(1, 2) {
            freq - q(1, 2)
        } else {
            q(1, 2) - freq
        };
        if dev >= *delta {
            total += &binom;
        }
        binom = binom * (n - k) / (k + 1);
    }
    Rational::new(total.into(), (BigUint::one() << n).into())
}

#[test]
fn chebyshev_bound_dominates_exact_deviation_measures() {
    let c = cylinder_constant(2, &[0]).unwrap();
    for delta in [q(1, 2), q(1, 4), q(1, 8)] {
        for n in 2..=20 {
            let exact = exact_deviation_measure(n, &delta);
            let bound = chebyshev_bound(&q(1, 1), &c, n, &delta);
            assert!(exact <= bound, "n={n} delta={delta}");
        }
    }
}

#[test]
fn cylinder_constants_cover_the_variance() {
    // n·Var(f_n) for the zero cylinder equals 1/4 exactly, below V = 1 and
    // below the ln² constant divided by the ln² correction
    assert_eq!(cylinder_variance(2, &[0]), q(1, 1));
    assert_eq!(cylinder_variance(3, &[1, 2]), q(3, 9));
    let c = cylinder_constant(2, &[0]).unwrap();
    assert!(c > q(1, 1));
    assert!(cylinder_constant(2, &[2]).is_err());
    // exact variance of f_n for "00" by enumeration, n ≤ 10
    for n in 1..=10u64 {
        let word = [0u64, 0];
        let total = 1u64 << (n + 1);
        let mut mean = Rational::zero();
        let mut second = Rational::zero();
        for k in 0..total {
            let x = Rational::new((2 * k + 1).into(), (2 * total).into());
            let f = cylinder_average(&x, 2, &word, n as usize);
            mean += &f;
            second += &f * &f;
        }
        let t = Rational::from_integer(total.into());
        let var = second / &t - (&mean / &t) * (&mean / &t);
        assert!(
            var * Rational::from_integer(n.into()) <= cylinder_variance(2, &word),
            "n = {n}"
        );
    }
}

#[test]
fn paper_modulus_is_beyond_reach_at_desk_scale() {
    let c = cylinder_constant(2, &[0]).unwrap();
    let m = as_modulus(&q(1, 1), &c, &default_alpha()).unwrap();
    assert!(matches!(m.at(&q(1, 4), &q(1, 4)), bcset::bc::Horizon::Beyond(_)));
    let zero = as_modulus(&q(0, 1), &c, &default_alpha()).unwrap();
    assert_eq!(zero.at(&q(1, 4), &q(1, 4)), bcset::bc::Horizon::At(0));
    // generous tolerances reach a finite index
    let easy = as_modulus(&q(1, 1), &q(0, 1), &default_alpha()).unwrap();
    assert!(matches!(easy.at(&q(4, 1), &q(1000, 1)), bcset::bc::Horizon::At(_)));
}

#[test]
fn variance_modulus_closed_form() {
    let m = variance_modulus("v", &q(1, 1), &q(1, 1)).unwrap();
    assert_eq!(m.at(&q(1, 4), &q(1, 4)), bcset::bc::Horizon::At(8449));
    // the tail from the horizon is below δ, from one step earlier it is not
    assert!(variance_tail(&q(1, 1), &q(1, 1), &q(1, 4), 8449) < q(1, 4));
    assert!(variance_tail(&q(1, 1), &q(1, 1), &q(1, 4), 8448) >= q(1, 4));
    assert_eq!(variance_step(&q(1, 16), 8449), 8449 + 528);
    assert_eq!(variance_step(&q(1, 16), 3), 4);
    assert!(matches!(
        m.at(&q(1, 1 << 20), &q(1, 1 << 20)),
        bcset::bc::Horizon::Beyond(_)
    ));
}

/// Probability that the zero-count walk leaves the band `|k/n − 1/2| < ε`
/// at some `n ∈ [start, end]`, exactly.
fn exact_union_measure(start: u64, end: u64, eps: &Rational) -> Rational {
    let inside = |k: u64, n: u64| {
        let f = Rational::new(k.into(), n.into());
        let d = if f >= q(1, 2) { f - q(1, 2) } else { q(1, 2) - f };
        d < *eps
    };
    // alive[k] = number of paths of length n with k zeros that stayed in band
    let mut alive: Vec<BigUint> = Vec::with_capacity(start as usize + 1);
    let mut binom = BigUint::one();
    for k in 0..=start {
        alive.push(binom.clone());
        binom = binom * (start - k) / (k + 1);
    }
    let mut escaped = Rational::zero();
    let mut n = start;
    loop {
        let mut lost = BigUint::zero();
        for (k, count) in alive.iter_mut().enumerate() {
            if !count.is_zero() && !inside(k as u64, n) {
                lost += &*count;
                *count = BigUint::zero();
            }
        }
        escaped += Rational::new(lost.into(), (BigUint::one() << n).into());
        if n == end {
            return escaped;
        }
        let mut next = vec![BigUint::zero(); alive.len() + 1];
        for (k, count) in alive.iter().enumerate() {
            if count.is_zero() {
                continue;
            }
            next[k] += count;
            next[k + 1] += count;
        }
        alive = next;
        n += 1;
    }
}

#[test]
fn exact_union_measure_matches_brute_force() {
    for (start, end) in [(4u64, 9u64), (6, 12)] {
        let eps = q(1, 4);
        let total = 1u64 << end;
        let mut bad = 0u64;
        for x in 0..total {
            let digits: Vec<u64> = (0..end).map(|i| (x >> (end - 1 - i)) & 1).collect();
            let hit = (start..=end).any(|n| {
                let zeros = digits[..n as usize].iter().filter(|&&d| d == 0).count() as u64;
                let f = Rational::new(zeros.into(), n.into());
                let d = if f >= q(1, 2) { f - q(1, 2) } else { q(1, 2) - f };
                d >= eps
            });
            bad += hit as u64;
        }
        assert_eq!(
            exact_union_measure(start, end, &eps),
            Rational::new(bad.into(), total.into())
        );
    }
}

#[test]
fn variance_modulus_guarantee_with_exact_head() {
    let (eps, delta) = (q(1, 4), q(1, 4));
    let m = variance_modulus("v", &q(1, 1), &cylinder_variance(2, &[0])).unwrap();
    let bcset::bc::Horizon::At(n) = m.at(&eps, &delta) else {
        panic!("finite horizon expected")
    };
    let span = 64;
    let head = exact_union_measure(n, n + span, &eps);
    let tail = variance_tail(&q(1, 1), &q(1, 1), &eps, n + span + 1);
    assert!(head.clone() + tail < delta);
    assert!(head < q(1, 1_000_000));
}

#[test]
fn variation_inequality_along_the_subsequence() {
    let alpha = default_alpha();
    let map = PAMap::b_adic(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n: Vec<u64> = (1..=8).map(|i| seq_ni(&alpha, i).unwrap().to_u64().unwrap()).collect();
    for phi in ["cyl:2:0", "hat(1/3, 1/8, 1/8)"] {
        let obs = Observable::parse(phi).unwrap();
        let m = obs.sup_bound();
        for _ in 0..100 {
            let x = random_rational(&mut rng);
            for i in 0..7 {
                let beta = Rational::new(n[i].into(), n[i + 1].into());
                let base = birkhoff_at(&map, &obs, n[i], &x);
                for k in n[i]..n[i + 1] {
                    let diff = birkhoff_at(&map, &obs, k, &x) - &base;
                    let bound = Rational::from_integer(2.into()) * (Rational::one() - &beta) * &m;
                    assert!(diff.clone() <= bound && -diff <= bound, "{phi} i={} n={k}", i + 1);
                }
            }
        }
    }
}

#[test]
fn lebesgue_constants_by_observable_kind() {
    let d = PAMap::b_adic(2).unwrap();
    let cyl = lebesgue_constants(&d, &Observable::parse("cyl:2:01").unwrap());
    assert_eq!(cyl.sup, q(1, 1));
    assert_eq!(cyl.variance, Some(q(3, 4)));
    assert!(cyl.ln2.is_some());
    let other_base = lebesgue_constants(&d, &Observable::parse("cyl:3:1").unwrap());
    assert_eq!(other_base.variance, None);
    let hat = lebesgue_constants(&d, &Observable::parse("hat(1/2, 0, 1/2)").unwrap());
    // mean 1/2, centered sup 1/2, Lipschitz 2: V = 1/4 + 2·(1/2)/1
    assert_eq!(hat.variance, Some(q(5, 4)));
    let markov = lebesgue_constants(&markov_lebesgue(), &Observable::parse("cyl:2:0").unwrap());
    assert_eq!((markov.ln2.clone(), markov.variance.clone()), (None, None));
    let cst = Observable::parse("const(1/3)").unwrap();
    let zero = modulus_for(
        ModulusProvider::Ln2Decay,
        &cst,
        &lebesgue_constants(&d, &cst),
        &default_alpha(),
    )
    .unwrap();
    assert_eq!(zero.at(&q(1, 1024), &q(1, 1024)), bcset::bc::Horizon::At(0));
    assert!(modulus_for(
        ModulusProvider::Independence,
        &Observable::parse("cyl:2:0").unwrap(),
        &markov,
        &default_alpha()
    )
    .is_err());
    assert_eq!(
        "paper-ln2".parse::<ModulusProvider>().unwrap(),
        ModulusProvider::Ln2Decay
    );
    assert_eq!(ModulusProvider::Independence.to_string(), "independence");
    assert!("fast".parse::<ModulusProvider>().is_err());
}

#[test]
fn typical_sequence_of_a_constant_is_the_domain() {
    let map = PAMap::b_adic(2).unwrap();
    let obs = Observable::parse("const(1/2)").unwrap();
    let seq = typical_bc(&map, &obs, &q(1, 2), &bcset::bc::ConvergenceModulus::zero(), 10_000);
    for i in 0..4 {
        let layer = seq.layer(i).realize(8);
        // (0,1) minus the dyadic points of order ≤ i+1
        let want = IntervalUnion::from_intervals(
            (0..1u64 << (i + 1)).map(|k| (q(k as i64, 1 << (i + 1)), q(k as i64 + 1, 1 << (i + 1)))),
        );
        assert_eq!(layer, want, "layer {i}");
    }
}

#[test]
fn typical_layers_have_small_complements() {
    let map = PAMap::b_adic(2).unwrap();
    let obs = Observable::parse("cyl:2:0").unwrap();
    let modulus = variance_modulus("v", &q(1, 1), &q(1, 1)).unwrap();
    let seq = typical_bc(&map, &obs, &q(1, 2), &modulus, 10_000);
    assert_eq!(seq.layer(0).realize(2).measure(), q(1, 1));
    let layer1 = seq.layer(1).realize(12);
    // only the all-zero and all-one cells stay undecided
    assert!(Rational::one() - layer1.measure() <= q(1, 1 << 11));
    let layer3 = seq.layer(3);
    let _ = layer3.realize(30);
    assert!(layer3.blocked_reason().is_some() || layer3.realize(30).measure() < q(1, 2));
}

#[test]
fn dense_orbit_visits_first_balls() {
    let map = PAMap::b_adic(2).unwrap();
    let config = DenseConfig::default();
    let orbit = DenseOrbit::new(&map, config.clone());
    let visits = orbit.visit_first(8).unwrap();
    check_visits(&map, &config.seed, &visits).unwrap();
    for v in &visits {
        assert_eq!(Visit::parse_line(&v.to_line()).unwrap(), *v);
        // oracle: the centre's orbit lands in the target ball
        let mut y = v.chosen.center().clone();
        for _ in 0..v.n {
            y = (y * q(2, 1)) % q(1, 1);
        }
        assert!(IdealBall::from_index(v.ball_index).contains(&y));
    }
    let x = orbit.point().approximant(30).unwrap();
    assert!(visits.last().unwrap().next_ball().contains(&x) || visits.len() < 30);
    assert_eq!(orbit.certificate(8).unwrap().len(), 3 + 8);
}

#[test]
fn dense_orbit_replay_rejects_tampering() {
    let map = PAMap::b_adic(3).unwrap();
    let config = DenseConfig::default();
    let visits = DenseOrbit::new(&map, config.clone()).visit_first(6).unwrap();
    check_visits(&map, &config.seed, &visits).unwrap();
    let mut wrong_n = visits.clone();
    wrong_n[3].n = 3;
    assert!(matches!(
        check_visits(&map, &config.seed, &wrong_n),
        Err(Error::Verification { .. })
    ));
    let mut grown = visits.clone();
    grown[2].chosen = IdealBall::new(grown[2].chosen.center().clone(), grown[2].chosen.radius() * q(3, 1)).unwrap();
    assert!(check_visits(&map, &config.seed, &grown).is_err());
    let mut swapped = visits;
    swapped.swap(0, 1);
    assert!(check_visits(&map, &config.seed, &swapped).is_err());
}

#[test]
fn identity_map_has_no_dense_orbit() {
    let id = PAMap::parse("[0, 1] -> slope 1, offset 0").unwrap();
    let config = DenseConfig {
        extra_iterates: 8,
        ..DenseConfig::default()
    };
    let err = DenseOrbit::new(&id, config).visit_first(40).unwrap_err();
    assert!(matches!(err, Error::Budget(_)));
}

#[test]
fn domain_layers_avoid_cell_endpoints() {
    let map = markov_lebesgue();
    let dom = map.domain(10_000);
    let layer = dom.layer(1).realize(0);
    // cells of T^2: endpoints 0, 1/9, 1/3, 5/9, 1
    let ends: Vec<Rational> = layer.parts().iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
    for e in [q(1, 9), q(1, 3), q(5, 9)] {
        assert!(ends.contains(&e) && !layer.contains(&e));
    }
    assert_eq!(layer.measure(), q(1, 1));
    let window = dom.layer(1).realize_within(0, &q(0, 1), &q(1, 5));
    assert_eq!(window.parts(), &[(q(0, 1), q(1, 9)), (q(1, 9), q(1, 5))]);
}

#[test]
fn orbit_and_digit_helpers() {
    let map = PAMap::b_adic(10).unwrap();
    assert_eq!(orbit(&map, &q(1, 7), 3), vec![q(1, 7), q(3, 7), q(2, 7)]);
    assert_eq!(digits(&q(1, 7), 10, 6), vec![1, 4, 2, 8, 5, 7]);
    let one = TestFn::One;
    assert_eq!(Observable::Test(one).sup_bound(), q(1, 1));
}
