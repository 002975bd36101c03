//! Replay of certificates written by the commands.
//!
//! The file's first line selects the format. The sequence, measure and
//! budgets are rebuilt from the header and every step is re-checked with
//! exact arithmetic. The seeded audit afterwards samples points from the
//! certified sets and prints statistics; it never affects the verdict.

use std::path::Path;
use std::sync::Arc;

use bcset::apps::{normal_sequence, typical_sequence, DecayProfile, DensityCache, NormalJob, TypicalObservable};
use bcset::bc::{check_certificate, BCSequence, ExtractionCertificate, CERTIFICATE_MAGIC};
use bcset::cms::IdealBall;
use bcset::ergodic::{birkhoff_at, check_visits, Observable, ObservableConstants, PAMap, Visit};
use bcset::interval::IntervalUnion;
use bcset::measures::{ComputableMeasure, Lebesgue, TestFn};
use bcset::rational::fmt_rational;
use bcset::{parse_rational, Error, Rational};
use num::ToPrimitive;
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::commands::{crafted_sequence, measure_by_name, srb_record, DENSE_MAGIC, SRB_MAGIC};
use crate::error::CliError;

const AUDIT_SAMPLES: usize = 8;
const AUDIT_HORIZON: u64 = 256;
/// Prime denominator for sampled points, so their orbits are not eventually 0.
const AUDIT_DENOMINATOR: u64 = 1_000_000_007;

pub fn verify(path: &Path, audit_seed: u64) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let first = text.lines().next().unwrap_or("").trim();
    let mut rng = ChaCha8Rng::seed_from_u64(audit_seed);
    println!("audit seed {audit_seed}");
    match first {
        CERTIFICATE_MAGIC => verify_extraction(&text, &mut rng),
        DENSE_MAGIC => verify_dense(&text, &mut rng),
        SRB_MAGIC => verify_srb(&text),
        _ => Err(Error::Parse(format!("unrecognised certificate format `{first}`")).into()),
    }
}

fn header<'a>(cert: &'a ExtractionCertificate, key: &str) -> Result<&'a str, CliError> {
    cert.header_value(key)
        .ok_or_else(|| Error::Parse(format!("missing `# {key}` header line")).into())
}

fn number<T: std::str::FromStr>(text: &str, what: &str) -> Result<T, CliError> {
    text.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what} `{text}`")).into())
}

/// What the audit samples: a map and observables with their targets.
struct AuditPlan {
    map: PAMap,
    observables: Vec<(Observable, Rational)>,
}

fn verify_extraction(text: &str, rng: &mut ChaCha8Rng) -> Result<(), CliError> {
    let cert = ExtractionCertificate::parse(text)?;
    if !cert.complete {
        return Err(Error::Parse("certificate is truncated (no end record)".into()).into());
    }
    let kind = header(&cert, "kind")?;
    let (seq, measure, plan): (BCSequence, Arc<dyn ComputableMeasure>, Option<AuditPlan>) = match kind {
        "extract" => (crafted_sequence(header(&cert, "sequence")?)?, Arc::new(Lebesgue), None),
        "normal" => {
            let job = NormalJob {
                bases: header(&cert, "bases")?
                    .split(',')
                    .map(|b| number(b, "base"))
                    .collect::<Result<_, _>>()?,
                max_word_len: number(header(&cert, "max_word_len")?, "word length")?,
                seed: cert.seed.clone(),
                precision: 1,
                provider: header(&cert, "modulus")?.parse()?,
                alpha: parse_rational(header(&cert, "alpha")?)?,
                piece_budget: number(header(&cert, "budget-pieces")?, "piece budget")?,
                extract: Default::default(),
            };
            let seq = normal_sequence(&job)?;
            let observables = job
                .words()
                .into_iter()
                .map(|(b, w)| Observable::cylinder(b, w).map(|o| (o.clone(), o.lebesgue_mean())))
                .collect::<Result<Vec<_>, _>>()?;
            let map = PAMap::b_adic(job.bases[0])?;
            let plan = (job.bases.len() == 1).then_some(AuditPlan { map, observables });
            (seq, Arc::new(Lebesgue), plan)
        }
        "typical" => {
            let map = PAMap::parse(header(&cert, "map")?)?;
            let budget: usize = number(header(&cert, "budget-pieces")?, "piece budget")?;
            let measure = measure_by_name(header(&cert, "measure")?, &map, budget)?;
            let observables = cert
                .header
                .iter()
                .filter_map(|l| l.strip_prefix("# observable "))
                .map(parse_observable)
                .collect::<Result<Vec<_>, _>>()?;
            let seq = typical_sequence(
                &map,
                &observables,
                header(&cert, "modulus")?.parse()?,
                &parse_rational(header(&cert, "alpha")?)?,
                budget,
            )?;
            let observables = observables.into_iter().map(|o| (o.observable, o.mean)).collect();
            (seq, measure, Some(AuditPlan { map, observables }))
        }
        other => return Err(Error::Parse(format!("unknown certificate kind `{other}`")).into()),
    };
    let report = check_certificate(&cert, &seq, measure.as_ref())?;
    match report.final_set.hull() {
        Some(h) => println!(
            "OK: {} steps verified; final set has {} parts within [{}, {}]",
            report.steps,
            report.final_set.len(),
            fmt_rational(h.lo()),
            fmt_rational(h.hi())
        ),
        None => println!("OK: {} steps verified; final set is empty", report.steps),
    }
    audit_extraction(&report.final_set, plan.as_ref(), rng);
    Ok(())
}

/// Parses `mean=.. sup=.. ln2=..|- variance=..|- phi=<observable>`.
fn parse_observable(line: &str) -> Result<TypicalObservable, CliError> {
    let bad = || CliError::from(Error::Parse(format!("bad observable line `{line}`")));
    let (fields, phi) = line.split_once(" phi=").ok_or_else(bad)?;
    let mut values = fields.split_whitespace().map(|f| f.split_once('=').ok_or_else(bad));
    let mut field = |key: &str| -> Result<Option<Rational>, CliError> {
        let (k, v) = values.next().ok_or_else(bad)??;
        if k != key {
            return Err(bad());
        }
        Ok(if v == "-" { None } else { Some(parse_rational(v)?) })
    };
    let mean = field("mean")?.ok_or_else(bad)?;
    let sup = field("sup")?.ok_or_else(bad)?;
    let ln2 = field("ln2")?;
    let variance = field("variance")?;
    Ok(TypicalObservable {
        observable: Observable::parse(phi)?,
        mean,
        constants: ObservableConstants { sup, ln2, variance },
    })
}

/// A random rational in `set`, parts weighted by length.
fn sample(set: &IntervalUnion, rng: &mut ChaCha8Rng) -> Option<Rational> {
    let weights: Vec<f64> = set
        .parts()
        .iter()
        .map(|(a, b)| (b - a).to_f64().unwrap_or(0.0))
        .collect();
    let index = WeightedIndex::new(&weights).ok()?.sample(rng);
    let (a, b) = &set.parts()[index];
    let k = rng.gen_range(1..AUDIT_DENOMINATOR);
    Some(a + (b - a) * Rational::new(k.into(), AUDIT_DENOMINATOR.into()))
}

fn audit_extraction(set: &IntervalUnion, plan: Option<&AuditPlan>, rng: &mut ChaCha8Rng) {
    let points: Vec<Rational> = (0..AUDIT_SAMPLES).filter_map(|_| sample(set, rng)).collect();
    println!("audit: {} sampled points in the final set", points.len());
    let Some(plan) = plan else { return };
    for (obs, mean) in &plan.observables {
        let worst = points
            .iter()
            .map(|x| {
                (birkhoff_at(&plan.map, obs, AUDIT_HORIZON, x) - mean)
                    .to_f64()
                    .unwrap_or(f64::NAN)
                    .abs()
            })
            .fold(0.0, f64::max);
        println!(
            "audit: {obs}: max |f_{AUDIT_HORIZON} - {}| = {worst:.4}",
            fmt_rational(mean)
        );
    }
}

fn split_end(text: &str, what: &str) -> Result<(Vec<String>, Vec<String>, u64), CliError> {
    let mut header = Vec::new();
    let mut body = Vec::new();
    let mut end = None;
    for line in text.lines().skip(1).map(str::trim).filter(|l| !l.is_empty()) {
        if end.is_some() {
            return Err(Error::Parse(format!("content after the end record: `{line}`")).into());
        }
        if let Some(count) = line.strip_prefix(&format!("end {what}=")) {
            end = Some(number(count, "end count")?);
        } else if line.starts_with('#') {
            header.push(line.to_string());
        } else {
            body.push(line.to_string());
        }
    }
    let end = end.ok_or_else(|| Error::Parse("certificate is truncated (no end record)".into()))?;
    if end != body.len() as u64 {
        return Err(Error::Parse(format!("end record announces {end} records, found {}", body.len())).into());
    }
    Ok((header, body, end))
}

fn header_line<'a>(header: &'a [String], key: &str) -> Result<&'a str, CliError> {
    header
        .iter()
        .find_map(|l| l.strip_prefix('#')?.trim_start().strip_prefix(key)?.strip_prefix(' '))
        .map(str::trim)
        .ok_or_else(|| Error::Parse(format!("missing `# {key}` header line")).into())
}

fn verify_dense(text: &str, rng: &mut ChaCha8Rng) -> Result<(), CliError> {
    let (header, body, _) = split_end(text, "visits")?;
    let map = PAMap::parse(header_line(&header, "map")?)?;
    let seed = header_line(&header, "seed")?;
    let (c, r) = seed
        .split_once(' ')
        .ok_or_else(|| Error::Parse(format!("bad seed `{seed}`")))?;
    let seed = IdealBall::new(parse_rational(c)?, parse_rational(r.trim())?)?;
    let visits = body
        .iter()
        .map(|l| Visit::parse_line(l))
        .collect::<Result<Vec<_>, _>>()?;
    check_visits(&map, &seed, &visits)?;
    println!("OK: {} visits verified", visits.len());
    let mut hits = 0;
    for v in &visits {
        let set = IntervalUnion::from_intervals([(
            v.chosen.center() - v.chosen.radius(),
            v.chosen.center() + v.chosen.radius(),
        )]);
        if let Some(mut x) = sample(&set, rng) {
            for _ in 0..v.n {
                x = map.eval(&x);
            }
            hits += usize::from(IdealBall::from_index(v.ball_index).contains(&x));
        }
    }
    println!(
        "audit: {hits}/{} sampled points land in their target ball",
        visits.len()
    );
    Ok(())
}

fn verify_srb(text: &str) -> Result<(), CliError> {
    let (header, body, _) = split_end(text, "integrals")?;
    let map = PAMap::parse(header_line(&header, "map")?)?;
    let profile = DecayProfile::parse(header_line(&header, "profile")?)?;
    let eps = parse_rational(header_line(&header, "eps")?)?;
    let budget = number(header_line(&header, "budget-pieces")?, "piece budget")?;
    let cache = DensityCache::new(&map, budget);
    for (j, line) in body.iter().enumerate() {
        let psi = line
            .split_once(" psi=")
            .map(|(_, f)| f)
            .ok_or_else(|| Error::Parse(format!("bad integral line `{line}`")))?;
        let psi = TestFn::parse(psi)?;
        let n = profile.iterations(&psi, &eps)?;
        let value = cache.pushforward_integral(&psi, n)?;
        let expected = srb_record(&psi, n, &value);
        if *line != expected {
            return Err(Error::verification(
                format!("integral {j}"),
                format!("recorded `{line}`, recomputed `{expected}`"),
            )
            .into());
        }
    }
    println!("OK: {} integrals verified", body.len());
    Ok(())
}
