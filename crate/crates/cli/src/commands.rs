//! The extraction commands. Each writes deterministic files into the output
//! directory and a short summary on stdout.

use std::path::Path;
use std::sync::Arc;

use bcset::apps::{
    mu_typical_point, normal_point, srb_measure, DecayProfile, DensityCache, NormalJob, PointOutcome, TypicalObservable,
};
use bcset::bc::crafted::{eighths, rational_exclusion};
use bcset::bc::{extract_point, normal_form, BCSequence, ExtractConfig};
use bcset::ergodic::{default_alpha, lebesgue_constants, DenseConfig, DenseOrbit, ModulusProvider, Observable, PAMap};
use bcset::interval::ClosedInterval;
use bcset::measures::{ComputableMeasure, Lebesgue, TestFn};
use bcset::rational::fmt_rational;
use bcset::{Error, Rational};

use crate::config::{self, BudgetConfig, DenseJob, ExtractJob, NormalConfig, ObservableConfig, SrbJob, TypicalConfig};
use crate::error::CliError;

pub const DENSE_MAGIC: &str = "# bc-dense v1";
pub const SRB_MAGIC: &str = "# bc-srb v1";

pub const DEFAULT_STAGES: u64 = 256;
pub const DEFAULT_PIECES: usize = 100_000;

/// Command-line settings; each overrides the job file.
#[derive(Clone, Debug, Default)]
pub struct Flags {
    pub stages: Option<u64>,
    pub pieces: Option<usize>,
    pub steps: Option<u64>,
    pub modulus: Option<String>,
}

impl Flags {
    /// Flags first, then the job file, then the defaults.
    pub fn resolve(&self, job: &BudgetConfig) -> Result<Budgets, CliError> {
        let budgets = Budgets {
            stages: self.stages.or(job.stages).unwrap_or(DEFAULT_STAGES),
            pieces: self.pieces.or(job.pieces).unwrap_or(DEFAULT_PIECES),
            steps: self.steps.or(job.steps),
            modulus: self.modulus.clone(),
        };
        if budgets.stages == 0 || budgets.pieces == 0 {
            return Err(Error::Invalid("stage and piece budgets must be positive".into()).into());
        }
        Ok(budgets)
    }
}

/// Settings of one run.
#[derive(Clone, Debug)]
pub struct Budgets {
    pub stages: u64,
    pub pieces: usize,
    pub steps: Option<u64>,
    /// `--modulus`, which overrides the job file.
    pub modulus: Option<String>,
}

impl Budgets {
    pub fn extract_config(&self, header: Vec<String>) -> ExtractConfig {
        ExtractConfig {
            seed_stages: self.stages,
            search_budget: Some(self.stages),
            step_budget: self.steps,
            header,
        }
    }

    pub fn provider(&self, job: &Option<String>) -> Result<ModulusProvider, CliError> {
        let name = self.modulus.as_ref().or(job.as_ref());
        Ok(name.map_or(Ok(ModulusProvider::Independence), |n| n.parse())?)
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))
}

fn interval_line(interval: &ClosedInterval) -> String {
    format!("{} {}\n", fmt_rational(interval.lo()), fmt_rational(interval.hi()))
}

fn write_point(out: &Path, outcome: &PointOutcome) -> Result<(), CliError> {
    write_file(out, "certificate.txt", &outcome.extraction.certificate().to_text())?;
    write_file(out, "point.txt", &interval_line(&outcome.interval))
}

pub fn normal(path: &Path, flags: &Flags, out: &Path) -> Result<(), CliError> {
    let cfg: NormalConfig = config::load(path)?;
    let budgets = &flags.resolve(&cfg.budgets)?;
    let job = NormalJob {
        bases: cfg.bases,
        max_word_len: cfg.max_word_len,
        seed: cfg.seed.to_ball()?,
        precision: cfg.precision,
        provider: budgets.provider(&cfg.modulus)?,
        alpha: config::optional_rational(&cfg.alpha)?.unwrap_or_else(default_alpha),
        piece_budget: budgets.pieces,
        extract: budgets.extract_config(Vec::new()),
    };
    let outcome = normal_point(&job)?;
    write_point(out, &outcome)?;
    for (base, digits) in &outcome.digits {
        let text: String = digits
            .iter()
            .map(|&d| char::from_digit(d as u32, 36).expect("digit below 36"))
            .collect();
        write_file(out, &format!("digits-base-{base}.txt"), &format!("{text}\n"))?;
        println!("base {base}: 0.{text}");
    }
    println!("point in {}", interval_line(&outcome.interval).trim_end());
    Ok(())
}

/// The measure named by a `# measure` value: `lebesgue` or `srb:<profile>`.
pub fn measure_by_name(name: &str, map: &PAMap, piece_budget: usize) -> Result<Arc<dyn ComputableMeasure>, CliError> {
    match name.trim() {
        "lebesgue" => Ok(Arc::new(Lebesgue)),
        other => {
            let profile = other.strip_prefix("srb:").ok_or_else(|| {
                Error::Parse(format!(
                    "unknown measure `{other}` (expected lebesgue or srb:<profile>)"
                ))
            })?;
            Ok(Arc::new(srb_measure(
                map,
                &DecayProfile::parse(profile)?,
                piece_budget,
            )?))
        }
    }
}

/// Resolves an observable entry. Lebesgue jobs default the mean and the
/// constants derivable for `T_b`; other measures must supply the mean.
pub fn typical_observable(
    entry: &ObservableConfig,
    map: &PAMap,
    lebesgue: bool,
) -> Result<TypicalObservable, CliError> {
    let observable = Observable::parse(&entry.observable)?;
    let mut constants = if lebesgue {
        lebesgue_constants(map, &observable)
    } else {
        bcset::ergodic::ObservableConstants {
            sup: observable.sup_bound(),
            ln2: None,
            variance: None,
        }
    };
    if let Some(sup) = config::optional_rational(&entry.sup)? {
        constants.sup = sup;
    }
    if let Some(c) = config::optional_rational(&entry.ln2)? {
        constants.ln2 = Some(c);
    }
    if let Some(v) = config::optional_rational(&entry.variance)? {
        constants.variance = Some(v);
    }
    let mean = match config::optional_rational(&entry.mean)? {
        Some(m) => m,
        None if lebesgue => observable.lebesgue_mean(),
        None => {
            return Err(Error::Invalid(format!(
                "observable {observable} needs a mean under a non-Lebesgue measure"
            ))
            .into())
        }
    };
    Ok(TypicalObservable {
        observable,
        mean,
        constants,
    })
}

fn optional(x: &Option<Rational>) -> String {
    x.as_ref().map_or_else(|| "-".to_string(), fmt_rational)
}

/// `# observable` header line; `phi` comes last since it may hold spaces.
pub fn observable_line(o: &TypicalObservable) -> String {
    format!(
        "# observable mean={} sup={} ln2={} variance={} phi={}",
        fmt_rational(&o.mean),
        fmt_rational(&o.constants.sup),
        optional(&o.constants.ln2),
        optional(&o.constants.variance),
        o.observable
    )
}

pub fn typical(path: &Path, flags: &Flags, out: &Path) -> Result<(), CliError> {
    let cfg: TypicalConfig = config::load(path)?;
    let budgets = &flags.resolve(&cfg.budgets)?;
    let map = PAMap::parse(&cfg.map)?;
    let measure_name = cfg.measure.clone().unwrap_or_else(|| "lebesgue".to_string());
    let measure = measure_by_name(&measure_name, &map, budgets.pieces)?;
    let lebesgue = measure_name.trim() == "lebesgue";
    let observables = cfg
        .observables
        .iter()
        .map(|o| typical_observable(o, &map, lebesgue))
        .collect::<Result<Vec<_>, _>>()?;
    let provider = budgets.provider(&cfg.modulus)?;
    let alpha = config::optional_rational(&cfg.alpha)?.unwrap_or_else(default_alpha);
    let mut header = vec![
        "# kind typical".to_string(),
        format!("# map {map}"),
        format!("# measure {}", measure_name.trim()),
        format!("# modulus {provider}"),
        format!("# alpha {}", fmt_rational(&alpha)),
        format!("# budget-pieces {}", budgets.pieces),
    ];
    header.extend(observables.iter().map(observable_line));
    let outcome = mu_typical_point(
        &map,
        measure,
        &observables,
        provider,
        &alpha,
        &cfg.seed.to_ball()?,
        cfg.precision,
        budgets.pieces,
        budgets.extract_config(header),
    )?;
    write_point(out, &outcome)?;
    println!("point in {}", interval_line(&outcome.interval).trim_end());
    Ok(())
}

pub fn dense(path: &Path, flags: &Flags, out: &Path) -> Result<(), CliError> {
    let job: DenseJob = config::load(path)?;
    let budgets = &flags.resolve(&job.budgets)?;
    let map = PAMap::parse(&job.map)?;
    let mut dense = DenseConfig {
        cell_budget: budgets.pieces,
        ..DenseConfig::default()
    };
    if let Some(seed) = &job.seed {
        dense.seed = seed.to_ball()?;
    }
    if let Some(extra) = job.extra_iterates {
        dense.extra_iterates = extra;
    }
    let seed = dense.seed.clone();
    let orbit = DenseOrbit::new(&map, dense);
    let visits = orbit.visit_first(job.depth)?;
    let mut lines = vec![DENSE_MAGIC.to_string()];
    lines.extend(orbit.certificate(job.depth)?);
    lines.push(format!("end visits={}", visits.len()));
    write_file(out, "certificate.txt", &(lines.join("\n") + "\n"))?;
    let last = visits.last().map_or(seed, |v| v.next_ball());
    write_file(
        out,
        "point.txt",
        &format!("{} {}\n", fmt_rational(last.center()), fmt_rational(last.radius())),
    )?;
    println!("visited {} balls; point within {last}", visits.len());
    Ok(())
}

/// One `integral` record: the iterate count used and the exact value.
pub fn srb_record(psi: &TestFn, n: u64, value: &Rational) -> String {
    format!("integral n={n} value={} psi={psi}", fmt_rational(value))
}

pub fn srb(path: &Path, flags: &Flags, out: &Path) -> Result<(), CliError> {
    let job: SrbJob = config::load(path)?;
    let budgets = &flags.resolve(&job.budgets)?;
    let map = PAMap::parse(&job.map)?;
    let profile = job.decay()?;
    profile.validate()?;
    let eps = config::rational(&job.eps)?;
    let functions = job
        .functions
        .iter()
        .map(|f| TestFn::parse(f))
        .collect::<Result<Vec<_>, _>>()?;
    let cache = DensityCache::new(&map, budgets.pieces);
    let mut lines = vec![
        SRB_MAGIC.to_string(),
        format!("# map {map}"),
        format!("# profile {profile}"),
        format!("# eps {}", fmt_rational(&eps)),
        format!("# budget-pieces {}", budgets.pieces),
    ];
    for psi in &functions {
        let n = profile.iterations(psi, &eps)?;
        let value = cache.pushforward_integral(psi, n)?;
        println!("{psi}: {} (n = {n})", fmt_rational(&value));
        lines.push(srb_record(psi, n, &value));
    }
    lines.push(format!("end integrals={}", functions.len()));
    write_file(out, "certificate.txt", &(lines.join("\n") + "\n"))
}

/// The crafted sequences available to `extract`; `eighths` is put in normal form.
pub fn crafted_sequence(name: &str) -> Result<BCSequence, CliError> {
    match name.trim() {
        "rational-exclusion" => Ok(rational_exclusion()),
        "eighths" => Ok(normal_form(&eighths())),
        other => Err(Error::Parse(format!(
            "unknown sequence `{other}` (expected rational-exclusion or eighths)"
        ))
        .into()),
    }
}

pub fn extract(path: &Path, flags: &Flags, out: &Path) -> Result<(), CliError> {
    let job: ExtractJob = config::load(path)?;
    let budgets = &flags.resolve(&job.budgets)?;
    let seq = crafted_sequence(&job.sequence)?;
    let header = vec![
        "# kind extract".to_string(),
        format!("# sequence {}", job.sequence.trim()),
    ];
    let point = extract_point(
        &seq,
        Arc::new(Lebesgue),
        &job.seed.to_ball()?,
        budgets.extract_config(header),
    )?;
    let set = point.set(job.steps)?;
    let hull = set
        .hull()
        .ok_or_else(|| Error::Invalid(format!("nested set V_{} is empty", job.steps)))?;
    write_file(out, "certificate.txt", &point.certificate().to_text())?;
    write_file(out, "point.txt", &interval_line(&hull))?;
    println!("{} steps; point in {}", job.steps, interval_line(&hull).trim_end());
    Ok(())
}
