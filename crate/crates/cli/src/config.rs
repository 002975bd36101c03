//! JSON job files. Rationals are strings such as `"3/8"`.

use std::path::Path;

use bcset::apps::DecayProfile;
use bcset::cms::IdealBall;
use bcset::{parse_rational, Rational};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::CliError;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn rational(text: &str) -> Result<Rational, CliError> {
    Ok(parse_rational(text)?)
}

pub fn optional_rational(text: &Option<String>) -> Result<Option<Rational>, CliError> {
    text.as_deref().map(rational).transpose()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallConfig {
    pub center: String,
    pub radius: String,
}

impl BallConfig {
    pub fn to_ball(&self) -> Result<IdealBall, CliError> {
        Ok(IdealBall::new(rational(&self.center)?, rational(&self.radius)?)?)
    }
}

/// Optional budgets in a job file; command-line flags take precedence.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    #[serde(default)]
    pub stages: Option<u64>,
    #[serde(default)]
    pub pieces: Option<usize>,
    #[serde(default)]
    pub steps: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalConfig {
    pub bases: Vec<u64>,
    pub max_word_len: u32,
    pub seed: BallConfig,
    pub precision: u32,
    #[serde(default)]
    pub modulus: Option<String>,
    #[serde(default)]
    pub alpha: Option<String>,
    #[serde(default)]
    pub budgets: BudgetConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    pub observable: String,
    /// Mean under the measure; defaults to the Lebesgue mean.
    #[serde(default)]
    pub mean: Option<String>,
    #[serde(default)]
    pub sup: Option<String>,
    #[serde(default)]
    pub ln2: Option<String>,
    #[serde(default)]
    pub variance: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypicalConfig {
    pub map: String,
    /// `lebesgue` (default) or `srb:<profile>`.
    #[serde(default)]
    pub measure: Option<String>,
    pub observables: Vec<ObservableConfig>,
    pub seed: BallConfig,
    pub precision: u32,
    #[serde(default)]
    pub modulus: Option<String>,
    #[serde(default)]
    pub alpha: Option<String>,
    #[serde(default)]
    pub budgets: BudgetConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseJob {
    pub map: String,
    pub depth: u64,
    #[serde(default)]
    pub seed: Option<BallConfig>,
    #[serde(default)]
    pub extra_iterates: Option<u64>,
    #[serde(default)]
    pub budgets: BudgetConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrbJob {
    pub map: String,
    pub profile: String,
    pub functions: Vec<String>,
    pub eps: String,
    #[serde(default)]
    pub budgets: BudgetConfig,
}

impl SrbJob {
    pub fn decay(&self) -> Result<DecayProfile, CliError> {
        Ok(DecayProfile::parse(&self.profile)?)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractJob {
    /// `rational-exclusion` or `eighths`.
    pub sequence: String,
    pub seed: BallConfig,
    pub steps: u64,
    #[serde(default)]
    pub budgets: BudgetConfig,
}
