//! Acceptance recipes. A recipe is a TOML file naming a probe, the probe's
//! configuration and the assertions checked against the metrics it returns.
//!
//! ```toml
//! name = "qaa3-probabilities"
//! criterion = 7
//! summary = "ideal weights and RT at 0.2"
//! probe = "qem_sweep"
//!
//! [config]
//! # probe input
//!
//! [[assert]]
//! metric = "qaa3.ideal.P110"
//! comparator = "abs"
//! expected = 0.5
//! tolerance = 1e-12
//! provenance = "reference"
//! ```

pub mod oracle;
pub mod probes;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qemkit::Exec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("recipe file not found: {0}")]
    MissingRecipe(PathBuf),
    #[error("{path}: {msg}")]
    BadRecipe { path: PathBuf, msg: String },
    #[error("unknown probe `{0}`")]
    UnknownProbe(String),
    #[error("probe config: {0}")]
    Config(String),
    #[error(transparent)]
    Qem(#[from] qemkit::QemError),
    #[error(transparent)]
    Cli(#[from] qemkit_cli::error::CliError),
    #[error("{0}")]
    Io(String),
}

pub type Metrics = BTreeMap<String, f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparator {
    /// |measured − expected| ≤ tolerance
    Abs,
    /// |measured − expected| ≤ tolerance·|expected|
    Rel,
    /// measured > expected
    Gt,
    /// measured < expected
    Lt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    pub metric: String,
    pub comparator: Comparator,
    pub expected: f64,
    #[serde(default)]
    pub tolerance: f64,
    /// Where the expected value comes from, e.g. `analytic` or `reference`.
    pub provenance: String,
}

impl Assertion {
    pub fn holds(&self, measured: f64) -> bool {
        if !measured.is_finite() && !matches!(self.comparator, Comparator::Gt | Comparator::Lt) {
            return false;
        }
        match self.comparator {
            Comparator::Abs => (measured - self.expected).abs() <= self.tolerance,
            Comparator::Rel => (measured - self.expected).abs() <= self.tolerance * self.expected.abs(),
            Comparator::Gt => measured > self.expected,
            Comparator::Lt => measured < self.expected,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recipe {
    pub name: String,
    pub criterion: u32,
    #[serde(default)]
    pub summary: String,
    pub probe: String,
    #[serde(default = "empty_table")]
    pub config: toml::Value,
    #[serde(rename = "assert", default)]
    pub assertions: Vec<Assertion>,
}

fn empty_table() -> toml::Value {
    toml::Value::Table(Default::default())
}

impl Recipe {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::BadRecipe { path: path.to_path_buf(), msg: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        if !path.is_file() {
            return Err(HarnessError::MissingRecipe(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, path)
    }
}

/// All `*.toml` recipes in `dir`, sorted by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<Recipe>, HarnessError> {
    let entries = std::fs::read_dir(dir).map_err(|_| HarnessError::MissingRecipe(dir.to_path_buf()))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    paths.iter().map(|p| Recipe::load(p)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct AssertionResult {
    pub metric: String,
    pub comparator: Comparator,
    /// `None` when the probe did not produce the metric.
    pub measured: Option<f64>,
    pub expected: f64,
    pub tolerance: f64,
    pub provenance: String,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecipeResult {
    pub name: String,
    pub criterion: u32,
    pub summary: String,
    pub probe: String,
    pub passed: bool,
    pub error: Option<String>,
    pub seconds: f64,
    pub assertions: Vec<AssertionResult>,
}

impl RecipeResult {
    /// Failing assertions as `recipe/metric`.
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self.assertions.iter().filter(|a| !a.passed).map(|a| format!("{}/{}", self.name, a.metric)).collect();
        if self.error.is_some() && out.is_empty() {
            out.push(format!("{}/<probe>", self.name));
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub passed: bool,
    pub recipes: Vec<RecipeResult>,
    pub failures: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn run_recipe(r: &Recipe) -> RecipeResult {
    let start = Instant::now();
    let (metrics, error) = match probes::run(&r.probe, &r.config) {
        Ok(m) => (m, None),
        Err(e) => (Metrics::new(), Some(e.to_string())),
    };
    let assertions: Vec<AssertionResult> = r
        .assertions
        .iter()
        .map(|a| {
            let measured = metrics.get(&a.metric).copied();
            AssertionResult {
                metric: a.metric.clone(),
                comparator: a.comparator,
                measured,
                expected: a.expected,
                tolerance: a.tolerance,
                provenance: a.provenance.clone(),
                passed: measured.is_some_and(|m| a.holds(m)),
            }
        })
        .collect();
    RecipeResult {
        name: r.name.clone(),
        criterion: r.criterion,
        summary: r.summary.clone(),
        probe: r.probe.clone(),
        passed: error.is_none() && assertions.iter().all(|a| a.passed),
        error,
        seconds: start.elapsed().as_secs_f64(),
        assertions,
    }
}

/// Runs every recipe; recipes are independent, so they may run concurrently.
pub fn run_all(recipes: &[Recipe], exec: Exec) -> Report {
    let results = exec.map(recipes, run_recipe);
    let failures: Vec<String> = results.iter().flat_map(|r| r.failures()).collect();
    Report { passed: failures.is_empty(), recipes: results, failures }
}

/// Directory holding the shipped recipes.
pub fn default_recipe_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("recipes")
}
