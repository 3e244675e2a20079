//! Experiment configuration files (TOML).
//!
//! ```toml
//! # Pauli products (`Z0`, `Z1X0`), projectors (`P110`), or `cost` for QAOA.
//! observables = ["P110", "P111"]
//!
//! [benchmark]
//! name = "qaa3"
//!
//! [noise]
//! kind = "ad"
//! theta_step = 0.05
//! theta_count = 11
//!
//! [engine]
//! kind = "shots"
//! n_qc = 1024
//! n_samp = 100
//! seed = 7
//!
//! [qem]
//! order = 1
//! mode = "ancilla"
//!
//! [pec]
//! m = 181
//! n_samp = 100
//! seed = 11
//! ```

use std::path::{Path, PathBuf};

use qemkit::algos::BenchmarkSpec;
use qemkit::calib::DeviceTable;
use qemkit::noise::tau_from_theta;
use qemkit::{InsertMode, NoiseModel, Observable, QemError, Rotation, ShotConfig};
use serde::Deserialize;

use crate::error::CliError;

/// Environment variable overriding `[output] dir`.
pub const OUT_DIR_ENV: &str = "QEMKIT_OUT_DIR";

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub benchmark: BenchmarkSpec,
    pub observables: Vec<String>,
    pub noise: NoiseSection,
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(default)]
    pub qem: QemSection,
    pub pec: Option<PecSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Ad,
    Gad,
    Pd,
    Adpd,
    Depolarizing,
    /// Per-qubit T1/T2 and gate durations from a device table.
    Device,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub kind: ChannelKind,
    /// Explicit ϑ_τ grid.
    pub theta_tau: Option<Vec<f64>>,
    /// Regular grid i·theta_step, i = 0..theta_count.
    pub theta_step: Option<f64>,
    pub theta_count: Option<usize>,
    #[serde(default)]
    pub n_bar: f64,
    /// τ_PD / τ for the composite channel.
    #[serde(default = "one")]
    pub pd_ratio: f64,
    /// Device table, relative to the config file.
    pub device: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    #[default]
    Exact,
    Shots,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    #[serde(default)]
    pub kind: EngineKind,
    #[serde(default = "default_n_qc")]
    pub n_qc: u64,
    #[serde(default = "default_n_samp")]
    pub n_samp: usize,
    pub seed: Option<u64>,
}

fn default_n_qc() -> u64 {
    1024
}

fn default_n_samp() -> usize {
    100
}

impl Default for EngineSection {
    fn default() -> Self {
        Self { kind: EngineKind::Exact, n_qc: default_n_qc(), n_samp: default_n_samp(), seed: None }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationKind {
    #[default]
    Noisy,
    Noiseless,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QemSection {
    #[serde(default = "default_order")]
    pub order: u8,
    #[serde(default)]
    pub mode: InsertMode,
    #[serde(default)]
    pub rotation: RotationKind,
}

fn default_order() -> u8 {
    1
}

impl Default for QemSection {
    fn default() -> Self {
        Self { order: 1, mode: InsertMode::Direct, rotation: RotationKind::Noisy }
    }
}

impl QemSection {
    pub fn rotation(&self) -> Rotation {
        match self.rotation {
            RotationKind::Noisy => Rotation::Noisy(1.0),
            RotationKind::Noiseless => Rotation::Noiseless,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PecSection {
    pub m: usize,
    #[serde(default = "default_n_samp")]
    pub n_samp: usize,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub engine: Option<EngineKind>,
    pub order: Option<u8>,
    pub mode: Option<InsertMode>,
    pub out: Option<PathBuf>,
}

/// One point of the noise grid.
#[derive(Clone, Debug)]
pub struct GridPoint {
    /// `None` for device-table noise.
    pub theta_tau: Option<f64>,
    pub model: NoiseModel,
}

/// A validated configuration with overrides applied.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
    pub device: Option<DeviceTable>,
}

/// Parses an observable name. `cost` is the MaxCut cost of the QAOA benchmark.
pub fn resolve_observable(name: &str, bench: &BenchmarkSpec) -> Result<Observable, QemError> {
    match (name.trim(), bench) {
        ("cost", BenchmarkSpec::QaoaSquare { .. }) => {
            let o = qemkit::algos::cost_observable(&qemkit::algos::MaxCutGraph::square())?;
            Ok(Observable { label: "cost".into(), ..o })
        }
        _ => Observable::parse(name, bench.n_qubits()),
    }
}

/// Converts a byte offset into 1-based (line, column).
pub fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig, CliError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        CliError::Config { origin: origin.to_string(), line, column, msg: e.message().to_string() }
    })
}

impl Experiment {
    pub fn load(path: &Path, ov: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let config = parse_config(&text, &path.display().to_string())?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_config(config, base_dir, ov)
    }

    pub fn from_config(mut config: ExperimentConfig, base_dir: PathBuf, ov: &Overrides) -> Result<Self, CliError> {
        if let Some(s) = ov.seed {
            config.engine.seed = Some(s);
            if let Some(p) = &mut config.pec {
                p.seed = Some(s);
            }
        }
        if let Some(e) = ov.engine {
            config.engine.kind = e;
        }
        if let Some(o) = ov.order {
            config.qem.order = o;
        }
        if let Some(m) = ov.mode {
            config.qem.mode = m;
        }
        if let Some(d) = &ov.out {
            config.output.dir = d.clone();
        } else if let Ok(d) = std::env::var(OUT_DIR_ENV) {
            config.output.dir = PathBuf::from(d);
        }
        let device = match (&config.noise.kind, &config.noise.device) {
            (ChannelKind::Device, Some(p)) => {
                let full = base_dir.join(p);
                let text = std::fs::read_to_string(&full).map_err(|e| CliError::Input(format!("{}: {e}", full.display())))?;
                Some(DeviceTable::from_toml_str(&text).map_err(|e| match e {
                    QemError::Parse { line, msg } => CliError::Config { origin: full.display().to_string(), line, column: 1, msg },
                    other => CliError::Invalid(other.to_string()),
                })?)
            }
            (ChannelKind::Device, None) => return Err(CliError::Invalid("noise kind `device` needs a `device` table path".into())),
            (_, Some(_)) => return Err(CliError::Invalid("`device` is only valid with noise kind `device`".into())),
            _ => None,
        };
        let exp = Self { config, base_dir, device };
        exp.validate()?;
        Ok(exp)
    }

    fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        if c.observables.is_empty() {
            return Err(CliError::Invalid("`observables` must list at least one observable".into()));
        }
        if c.engine.kind == EngineKind::Shots && c.engine.seed.is_none() {
            return Err(CliError::Invalid("the shot engine needs a seed (`[engine] seed` or --seed)".into()));
        }
        if let Some(p) = &c.pec {
            if p.seed.is_none() {
                return Err(CliError::Invalid("`[pec]` needs a seed (`seed` or --seed)".into()));
            }
        }
        if !(1..=2).contains(&c.qem.order) {
            return Err(CliError::Invalid(format!("QEM order must be 1 or 2, got {}", c.qem.order)));
        }
        let grid = self.thetas()?;
        if grid.is_empty() {
            return Err(CliError::Invalid("the ϑ_τ grid is empty".into()));
        }
        for o in &c.observables {
            resolve_observable(o, &c.benchmark).map_err(|e| CliError::Invalid(format!("observable `{o}`: {e}")))?;
        }
        self.grid()?;
        Ok(())
    }

    fn thetas(&self) -> Result<Vec<Option<f64>>, CliError> {
        let n = &self.config.noise;
        if n.kind == ChannelKind::Device {
            if n.theta_tau.is_some() || n.theta_step.is_some() || n.theta_count.is_some() {
                return Err(CliError::Invalid("device-table noise takes no ϑ_τ grid".into()));
            }
            return Ok(vec![None]);
        }
        match (&n.theta_tau, n.theta_step, n.theta_count) {
            (Some(list), None, None) => Ok(list.iter().map(|&t| Some(t)).collect()),
            (None, Some(step), Some(count)) => Ok((0..count).map(|i| Some(i as f64 * step)).collect()),
            _ => Err(CliError::Invalid("give either `theta_tau = [...]` or both `theta_step` and `theta_count`".into())),
        }
    }

    /// Noise models of the sweep, in config order.
    pub fn grid(&self) -> Result<Vec<GridPoint>, CliError> {
        let n = &self.config.noise;
        let inv = |e: QemError| CliError::Invalid(e.to_string());
        self.thetas()?
            .into_iter()
            .map(|theta| {
                let model = match (n.kind, theta) {
                    (ChannelKind::Device, _) => {
                        NoiseModel::inhomogeneous(self.device.as_ref().expect("loaded with config").coherence().map_err(inv)?)
                    }
                    (kind, Some(t)) => {
                        let tau = tau_from_theta(t).map_err(inv)?;
                        match kind {
                            ChannelKind::Ad => NoiseModel::ad(tau),
                            ChannelKind::Gad => NoiseModel::gad(tau, n.n_bar),
                            ChannelKind::Pd => NoiseModel::pd(tau),
                            ChannelKind::Adpd => NoiseModel::adpd(tau, n.n_bar, n.pd_ratio * tau),
                            ChannelKind::Depolarizing => NoiseModel::depolarizing(0.75 * (1.0 - (-4.0 * tau / 3.0).exp())),
                            ChannelKind::Device => unreachable!(),
                        }
                        .map_err(inv)?
                    }
                    (_, None) => unreachable!("only device noise has no angle"),
                };
                Ok(GridPoint { theta_tau: theta, model })
            })
            .collect()
    }

    pub fn shot_config(&self) -> Option<ShotConfig> {
        let e = &self.config.engine;
        (e.kind == EngineKind::Shots).then(|| ShotConfig { n_qc: e.n_qc, n_samp: e.n_samp, seed: e.seed.expect("validated") })
    }

    pub fn engine(&self) -> Result<qemkit::Engine, CliError> {
        match self.shot_config() {
            None => Ok(qemkit::Engine::Exact),
            Some(s) => Ok(qemkit::Engine::Shots(ShotConfig::new(s.n_qc, s.n_samp, s.seed).map_err(|e| CliError::Invalid(e.to_string()))?)),
        }
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.output.dir
    }
}
