//! Measurement routines addressed by name from recipe files. Each takes the
//! recipe's `[config]` table and returns named metrics.

use std::path::Path;

use qemkit::algos::{self, BenchmarkSpec};
use qemkit::analysis::{loglog_slope, Ratio};
use qemkit::calib::{fit_t1, fit_t2, synthetic_t1, synthetic_t2, t1_grid, t2_grid, tau_matrix, DeviceTable, T2Params};
use qemkit::densim::measured_expectation;
use qemkit::linalg::{ComplexMatrix, SuperOp};
use qemkit::noise::{ad_kraus, gad_kraus, pauli_kraus, pd_kraus, theta_from_tau, Coherence, Generator};
use qemkit::pec::pec_exact_check;
use qemkit::qem::{delta1_expectation, first_order_group, inhomogeneous_group, mitigate, Engine, QemConfig};
use qemkit::shotsim::{estimate_expectation, inverse_variance_fit};
use qemkit::{InsertMode, NoiseModel, Observable, Rotation, ShotConfig, C64};
use qemkit_cli::config::{resolve_observable, Experiment, ExperimentConfig, Overrides};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::{oracle, HarnessError, Metrics};

pub const PROBES: &[&str] = &[
    "ad_closed_form",
    "kraus_completeness",
    "group_sizes",
    "delta1_oracle",
    "residual_slopes",
    "pre1_rt",
    "qem_sweep",
    "shot_variance",
    "pec_exact",
    "pec_compare",
    "inhomogeneous_reduction",
    "calibration",
    "determinism",
];

pub fn run(probe: &str, config: &toml::Value) -> Result<Metrics, HarnessError> {
    match probe {
        "ad_closed_form" => ad_closed_form(parse(config)?),
        "kraus_completeness" => kraus_completeness(parse(config)?),
        "group_sizes" => group_sizes(parse(config)?),
        "delta1_oracle" => delta1_vs_oracle(parse(config)?),
        "residual_slopes" => residual_slopes(parse(config)?),
        "pre1_rt" => pre1_rt(parse(config)?),
        "qem_sweep" => qem_sweep(parse(config)?),
        "shot_variance" => shot_variance(parse(config)?),
        "pec_exact" => pec_exact(parse(config)?),
        "pec_compare" => pec_compare(parse(config)?),
        "inhomogeneous_reduction" => inhomogeneous_reduction(parse(config)?),
        "calibration" => calibration(parse(config)?),
        "determinism" => determinism(parse(config)?),
        // Returns its config's numeric entries; used to test the runner itself.
        "constant" => Ok(parse::<std::collections::BTreeMap<String, f64>>(config)?.into_iter().collect()),
        other => Err(HarnessError::UnknownProbe(other.into())),
    }
}

fn parse<T: DeserializeOwned>(v: &toml::Value) -> Result<T, HarnessError> {
    v.clone().try_into().map_err(|e: toml::de::Error| HarnessError::Config(e.message().to_string()))
}

fn rt_value(r: Ratio) -> f64 {
    match r {
        Ratio::Value(v) => v,
        Ratio::Saturated => f64::INFINITY,
    }
}

fn mode_list(modes: &[InsertMode]) -> Vec<InsertMode> {
    if modes.is_empty() {
        vec![InsertMode::Direct, InsertMode::Ancilla]
    } else {
        modes.to_vec()
    }
}

// ---------------------------------------------------------------- channels

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridCfg {
    points: usize,
    #[serde(default = "default_states")]
    states: usize,
}

fn default_states() -> usize {
    8
}

/// Deterministic spread of Bloch vectors, including pure and mixed states.
fn test_states(n: usize) -> Vec<ComplexMatrix> {
    (0..n)
        .map(|i| {
            let f = (i as f64 + 0.5) / n as f64;
            let z = 1.0 - 2.0 * f;
            let phi = 2.399963229728653 * i as f64;
            let r = if i % 2 == 0 { 1.0 } else { 0.6 };
            let s = (1.0 - z * z).sqrt();
            let (x, y, z) = (r * s * phi.cos(), r * s * phi.sin(), r * z);
            ComplexMatrix::complex(&[
                &[C64::new((1.0 + z) / 2.0, 0.0), C64::new(x / 2.0, -y / 2.0)],
                &[C64::new(x / 2.0, y / 2.0), C64::new((1.0 - z) / 2.0, 0.0)],
            ])
        })
        .collect()
}

fn ad_closed_form(cfg: GridCfg) -> Result<Metrics, HarnessError> {
    let states = test_states(cfg.states);
    let mut worst: f64 = 0.0;
    for i in 0..cfg.points {
        let theta = std::f64::consts::PI * i as f64 / (cfg.points - 1) as f64;
        let ch = NoiseModel::ad_theta(theta)?.layer_channel(0, 1.0).unwrap_or_else(SuperOp::identity);
        let (s, c) = ((theta / 2.0).sin(), (theta / 2.0).cos());
        for rho in &states {
            let want = ComplexMatrix::complex(&[
                &[rho.get(0, 0) + rho.get(1, 1) * (s * s), rho.get(0, 1) * c],
                &[rho.get(1, 0) * c, rho.get(1, 1) * (c * c)],
            ]);
            worst = worst.max(ch.apply_2x2(rho).max_abs_diff(&want));
        }
    }
    Ok(Metrics::from([("max_abs_error".into(), worst)]))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KrausCfg {
    points: usize,
    max_tau: f64,
    n_bar: Vec<f64>,
}

fn completeness(ks: &[ComplexMatrix]) -> f64 {
    let mut sum = ComplexMatrix::zeros(2).expect("2");
    for k in ks {
        sum.add_scaled(&k.adjoint().matmul(k).expect("2x2"), C64::new(1.0, 0.0)).expect("2x2");
    }
    sum.max_abs_diff(&ComplexMatrix::identity(2).expect("2"))
}

fn kraus_completeness(cfg: KrausCfg) -> Result<Metrics, HarnessError> {
    let mut m = Metrics::new();
    let mut put = |k: &str, v: f64| {
        let e = m.entry(k.to_string()).or_insert(0.0);
        *e = e.max(v);
    };
    for i in 0..cfg.points {
        let f = i as f64 / (cfg.points - 1) as f64;
        let tau = f * cfg.max_tau;
        put("ad", completeness(&ad_kraus(std::f64::consts::PI * f)?));
        for &nb in &cfg.n_bar {
            put("gad", completeness(&gad_kraus(tau, nb)));
        }
        put("pd", completeness(&pd_kraus(tau)));
        put("depolarizing", completeness(&pauli_kraus(0.75 * (1.0 - (-4.0 * tau / 3.0).exp()))));
    }
    let worst = m.values().copied().fold(0.0, f64::max);
    m.insert("max_deviation".into(), worst);
    Ok(m)
}

// ------------------------------------------------------------------ groups

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupSizeCfg {
    benchmarks: Vec<BenchmarkSpec>,
    #[serde(default)]
    mode: InsertMode,
}

/// `size.<label>` and `excess.<label>` = size − (3·d·N + 1).
fn group_sizes(cfg: GroupSizeCfg) -> Result<Metrics, HarnessError> {
    let mut m = Metrics::new();
    for b in &cfg.benchmarks {
        let c = algos::build(b)?;
        let g = first_order_group(&c, Generator::Ad, cfg.mode)?;
        let sites = c.layers.iter().filter(|l| l.duration > 0.0).count();
        let size = g.n_circuits() as f64;
        m.insert(format!("size.{}", b.label()), size);
        m.insert(format!("excess.{}", b.label()), size - (3 * sites * c.n_register + 1) as f64);
    }
    Ok(m)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Case {
    benchmark: BenchmarkSpec,
    observables: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OracleCfg {
    cases: Vec<Case>,
    #[serde(default)]
    modes: Vec<InsertMode>,
}

fn delta1_vs_oracle(cfg: OracleCfg) -> Result<Metrics, HarnessError> {
    let mut worst: f64 = 0.0;
    let mut count = 0.0;
    for case in &cfg.cases {
        let c = algos::build(&case.benchmark)?;
        for name in &case.observables {
            let o = resolve_observable(name, &case.benchmark)?;
            let mc = o.measurement_circuit(&c, 1.0)?;
            let od = Observable { x_qubits: Vec::new(), ..o.clone() };
            let want = oracle::delta1(&mc, Generator::Ad, &od)?;
            for &mode in &mode_list(&cfg.modes) {
                let g = first_order_group(&mc, Generator::Ad, mode)?;
                let got = delta1_expectation(&g, &od, &NoiseModel::none(), Engine::Exact)?;
                worst = worst.max((got - want).abs());
                count += 1.0;
            }
        }
    }
    Ok(Metrics::from([("max_abs_error".into(), worst), ("comparisons".into(), count)]))
}

// ----------------------------------------------------------------- scaling

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SlopeCfg {
    benchmark: BenchmarkSpec,
    observable: String,
    taus: Vec<f64>,
    #[serde(default)]
    modes: Vec<InsertMode>,
}

fn residual_slopes(cfg: SlopeCfg) -> Result<Metrics, HarnessError> {
    let c = algos::build(&cfg.benchmark)?;
    let o = resolve_observable(&cfg.observable, &cfg.benchmark)?;
    let mut m = Metrics::new();
    for &mode in &mode_list(&cfg.modes) {
        let mode_name = if mode == InsertMode::Direct { "direct" } else { "ancilla" };
        let mut unmit = Vec::new();
        let mut first = Vec::new();
        let mut second = Vec::new();
        for &t in &cfg.taus {
            let model = NoiseModel::ad(t)?;
            let e1 = mitigate(&c, &o, &model, &QemConfig { order: 1, mode, ..QemConfig::default() })?;
            let e2 = mitigate(&c, &o, &model, &QemConfig { order: 2, mode, ..QemConfig::default() })?;
            let ideal = e1.ideal.expect("ideal");
            unmit.push((e1.noisy - ideal).abs());
            first.push((e1.mitigated - ideal).abs());
            second.push((e2.mitigated - ideal).abs());
        }
        m.insert(format!("unmitigated.{mode_name}"), loglog_slope(&cfg.taus, &unmit)?);
        m.insert(format!("first_order.{mode_name}"), loglog_slope(&cfg.taus, &first)?);
        m.insert(format!("second_order.{mode_name}"), loglog_slope(&cfg.taus, &second)?);
    }
    Ok(m)
}

// ------------------------------------------------------------ RT sweeps

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Pre1Cfg {
    depths: Vec<usize>,
    observables: Vec<String>,
    theta_tau: Vec<f64>,
    trend_theta: f64,
}

/// `min_rt` over the grid, and `trend_violations`: adjacent depth pairs at
/// `trend_theta` where RT does not decrease.
fn pre1_rt(cfg: Pre1Cfg) -> Result<Metrics, HarnessError> {
    let mut m = Metrics::new();
    let mut min_rt = f64::INFINITY;
    let mut violations = 0.0;
    let qc = QemConfig::default();
    for name in &cfg.observables {
        let mut trend = Vec::new();
        for &d in &cfg.depths {
            let spec = BenchmarkSpec::Pre1 { depth: d };
            let c = algos::build(&spec)?;
            let o = resolve_observable(name, &spec)?;
            for &t in &cfg.theta_tau {
                let e = mitigate(&c, &o, &NoiseModel::ad_theta(t)?, &qc)?;
                let rt = rt_value(qemkit::analysis::rt_qem(e.ideal.expect("ideal"), e.noisy, e.mitigated));
                min_rt = min_rt.min(rt);
                m.insert(format!("rt.{name}.d{d}.{t}"), rt);
            }
            let e = mitigate(&c, &o, &NoiseModel::ad_theta(cfg.trend_theta)?, &qc)?;
            trend.push(rt_value(qemkit::analysis::rt_qem(e.ideal.expect("ideal"), e.noisy, e.mitigated)));
        }
        violations += trend.windows(2).filter(|w| w[1] >= w[0]).count() as f64;
    }
    m.insert("min_rt".into(), min_rt);
    m.insert("trend_violations".into(), violations);
    Ok(m)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Run {
    id: String,
    experiment: ExperimentConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepCfg {
    runs: Vec<Run>,
}

fn experiment(cfg: ExperimentConfig) -> Result<Experiment, HarnessError> {
    Ok(Experiment::from_config(cfg, Path::new(".").to_path_buf(), &Overrides::default())?)
}

/// Per run `id`: `ideal.<obs>` and `delta1.<obs>` at the first grid point,
/// `min_rt.<obs>` over points with ϑ_τ > 0, and `min_rt` over all of them.
fn qem_sweep(cfg: SweepCfg) -> Result<Metrics, HarnessError> {
    let mut m = Metrics::new();
    for run in cfg.runs {
        let exp = experiment(run.experiment)?;
        let (_, summary) = qemkit_cli::commands::qem_command(&exp)?;
        let mut all = f64::INFINITY;
        for p in &summary.points {
            let id = &run.id;
            m.entry(format!("{id}.ideal.{}", p.observable)).or_insert(p.ideal);
            m.entry(format!("{id}.delta1.{}", p.observable)).or_insert(p.delta1);
            if p.theta_tau.is_some_and(|t| t > 0.0) {
                let rt = rt_value(p.rt_qem);
                let e = m.entry(format!("{id}.min_rt.{}", p.observable)).or_insert(f64::INFINITY);
                *e = e.min(rt);
                all = all.min(rt);
            }
        }
        m.insert(format!("{}.min_rt", run.id), all);
    }
    Ok(m)
}

// ------------------------------------------------------------------- shots

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ShotCfg {
    benchmark: BenchmarkSpec,
    observable: String,
    theta_tau: f64,
    log2_n_qc: [u32; 2],
    n_samp: usize,
    seed: u64,
}

/// α of (σ²)⁻¹ = α·N_QC against 1/(p(1−p)) from the exact engine.
fn shot_variance(cfg: ShotCfg) -> Result<Metrics, HarnessError> {
    let c = algos::build(&cfg.benchmark)?;
    let o = resolve_observable(&cfg.observable, &cfg.benchmark)?;
    if o.needs_rotation() {
        return Err(HarnessError::Config("shot_variance needs a diagonal observable".into()));
    }
    let model = NoiseModel::ad_theta(cfg.theta_tau)?;
    let p = measured_expectation(&c, &model, &o, Rotation::Noiseless)?;
    let mut pts = Vec::new();
    for k in cfg.log2_n_qc[0]..=cfg.log2_n_qc[1] {
        let n = 1u64 << k;
        let s = estimate_expectation(&c, &o, &model, &ShotConfig::new(n, cfg.n_samp, cfg.seed)?, &[], k as u64)?;
        pts.push((n as f64, s.variance));
    }
    let alpha = inverse_variance_fit(&pts)?;
    let want = 1.0 / (p * (1.0 - p));
    Ok(Metrics::from([("alpha".into(), alpha), ("alpha_expected".into(), want), ("alpha_ratio".into(), alpha / want), ("p".into(), p)]))
}

// --------------------------------------------------------------------- PEC

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PecExactCfg {
    theta_tau: f64,
    cases: Vec<Case>,
}

fn pec_exact(cfg: PecExactCfg) -> Result<Metrics, HarnessError> {
    let model = NoiseModel::ad_theta(cfg.theta_tau)?;
    let mut worst: f64 = 0.0;
    for case in &cfg.cases {
        let c = algos::build(&case.benchmark)?;
        for name in &case.observables {
            let o = resolve_observable(name, &case.benchmark)?;
            let ideal = measured_expectation(&c, &NoiseModel::none(), &o, Rotation::Noiseless)?;
            worst = worst.max((pec_exact_check(&c, &o, &model)? - ideal).abs());
        }
    }
    Ok(Metrics::from([("max_abs_error".into(), worst)]))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PecCompareCfg {
    experiment: ExperimentConfig,
}

/// `max_var_margin` = max over the grid of σ²_QEM − σ²_PEC; `min_fraction`
/// = smallest share of PEC samples with RT_PEC/QEM > 1.
fn pec_compare(cfg: PecCompareCfg) -> Result<Metrics, HarnessError> {
    let exp = experiment(cfg.experiment)?;
    let (_, summary) = qemkit_cli::commands::pec_command(&exp)?;
    let mut m = Metrics::new();
    let mut margin = f64::NEG_INFINITY;
    let mut frac = f64::INFINITY;
    let mut failing = 0.0;
    for p in &summary.points {
        margin = margin.max(p.var_qem - p.var_pec);
        frac = frac.min(p.fraction_rt_above_one);
        if p.var_qem >= p.var_pec || p.fraction_rt_above_one <= 0.5 {
            failing += 1.0;
        }
        m.insert(format!("var_pec.{}.{}", p.observable, p.theta_tau), p.var_pec);
        m.insert(format!("fraction.{}.{}", p.observable, p.theta_tau), p.fraction_rt_above_one);
    }
    m.insert("max_var_margin".into(), margin);
    m.insert("min_fraction".into(), frac);
    m.insert("failing_points".into(), failing);
    Ok(m)
}

// ------------------------------------------------------------ calibration

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InhomCfg {
    benchmark: BenchmarkSpec,
    layer_duration: f64,
    t1: Vec<f64>,
}

/// With T2 = 2·T1 and equal layer durations, each inhomogeneous coefficient
/// must equal τ_j times the homogeneous AD one.
fn inhomogeneous_reduction(cfg: InhomCfg) -> Result<Metrics, HarnessError> {
    let c = algos::build(&cfg.benchmark)?;
    let mut timed = c.clone();
    for l in &mut timed.layers {
        if l.duration > 0.0 {
            l.duration = cfg.layer_duration;
        }
    }
    let t2: Vec<f64> = cfg.t1.iter().map(|t| 2.0 * t).collect();
    let inh = inhomogeneous_group(&timed, &Coherence::new(cfg.t1.clone(), t2)?, InsertMode::Direct)?;
    let hom = first_order_group(&c, Generator::Ad, InsertMode::Direct)?;
    let mut worst: f64 = 0.0;
    let mismatched = (inh.members.len() != hom.members.len()) as u8 as f64;
    for (a, b) in inh.members.iter().zip(&hom.members) {
        if a.label != b.label {
            return Err(HarnessError::Config(format!("member order differs: {} vs {}", a.label, b.label)));
        }
        let want = if b.label.is_empty() {
            let sites = c.layers.iter().filter(|l| l.duration > 0.0).count() as f64;
            -0.25 * sites * cfg.t1.iter().map(|t| cfg.layer_duration / t).sum::<f64>()
        } else {
            let q: usize = b.label.split(':').nth(1).and_then(|s| s.parse().ok()).expect("site label");
            cfg.layer_duration / cfg.t1[q] * b.coefficient
        };
        worst = worst.max((a.coefficient - want).abs());
    }
    Ok(Metrics::from([("max_abs_error".into(), worst), ("size_mismatch".into(), mismatched)]))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibCfg {
    t1: Vec<f64>,
    t2: Vec<f64>,
    /// Ramsey detuning of the main component, Hz.
    detuning: f64,
    noise_sd: f64,
    seeds: u64,
    weak_t1: f64,
    weak_duration: f64,
}

fn calibration(cfg: CalibCfg) -> Result<Metrics, HarnessError> {
    let mut m = Metrics::new();
    let mut worst = |k: &str, v: f64| {
        let e = m.entry(k.to_string()).or_insert(0.0);
        *e = f64::max(*e, v);
    };
    for &t1 in &cfg.t1 {
        worst("t1_exact_rel_error", (fit_t1(&synthetic_t1(t1, &t1_grid(), 0.0, 0)?)?.t1 / t1 - 1.0).abs());
        for s in 0..cfg.seeds {
            worst("t1_noisy_rel_error", (fit_t1(&synthetic_t1(t1, &t1_grid(), cfg.noise_sd, s)?)?.t1 / t1 - 1.0).abs());
        }
    }
    for &t2 in &cfg.t2 {
        let p = T2Params { t2, amplitudes: [0.35, 0.12], frequencies: [cfg.detuning, 2.3 * cfg.detuning], phases: [0.2, -1.1], offset: 0.5 };
        let fitted = |sd: f64, s: u64| -> Result<f64, HarnessError> {
            let f = fit_t2(&synthetic_t2(&p, &t2_grid(), sd, s)?)?;
            Ok(f.t2().map_or(f64::INFINITY, |x| (x / t2 - 1.0).abs()))
        };
        worst("t2_exact_rel_error", fitted(0.0, 0)?);
        for s in 0..cfg.seeds {
            worst("t2_noisy_rel_error", fitted(cfg.noise_sd, s)?);
        }
    }
    let table = format!(
        "[[qubits]]\nindex = 0\nt1 = {:e}\nt2 = {:e}\n[gate_durations]\nX = {:e}\n",
        cfg.weak_t1,
        2.0 * cfg.weak_t1,
        cfg.weak_duration
    );
    let t = DeviceTable::from_toml_str(&table)?;
    let c = t.assign_durations(&algos::pre1(1)?)?;
    m.insert("weak_theta_tau".into(), theta_from_tau(tau_matrix(&t, &c)?.ad[0][0]));
    Ok(m)
}

// ------------------------------------------------------------ determinism

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DeterminismCfg {
    repeats: usize,
    experiment: toml::Value,
}

/// Runs `qemkit sweep` on the experiment `repeats` times and counts output
/// files whose bytes differ from the first run.
fn determinism(cfg: DeterminismCfg) -> Result<Metrics, HarnessError> {
    use clap::Parser;
    let io = |e: std::io::Error| HarnessError::Io(e.to_string());
    let dir = tempfile::tempdir().map_err(io)?;
    let path = dir.path().join("experiment.toml");
    std::fs::write(&path, toml::to_string(&cfg.experiment).map_err(|e| HarnessError::Config(e.to_string()))?).map_err(io)?;
    let mut runs: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for r in 0..cfg.repeats.max(2) {
        let out = dir.path().join(format!("run{r}"));
        let cli = qemkit_cli::Cli::try_parse_from(["qemkit", "sweep", path.to_str().expect("utf-8 path"), "--out", out.to_str().expect("utf-8 path")])
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let files = qemkit_cli::run(&cli)?;
        let mut contents = Vec::new();
        for f in files {
            let name = f.file_name().expect("file").to_string_lossy().into_owned();
            contents.push((name, std::fs::read(&f).map_err(io)?));
        }
        runs.push(contents);
    }
    let differing = runs[1..].iter().map(|r| r.iter().zip(&runs[0]).filter(|(a, b)| a != b).count() + r.len().abs_diff(runs[0].len())).sum::<usize>();
    let bytes: usize = runs[0].iter().map(|(_, b)| b.len()).sum();
    Ok(Metrics::from([("differing_files".into(), differing as f64), ("files".into(), runs[0].len() as f64), ("bytes".into(), bytes as f64)]))
}
