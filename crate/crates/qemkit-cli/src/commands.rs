use std::path::PathBuf;

use qemkit::algos;
use qemkit::analysis::{rt_pec_qem, rt_qem, Ratio};
use qemkit::calib::{fit_t1, fit_t2, DecaySeries, T1Fit, T2Fit};
use qemkit::densim::measured_expectation;
use qemkit::noise::{Generator, NoiseKind};
use qemkit::pec::compare_with_qem;
use qemkit::qem::{self, first_order_group, generator_of, inhomogeneous_group, mitigate, second_order_group, QemConfig};
use qemkit::shotsim::estimate_expectation;
use qemkit::{Circuit, Exec, InsertMode, NoiseModel, Observable, Rotation};
use serde::Serialize;

use crate::config::{resolve_observable, ChannelKind, Experiment, GridPoint};
use crate::error::CliError;
use crate::output::*;

#[derive(Clone, Debug, Serialize)]
pub struct EngineInfo {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_qc: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samp: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct QemPoint {
    pub theta_tau: Option<f64>,
    pub observable: String,
    pub ideal: f64,
    pub noisy: f64,
    pub qem: f64,
    pub rt_qem: Ratio,
    /// `None` for device-table noise, where τ varies per qubit and layer.
    pub tau: Option<f64>,
    pub delta1: f64,
    pub delta2: Option<f64>,
    pub m_first_second: Option<f64>,
    pub group_size: usize,
    /// Standard errors of the sample means under the shot engine.
    pub noisy_std_error: Option<f64>,
    pub qem_std_error: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PecPoint {
    pub theta_tau: f64,
    pub observable: String,
    pub ideal: f64,
    pub noisy: f64,
    pub qem: f64,
    pub pec_mean: f64,
    pub var_qem: f64,
    pub var_pec: f64,
    pub fraction_rt_above_one: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimPoint {
    pub theta_tau: Option<f64>,
    pub observable: String,
    pub ideal: f64,
    pub noisy: f64,
    pub noisy_std_error: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary<P: Serialize> {
    pub schema_version: u32,
    pub command: &'static str,
    pub benchmark: String,
    pub engine: EngineInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<&'static str>,
    pub points: Vec<P>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub command: &'static str,
    pub benchmark: String,
    pub engine: EngineInfo,
    pub order: u8,
    pub mode: &'static str,
    pub qem: Vec<QemPoint>,
    pub pec: Vec<PecPoint>,
}

fn mode_name(m: InsertMode) -> &'static str {
    match m {
        InsertMode::Direct => "direct",
        InsertMode::Ancilla => "ancilla",
    }
}

fn std_error(v: &[f64]) -> f64 {
    qemkit::SampleSeries::from_values(v.to_vec()).std_error()
}

impl Experiment {
    /// Benchmark circuit; device-table noise assigns gate durations.
    pub fn circuit(&self) -> Result<Circuit, CliError> {
        let c = algos::build(&self.config.benchmark)?;
        match &self.device {
            Some(t) => Ok(t.assign_durations(&c)?),
            None => Ok(c),
        }
    }

    /// Rotation layer timing; with a device table a noisy rotation lasts one H gate.
    pub fn rotation(&self) -> Rotation {
        match (self.config.qem.rotation(), &self.device) {
            (Rotation::Noisy(_), Some(t)) => {
                let h = t.gate_durations.get("H").or_else(|| t.gate_durations.get("h")).copied().unwrap_or(0.0);
                if h > 0.0 {
                    Rotation::Noisy(h)
                } else {
                    Rotation::Noiseless
                }
            }
            (r, _) => r,
        }
    }

    pub fn observables(&self) -> Result<Vec<Observable>, CliError> {
        self.config.observables.iter().map(|o| Ok(resolve_observable(o, &self.config.benchmark)?)).collect()
    }

    fn engine_info(&self) -> EngineInfo {
        match self.shot_config() {
            None => EngineInfo { kind: "exact", n_qc: None, n_samp: None, seed: None },
            Some(s) => EngineInfo { kind: "shots", n_qc: Some(s.n_qc), n_samp: Some(s.n_samp), seed: Some(s.seed) },
        }
    }

    fn qem_config(&self) -> Result<QemConfig, CliError> {
        Ok(QemConfig {
            order: self.config.qem.order,
            mode: self.config.qem.mode,
            rotation: self.rotation(),
            engine: self.engine()?,
            exec: Exec::Parallel,
        })
    }
}

/// RT_QEM with the convention that noiseless points are saturated.
fn rt_at(theta_tau: Option<f64>, ideal: f64, noisy: f64, mitigated: f64) -> Ratio {
    if theta_tau == Some(0.0) {
        Ratio::Saturated
    } else {
        rt_qem(ideal, noisy, mitigated)
    }
}

fn ideal_of(c: &Circuit, o: &Observable, rot: Rotation) -> Result<f64, CliError> {
    Ok(measured_expectation(c, &NoiseModel::none(), o, rot)?)
}

pub fn simulate(exp: &Experiment) -> Result<(Table, Summary<SimPoint>), CliError> {
    let c = exp.circuit()?;
    let rot = exp.rotation();
    let label = exp.config.benchmark.label();
    let info = exp.engine_info();
    let mut table = Table::new(SIMULATE_COLUMNS);
    let mut points = Vec::new();
    for p in exp.grid()? {
        for o in exp.observables()? {
            let ideal = ideal_of(&c, &o, rot)?;
            let (noisy, samples) = match exp.shot_config() {
                None => (measured_expectation(&c, &p.model, &o, rot)?, None),
                Some(cfg) => {
                    let mc = o.measurement_circuit(&c, rot.duration())?;
                    let od = Observable { x_qubits: Vec::new(), ..o.clone() };
                    let s = estimate_expectation(&mc, &od, &p.model, &cfg, &[], 0)?;
                    (s.mean, Some(s.values))
                }
            };
            let mut row = |sample: String, v: f64| {
                table.push(vec![label.clone(), o.label.clone(), opt_float(p.theta_tau), info.kind.into(), sample, float(ideal), float(v)])
            };
            match &samples {
                None => row(String::new(), noisy),
                Some(vs) => vs.iter().enumerate().for_each(|(i, &v)| row(i.to_string(), v)),
            }
            points.push(SimPoint { theta_tau: p.theta_tau, observable: o.label.clone(), ideal, noisy, noisy_std_error: samples.as_deref().map(std_error) });
        }
    }
    Ok((table, Summary { schema_version: SCHEMA_VERSION, command: "simulate", benchmark: label, engine: info, order: None, mode: None, points }))
}

fn qem_rows(exp: &Experiment, c: &Circuit, grid: &[GridPoint]) -> Result<(Table, Vec<QemPoint>), CliError> {
    let cfg = exp.qem_config()?;
    let label = exp.config.benchmark.label();
    let engine = exp.engine_info().kind;
    let mode = mode_name(cfg.mode);
    let mut table = Table::new(QEM_COLUMNS);
    let mut points = Vec::new();
    for p in grid {
        for o in exp.observables()? {
            let e = mitigate(c, &o, &p.model, &cfg)?;
            let ideal = e.ideal.expect("ideal is always computed");
            let mut row = |sample: String, noisy: f64, mitigated: f64| {
                table.push(vec![
                    label.clone(),
                    o.label.clone(),
                    opt_float(p.theta_tau),
                    opt_float(p.theta_tau.map(|_| e.tau)),
                    cfg.order.to_string(),
                    mode.into(),
                    engine.into(),
                    sample,
                    float(ideal),
                    float(noisy),
                    float(mitigated),
                    ratio(rt_at(p.theta_tau, ideal, noisy, mitigated)),
                    float(e.delta1),
                    opt_float(e.delta2),
                    opt_float(e.m_first_second),
                    e.group_size.to_string(),
                ])
            };
            match (&e.noisy_samples, &e.samples) {
                (Some(ns), Some(ms)) => {
                    for (i, (&n, &m)) in ns.iter().zip(ms).enumerate() {
                        row(i.to_string(), n, m);
                    }
                }
                _ => row(String::new(), e.noisy, e.mitigated),
            }
            points.push(QemPoint {
                theta_tau: p.theta_tau,
                observable: o.label.clone(),
                ideal,
                noisy: e.noisy,
                qem: e.mitigated,
                rt_qem: rt_at(p.theta_tau, ideal, e.noisy, e.mitigated),
                tau: p.theta_tau.map(|_| e.tau),
                delta1: e.delta1,
                delta2: e.delta2,
                m_first_second: e.m_first_second,
                group_size: e.group_size,
                noisy_std_error: e.noisy_samples.as_deref().map(std_error),
                qem_std_error: e.samples.as_deref().map(std_error),
            });
        }
    }
    Ok((table, points))
}

pub fn qem_command(exp: &Experiment) -> Result<(Table, Summary<QemPoint>), CliError> {
    let c = exp.circuit()?;
    let (table, points) = qem_rows(exp, &c, &exp.grid()?)?;
    let s = Summary {
        schema_version: SCHEMA_VERSION,
        command: "qem",
        benchmark: exp.config.benchmark.label(),
        engine: exp.engine_info(),
        order: Some(exp.config.qem.order),
        mode: Some(mode_name(exp.config.qem.mode)),
        points,
    };
    Ok((table, s))
}

fn pec_rows(exp: &Experiment, c: &Circuit) -> Result<(Table, Vec<PecPoint>), CliError> {
    let pec = exp.config.pec.as_ref().ok_or_else(|| CliError::Invalid("pec-compare needs a `[pec]` section".into()))?;
    if exp.config.noise.kind != ChannelKind::Ad {
        return Err(CliError::Invalid("PEC comparison is available for amplitude damping only".into()));
    }
    let label = exp.config.benchmark.label();
    let mut table = Table::new(PEC_COLUMNS);
    let mut points = Vec::new();
    for p in exp.grid()? {
        let theta = p.theta_tau.expect("AD grid has angles");
        for o in exp.observables()? {
            let cmp = compare_with_qem(c, &o, theta, pec.m, pec.n_samp, pec.seed.expect("validated"), Exec::Parallel)?;
            for (i, &v) in cmp.pec.iter().enumerate() {
                table.push(vec![
                    label.clone(),
                    o.label.clone(),
                    float(theta),
                    i.to_string(),
                    float(cmp.ideal),
                    float(cmp.noisy),
                    float(cmp.qem),
                    float(v),
                    ratio(if theta == 0.0 { Ratio::Saturated } else { rt_pec_qem(cmp.ideal, v, cmp.qem) }),
                ]);
            }
            points.push(PecPoint {
                theta_tau: theta,
                observable: o.label.clone(),
                ideal: cmp.ideal,
                noisy: cmp.noisy,
                qem: cmp.qem,
                pec_mean: cmp.pec.iter().sum::<f64>() / cmp.pec.len() as f64,
                var_qem: cmp.var_qem,
                var_pec: cmp.var_pec,
                fraction_rt_above_one: cmp.fraction_rt_above_one,
            });
        }
    }
    Ok((table, points))
}

pub fn pec_command(exp: &Experiment) -> Result<(Table, Summary<PecPoint>), CliError> {
    let c = exp.circuit()?;
    let (table, points) = pec_rows(exp, &c)?;
    let s = Summary {
        schema_version: SCHEMA_VERSION,
        command: "pec-compare",
        benchmark: exp.config.benchmark.label(),
        engine: EngineInfo { kind: "exact", n_qc: None, n_samp: None, seed: None },
        order: Some(1),
        mode: Some("direct"),
        points,
    };
    Ok((table, s))
}

pub fn sweep(exp: &Experiment) -> Result<(Table, Option<Table>, SweepSummary), CliError> {
    let c = exp.circuit()?;
    let (qt, qp) = qem_rows(exp, &c, &exp.grid()?)?;
    let (pt, pp) = match exp.config.pec {
        Some(_) => {
            let (t, p) = pec_rows(exp, &c)?;
            (Some(t), p)
        }
        None => (None, Vec::new()),
    };
    let s = SweepSummary {
        schema_version: SCHEMA_VERSION,
        command: "sweep",
        benchmark: exp.config.benchmark.label(),
        engine: exp.engine_info(),
        order: exp.config.qem.order,
        mode: mode_name(exp.config.qem.mode),
        qem: qp,
        pec: pp,
    };
    Ok((qt, pt, s))
}

/// Text manifest of the group for `observable` at the first grid point.
pub fn manifest(exp: &Experiment, observable: Option<&str>) -> Result<String, CliError> {
    let c = exp.circuit()?;
    let name = observable.unwrap_or(&exp.config.observables[0]);
    let o = resolve_observable(name, &exp.config.benchmark)?;
    let base = qem::measured_circuit(&c, &o, exp.rotation())?;
    let point = exp.grid()?.remove(0);
    let mode = exp.config.qem.mode;
    let group = if let Some(coh) = &point.model.coherence {
        inhomogeneous_group(&base, coh, mode)?
    } else {
        let g = match generator_of(&point.model) {
            Some((g, _)) => g,
            None if point.model.kind == NoiseKind::Adpd => Generator::Gad { n_bar: point.model.n_bar },
            None => Generator::Ad,
        };
        match exp.config.qem.order {
            1 => first_order_group(&base, g, mode)?,
            _ => second_order_group(&base, g, mode)?,
        }
    };
    Ok(qem::manifest(&group)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum FitKind {
    T1,
    T2,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum FitReport {
    T1 { schema_version: u32, kind: &'static str, points: usize, fit: T1Fit },
    T2 { schema_version: u32, kind: &'static str, points: usize, fit: T2Fit },
}

/// Reads `time,value` rows (with header) and fits T1 or T2.
pub fn calib_fit(data: &PathBuf, kind: FitKind) -> Result<FitReport, CliError> {
    let mut rdr = csv::Reader::from_path(data).map_err(|e| CliError::Input(format!("{}: {e}", data.display())))?;
    let (mut t, mut v) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", data.display())))?;
        let field = |k: usize| -> Result<f64, CliError> {
            rec.get(k).and_then(|s| s.trim().parse().ok()).ok_or_else(|| CliError::Config {
                origin: data.display().to_string(),
                line,
                column: k + 1,
                msg: "expected a number".into(),
            })
        };
        t.push(field(0)?);
        v.push(field(1)?);
    }
    let series = DecaySeries::new(t, v)?;
    let points = series.times.len();
    Ok(match kind {
        FitKind::T1 => FitReport::T1 { schema_version: SCHEMA_VERSION, kind: "t1", points, fit: fit_t1(&series)? },
        FitKind::T2 => FitReport::T2 { schema_version: SCHEMA_VERSION, kind: "t2", points, fit: fit_t2(&series)? },
    })
}
