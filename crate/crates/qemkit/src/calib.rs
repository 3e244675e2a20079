//! T1/T2 extraction from decay curves and per-(qubit, layer) noise strengths.
//!
//! Times are in seconds throughout. Fits run on times rescaled by the last
//! sample time so the optimizer sees O(1) parameters.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Op};
use crate::error::{QemError, Result};
use crate::noise::Coherence;
use crate::shotsim::{domain, stream_rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    pub times: Vec<f64>,
    /// ⟨P¹⟩ at each time.
    pub values: Vec<f64>,
}

impl DecaySeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(QemError::DimensionMismatch { expected: times.len(), found: values.len() });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(QemError::InvalidParameter("decay times must be strictly increasing".into()));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(QemError::InvalidParameter("decay series contains a non-finite value".into()));
        }
        Ok(Self { times, values })
    }

    fn scale(&self) -> f64 {
        self.times.last().copied().unwrap_or(1.0).abs().max(f64::MIN_POSITIVE)
    }
}

pub const TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 500;
pub const N_STARTS: usize = 16;

struct LmResult {
    p: DVector<f64>,
    cost: f64,
    converged: bool,
}

/// Levenberg–Marquardt with diagonal (Marquardt) damping. `lower` clamps
/// each parameter from below after every step.
fn levenberg_marquardt(
    p0: DVector<f64>,
    lower: &[f64],
    residual: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    jacobian: &dyn Fn(&DVector<f64>) -> DMatrix<f64>,
) -> LmResult {
    let clamp = |p: &mut DVector<f64>| {
        for (x, &lo) in p.iter_mut().zip(lower) {
            if *x < lo {
                *x = lo;
            }
        }
    };
    let mut p = p0;
    clamp(&mut p);
    let mut r = residual(&p);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..MAX_ITERATIONS {
        let j = jacobian(&p);
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * &r;
        let mut a = jtj.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
        }
        let Some(step) = a.lu().solve(&(-&g)) else {
            lambda *= 10.0;
            if lambda > 1e16 {
                return LmResult { p, cost, converged: true };
            }
            continue;
        };
        let mut trial = &p + &step;
        clamp(&mut trial);
        let rt = residual(&trial);
        let ct = rt.norm_squared();
        if ct.is_finite() && ct <= cost {
            let rel = (&trial - &p).norm() / (p.norm() + 1e-12);
            p = trial;
            r = rt;
            let improvement = cost - ct;
            cost = ct;
            lambda = (lambda / 3.0).max(1e-12);
            if rel < TOLERANCE || improvement <= 1e-15 * cost.max(1e-300) {
                return LmResult { p, cost, converged: true };
            }
        } else {
            lambda *= 4.0;
            if lambda > 1e16 {
                return LmResult { p, cost, converged: true };
            }
        }
    }
    LmResult { p, cost, converged: false }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct T1Fit {
    pub t1: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

/// Least-squares fit of ⟨P¹⟩(t) = exp(−t/T1).
pub fn fit_t1(series: &DecaySeries) -> Result<T1Fit> {
    if series.times.len() < 5 {
        return Err(QemError::InvalidParameter("T1 fit needs at least 5 points".into()));
    }
    let s = series.scale();
    let t: Vec<f64> = series.times.iter().map(|x| x / s).collect();
    let y = &series.values;
    // Log-linear start on the positive samples.
    let pts: Vec<(f64, f64)> = t.iter().zip(y).filter(|(_, &v)| v > 1e-6).map(|(&a, &v)| (a, v.ln())).collect();
    let k0 = if pts.len() >= 2 {
        let sxy: f64 = pts.iter().map(|(a, l)| a * l).sum();
        let sxx: f64 = pts.iter().map(|(a, _)| a * a).sum();
        (-sxy / sxx).max(1e-3)
    } else {
        1.0
    };
    let res = |p: &DVector<f64>| DVector::from_iterator(t.len(), t.iter().zip(y).map(|(&a, &v)| (-p[0] * a).exp() - v));
    let jac = |p: &DVector<f64>| DMatrix::from_iterator(t.len(), 1, t.iter().map(|&a| -a * (-p[0] * a).exp()));
    let fit = levenberg_marquardt(DVector::from_element(1, k0), &[0.0], &res, &jac);
    if !fit.converged {
        return Err(QemError::FitFailure(format!("T1 fit did not converge in {MAX_ITERATIONS} iterations")));
    }
    let k = fit.p[0];
    if !(k > 1e-9) {
        return Err(QemError::FitFailure("no decay: T1 is unbounded".into()));
    }
    Ok(T1Fit { t1: s / k, residual: (fit.cost / t.len() as f64).sqrt() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct T2Params {
    pub t2: f64,
    pub amplitudes: [f64; 2],
    pub frequencies: [f64; 2],
    pub phases: [f64; 2],
    pub offset: f64,
}

impl T2Params {
    pub fn eval(&self, t: f64) -> f64 {
        let osc: f64 = (0..2).map(|i| self.amplitudes[i] * (2.0 * PI * self.frequencies[i] * t + self.phases[i]).cos()).sum();
        (-t / self.t2).exp() * osc + self.offset
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct T2Fit {
    /// `None` when the data carry no oscillation; only the offset is fitted.
    pub params: Option<T2Params>,
    pub offset: f64,
    pub residual: f64,
    pub degenerate: bool,
}

impl T2Fit {
    pub fn t2(&self) -> Option<f64> {
        self.params.map(|p| p.t2)
    }
}

/// Parameters on the rescaled axis: [k, f1, f2, c1, s1, c2, s2, b] with
/// model e^{−kt}(c1 cos 2πf1t − s1 sin 2πf1t + c2 cos 2πf2t − s2 sin 2πf2t) + b.
fn t2_model(p: &DVector<f64>, t: f64) -> (f64, [f64; 8]) {
    let e = (-p[0] * t).exp();
    let (w1, w2) = (2.0 * PI * p[1] * t, 2.0 * PI * p[2] * t);
    let (c1, s1, c2, s2) = (w1.cos(), w1.sin(), w2.cos(), w2.sin());
    let osc = p[3] * c1 - p[4] * s1 + p[5] * c2 - p[6] * s2;
    let d1 = -2.0 * PI * t * (p[3] * s1 + p[4] * c1);
    let d2 = -2.0 * PI * t * (p[5] * s2 + p[6] * c2);
    (e * osc + p[7], [-t * e * osc, e * d1, e * d2, e * c1, -e * s1, e * c2, -e * s2, 1.0])
}

/// Linear coefficients (c1, s1, c2, s2, b) for fixed k, f1, f2, and the
/// resulting residual sum of squares.
fn linear_coefficients(t: &[f64], y: &[f64], k: f64, f1: f64, f2: f64) -> Option<([f64; 5], f64)> {
    let a = DMatrix::from_fn(t.len(), 5, |r, c| {
        let e = (-k * t[r]).exp();
        match c {
            0 => e * (2.0 * PI * f1 * t[r]).cos(),
            1 => -e * (2.0 * PI * f1 * t[r]).sin(),
            2 => e * (2.0 * PI * f2 * t[r]).cos(),
            3 => -e * (2.0 * PI * f2 * t[r]).sin(),
            _ => 1.0,
        }
    });
    let yv = DVector::from_column_slice(y);
    let x = a.clone().svd(true, true).solve(&yv, 1e-12).ok()?;
    let rss = (&a * &x - &yv).norm_squared();
    Some(([x[0], x[1], x[2], x[3], x[4]], rss))
}

/// Frequencies (rescaled) of the largest local maxima of the periodogram.
fn spectral_peaks(t: &[f64], y: &[f64], count: usize) -> Vec<f64> {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let dt_min = t.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let nyquist = 0.5 / dt_min;
    let span = t.last().expect("nonempty") - t[0];
    let df = 0.25 / span;
    let n = ((nyquist / df) as usize).clamp(8, 20_000);
    let power: Vec<f64> = (1..=n)
        .map(|i| {
            let f = i as f64 * df;
            let (mut c, mut s) = (0.0, 0.0);
            for (&ti, &yi) in t.iter().zip(y) {
                let w = 2.0 * PI * f * ti;
                c += (yi - mean) * w.cos();
                s += (yi - mean) * w.sin();
            }
            c * c + s * s
        })
        .collect();
    let mut peaks: Vec<(f64, f64)> = (1..power.len() - 1)
        .filter(|&i| power[i] >= power[i - 1] && power[i] >= power[i + 1])
        .map(|i| (power[i], (i + 1) as f64 * df))
        .collect();
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0));
    peaks.into_iter().take(count).map(|(_, f)| f).collect()
}

/// Damped two-cosine fit f(t) = e^{−t/T2}[a₁cos(2πf₁t+φ₁) + a₂cos(2πf₂t+φ₂)] + b,
/// multi-started from frequency pairs taken from a periodogram scan.
pub fn fit_t2(series: &DecaySeries) -> Result<T2Fit> {
    let n = series.times.len();
    if n < 20 {
        return Err(QemError::InvalidParameter("T2 fit needs at least 20 points".into()));
    }
    let s = series.scale();
    let t: Vec<f64> = series.times.iter().map(|x| x / s).collect();
    let y = &series.values;
    let mean = y.iter().sum::<f64>() / n as f64;
    let spread = y.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if spread <= 1e-9 * mean.abs().max(1.0) {
        let rms = (y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
        return Ok(T2Fit { params: None, offset: mean, residual: rms, degenerate: true });
    }
    let peaks = spectral_peaks(&t, y, 6);
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for i in 0..peaks.len() {
        for j in i + 1..peaks.len() {
            pairs.push((peaks[i], peaks[j]));
        }
    }
    for &f in &peaks {
        pairs.push((f, f * 1.05));
    }
    pairs.truncate(N_STARTS);
    if pairs.is_empty() {
        return Err(QemError::FitFailure("no oscillation found in the T2 series".into()));
    }
    let res = |p: &DVector<f64>| DVector::from_iterator(n, t.iter().zip(y).map(|(&ti, &yi)| t2_model(p, ti).0 - yi));
    let jac = |p: &DVector<f64>| {
        let mut j = DMatrix::zeros(n, 8);
        for (r, &ti) in t.iter().enumerate() {
            let (_, g) = t2_model(p, ti);
            for (c, v) in g.iter().enumerate() {
                j[(r, c)] = *v;
            }
        }
        j
    };
    let lower = [1e-6, 0.0, 0.0, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    let mut best: Option<LmResult> = None;
    for (f1, f2) in pairs {
        // Pick the starting decay rate by variable projection on a small grid.
        let start = [0.1, 0.3, 1.0, 3.0, 10.0]
            .iter()
            .filter_map(|&k| linear_coefficients(&t, y, k, f1, f2).map(|(x, rss)| (k, x, rss)))
            .min_by(|a, b| a.2.total_cmp(&b.2));
        let Some((k, x, _)) = start else { continue };
        let p0 = DVector::from_vec(vec![k, f1, f2, x[0], x[1], x[2], x[3], x[4]]);
        let fit = levenberg_marquardt(p0, &lower, &res, &jac);
        if best.as_ref().is_none_or(|b| fit.cost < b.cost) {
            best = Some(fit);
        }
    }
    let fit = best.ok_or_else(|| QemError::FitFailure("every T2 start failed".into()))?;
    if !fit.converged {
        return Err(QemError::FitFailure(format!("T2 fit did not converge in {MAX_ITERATIONS} iterations")));
    }
    let p = &fit.p;
    let mut comps = [(p[1], p[3], p[4]), (p[2], p[5], p[6])];
    comps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let amp = |c: f64, s: f64| (c * c + s * s).sqrt();
    let params = T2Params {
        t2: s / p[0],
        amplitudes: [amp(comps[0].1, comps[0].2), amp(comps[1].1, comps[1].2)],
        frequencies: [comps[0].0 / s, comps[1].0 / s],
        phases: [comps[0].2.atan2(comps[0].1), comps[1].2.atan2(comps[1].1)],
        offset: p[7],
    };
    Ok(T2Fit { params: Some(params), offset: p[7], residual: (fit.cost / n as f64).sqrt(), degenerate: false })
}

/// Relaxation sampling grid: t_a = 2a µs, a = 1..=50.
pub fn t1_grid() -> Vec<f64> {
    (1..=50).map(|a| 2e-6 * a as f64).collect()
}

/// Ramsey sampling grid: t_a = 16a/45 µs, a = 1..=300.
pub fn t2_grid() -> Vec<f64> {
    (1..=300).map(|a| 16e-6 * a as f64 / 45.0).collect()
}

fn add_noise(values: &mut [f64], sd: f64, seed: u64) -> Result<()> {
    if sd > 0.0 {
        let normal = Normal::new(0.0, sd).map_err(|e| QemError::InvalidParameter(e.to_string()))?;
        let mut rng = stream_rng(seed, 0, 0, domain::NOISE);
        for v in values {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(())
}

/// exp(−t/T1) on `times`, plus Gaussian noise of standard deviation `sd`.
pub fn synthetic_t1(t1: f64, times: &[f64], sd: f64, seed: u64) -> Result<DecaySeries> {
    let mut v: Vec<f64> = times.iter().map(|t| (-t / t1).exp()).collect();
    add_noise(&mut v, sd, seed)?;
    DecaySeries::new(times.to_vec(), v)
}

pub fn synthetic_t2(p: &T2Params, times: &[f64], sd: f64, seed: u64) -> Result<DecaySeries> {
    let mut v: Vec<f64> = times.iter().map(|&t| p.eval(t)).collect();
    add_noise(&mut v, sd, seed)?;
    DecaySeries::new(times.to_vec(), v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitEntry {
    pub index: usize,
    pub t1: f64,
    pub t2: f64,
    #[serde(default)]
    pub frequency: Option<f64>,
}

/// Coherence times and gate durations (seconds) of a device.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceTable {
    pub qubits: Vec<QubitEntry>,
    /// Gate name (as printed in the circuit text form) to duration.
    pub gate_durations: BTreeMap<String, f64>,
}

impl DeviceTable {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let t: Self = toml::from_str(s).map_err(|e| {
            let line = e.span().map(|sp| s[..sp.start].lines().count().max(1)).unwrap_or(1);
            QemError::Parse { line, msg: e.message().to_string() }
        })?;
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, q) in self.qubits.iter().enumerate() {
            if q.index != i {
                return Err(QemError::InvalidParameter(format!("qubit entries must be listed in order; found index {} at position {i}", q.index)));
            }
            if !(q.t1 > 0.0) || !(q.t2 > 0.0) {
                return Err(QemError::InvalidParameter(format!("qubit {i}: T1 and T2 must be positive")));
            }
        }
        if let Some((g, d)) = self.gate_durations.iter().find(|(_, d)| !(**d >= 0.0)) {
            return Err(QemError::InvalidParameter(format!("gate {g}: negative duration {d}")));
        }
        Ok(())
    }

    pub fn coherence(&self) -> Result<Coherence> {
        Coherence::new(self.qubits.iter().map(|q| q.t1).collect(), self.qubits.iter().map(|q| q.t2).collect())
    }

    /// Copy of `c` whose layer durations are the longest gate in each layer.
    pub fn assign_durations(&self, c: &Circuit) -> Result<Circuit> {
        let mut out = c.clone();
        for l in &mut out.layers {
            let mut d: f64 = 0.0;
            for op in &l.ops {
                if let Op::Gate(g) = op {
                    let name = g.kind.name();
                    let dt = self
                        .gate_durations
                        .get(name)
                        .or_else(|| self.gate_durations.get(&name.to_ascii_lowercase()))
                        .ok_or_else(|| QemError::InvalidParameter(format!("no duration for gate {name}")))?;
                    d = d.max(*dt);
                }
            }
            l.duration = d;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauMatrix {
    /// τ^AD_jk = Δt_k/T1_j, indexed [qubit][layer].
    pub ad: Vec<Vec<f64>>,
    /// Δt_k/(2T2_j), indexed [qubit][layer].
    pub dephasing: Vec<Vec<f64>>,
}

pub fn tau_matrix(table: &DeviceTable, c: &Circuit) -> Result<TauMatrix> {
    if table.qubits.len() < c.n_register {
        return Err(QemError::InvalidParameter(format!(
            "device table lists {} qubits, circuit needs {}",
            table.qubits.len(),
            c.n_register
        )));
    }
    let per = |f: &dyn Fn(&QubitEntry, f64) -> f64| -> Vec<Vec<f64>> {
        table.qubits[..c.n_register].iter().map(|q| c.layers.iter().map(|l| if l.duration > 0.0 { f(q, l.duration) } else { 0.0 }).collect()).collect()
    };
    Ok(TauMatrix { ad: per(&|q, dt| dt / q.t1), dephasing: per(&|q, dt| dt / (2.0 * q.t2)) })
}
