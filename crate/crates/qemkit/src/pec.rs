//! Probabilistic error cancellation for amplitude damping, used as a
//! baseline. The inverse of AD with error rate ε is written as a signed
//! combination of the identity, a Z conjugation and a reset to |0⟩.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Layer, LayerRole, Op, OpTag};
use crate::densim::{evolve, register_probabilities, reset_superop};
use crate::error::{QemError, Result};
use crate::exec::Exec;
use crate::linalg::SuperOp;
use crate::noise::{NoiseKind, NoiseModel};
use crate::observable::Observable;
use crate::qem::{mitigate, QemConfig};
use crate::shotsim::{domain, stream_rng, SampleSeries};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOp {
    pub epsilon: f64,
    /// (η_I, η_Z, η_reset).
    pub quasiprobs: [f64; 3],
    pub gamma_norm: f64,
}

/// Recovery for AD at angle ϑ_τ, ε = sin²(ϑ_τ/2).
pub fn recovery(theta_tau: f64) -> Result<RecoveryOp> {
    if !(0.0..=std::f64::consts::PI).contains(&theta_tau) {
        return Err(QemError::InvalidParameter(format!("ϑ_τ = {theta_tau} outside [0, π]")));
    }
    recovery_from_epsilon((theta_tau / 2.0).sin().powi(2))
}

pub fn recovery_from_epsilon(epsilon: f64) -> Result<RecoveryOp> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(QemError::InvalidParameter(format!("ε = {epsilon}: AD is not invertible for ε ≥ 1")));
    }
    let q = 1.0 - epsilon;
    let s = q.sqrt();
    let eta = [(1.0 + s) / (2.0 * q), (1.0 - s) / (2.0 * q), -epsilon / q];
    Ok(RecoveryOp { epsilon, quasiprobs: eta, gamma_norm: eta.iter().map(|e| e.abs()).sum() })
}

impl RecoveryOp {
    pub fn superop(&self) -> SuperOp {
        let id = SuperOp::identity();
        let z = SuperOp::from_kraus(&[OpTag::Z.matrix()]);
        let reset = reset_superop();
        let [a, b, c] = self.quasiprobs;
        SuperOp::linear_combination(&[(a, &id), (b, &z), (c, &reset)])
    }
}

fn ad_tau(model: &NoiseModel) -> Result<f64> {
    if model.coherence.is_some() || !matches!(model.kind, NoiseKind::Ad | NoiseKind::None) {
        return Err(QemError::Unsupported("PEC is implemented for amplitude damping only".into()));
    }
    Ok(if model.kind == NoiseKind::None { 0.0 } else { model.tau })
}

/// Recovery for every noisy layer (None for zero-duration layers).
fn layer_recoveries(c: &Circuit, tau: f64) -> Result<Vec<Option<RecoveryOp>>> {
    c.layers
        .iter()
        .map(|l| {
            if l.duration > 0.0 {
                recovery_from_epsilon(1.0 - (-tau * l.duration).exp()).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect()
}

fn readout(c: &Circuit, o: &Observable, model: &NoiseModel) -> Result<f64> {
    let mc = o.measurement_circuit(c, 0.0)?;
    let r = evolve(&mc, model, None)?;
    let od = Observable { x_qubits: Vec::new(), ..o.clone() };
    Ok(od.value(&register_probabilities(&r, mc.n_register, &[])))
}

/// Full quasiprobability sum: the recovery map follows every noisy layer on
/// every register qubit. Equals the ideal value for AD.
pub fn pec_exact_check(c: &Circuit, o: &Observable, model: &NoiseModel) -> Result<f64> {
    let tau = ad_tau(model)?;
    let recs = layer_recoveries(c, tau)?;
    let mut out = Circuit { layers: Vec::new(), ..c.clone() };
    for (l, rec) in c.layers.iter().zip(&recs) {
        out.layers.push(l.clone());
        if let Some(r) = rec {
            let map = r.superop();
            let ops = (0..c.n_register).map(|q| Op::Linear { map: map.clone(), qubit: q, label: "recovery".into() }).collect();
            out.layers.push(Layer { ops, duration: 0.0, role: LayerRole::Recovery });
        }
    }
    readout(&out, o, model)
}

/// Product of per-site γ-norms over noisy layers and register qubits.
pub fn total_gamma(c: &Circuit, model: &NoiseModel) -> Result<f64> {
    let tau = ad_tau(model)?;
    Ok(layer_recoveries(c, tau)?.iter().flatten().map(|r| r.gamma_norm.powi(c.n_register as i32)).product())
}

/// One sampled circuit: a basis operation per (noisy layer, register qubit)
/// drawn with probability |η|/γ. Returns the circuit and the product of signs.
fn sample_circuit<R: Rng>(c: &Circuit, recs: &[Option<RecoveryOp>], rng: &mut R) -> (Circuit, f64) {
    let mut out = Circuit { layers: Vec::new(), ..c.clone() };
    let mut sign = 1.0;
    for (l, rec) in c.layers.iter().zip(recs) {
        out.layers.push(l.clone());
        let Some(r) = rec else { continue };
        let mut ops = Vec::new();
        for q in 0..c.n_register {
            let u: f64 = rng.random::<f64>() * r.gamma_norm;
            let [a, b, _] = r.quasiprobs.map(f64::abs);
            let choice = if u < a {
                0
            } else if u < a + b {
                1
            } else {
                2
            };
            sign *= r.quasiprobs[choice].signum();
            match choice {
                1 => ops.push(Op::Gate(crate::circuit::Gate::one(crate::circuit::GateKind::Z, q))),
                2 => ops.push(Op::Reset(q)),
                _ => {}
            }
        }
        if !ops.is_empty() {
            out.layers.push(Layer { ops, duration: 0.0, role: LayerRole::Recovery });
        }
    }
    (out, sign)
}

/// M sampled circuits evaluated exactly under `model`. The series holds
/// γ_total·sign·value per draw; its mean is the PEC estimate.
pub fn pec_sample(c: &Circuit, o: &Observable, model: &NoiseModel, m: usize, seed: u64) -> Result<SampleSeries> {
    pec_sample_stream(c, o, model, m, seed, 0, Exec::Sequential)
}

fn pec_sample_stream(c: &Circuit, o: &Observable, model: &NoiseModel, m: usize, seed: u64, stream: u64, exec: Exec) -> Result<SampleSeries> {
    if m == 0 {
        return Err(QemError::InvalidParameter("PEC needs at least one sample".into()));
    }
    let tau = ad_tau(model)?;
    let recs = layer_recoveries(c, tau)?;
    let gamma = total_gamma(c, model)?;
    let values = exec.map_range(m, |i| -> Result<f64> {
        let mut rng = stream_rng(seed, stream, i as u64, domain::PEC);
        let (sc, sign) = sample_circuit(c, &recs, &mut rng);
        Ok(gamma * sign * readout(&sc, o, model)?)
    });
    Ok(SampleSeries::from_values(values.into_iter().collect::<Result<_>>()?))
}

/// N_samp independent PEC estimates, each the mean over M sampled circuits.
pub fn pec_estimates(c: &Circuit, o: &Observable, model: &NoiseModel, m: usize, n_samp: usize, seed: u64, exec: Exec) -> Result<Vec<f64>> {
    let per: Vec<Result<f64>> = exec.map_range(n_samp, |l| Ok(pec_sample_stream(c, o, model, m, seed, l as u64 + 1, Exec::Sequential)?.mean));
    per.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PecComparison {
    pub theta_tau: f64,
    pub ideal: f64,
    pub noisy: f64,
    pub qem: f64,
    pub pec: Vec<f64>,
    pub var_qem: f64,
    pub var_pec: f64,
    /// Fraction of PEC estimates whose error exceeds the QEM error.
    pub fraction_rt_above_one: f64,
}

/// First-order QEM (exact engine) against N_samp PEC estimates of M circuits.
pub fn compare_with_qem(c: &Circuit, o: &Observable, theta_tau: f64, m: usize, n_samp: usize, seed: u64, exec: Exec) -> Result<PecComparison> {
    let model = NoiseModel::ad_theta(theta_tau)?;
    let cfg = QemConfig { rotation: crate::densim::Rotation::Noiseless, exec, ..QemConfig::default() };
    let q = mitigate(c, o, &model, &cfg)?;
    let ideal = q.ideal.expect("ideal computed");
    let pec = pec_estimates(c, o, &model, m, n_samp, seed, exec)?;
    let err_qem = (q.mitigated - ideal).abs();
    let above = pec.iter().filter(|&&p| crate::analysis::rt_pec_qem(ideal, p, q.mitigated).is_above_one()).count();
    Ok(PecComparison {
        theta_tau,
        ideal,
        noisy: q.noisy,
        qem: q.mitigated,
        var_qem: err_qem * err_qem,
        var_pec: crate::analysis::mse(&pec, ideal)?,
        fraction_rt_above_one: above as f64 / pec.len() as f64,
        pec,
    })
}
