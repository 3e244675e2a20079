//! Exact density-matrix evolution of layered circuits under a noise model.
//!
//! Each layer applies its operations and then, if its duration is nonzero, the
//! noise channel on every qubit (ancillas included).

use crate::circuit::{Circuit, Op, PostSelect};
use crate::error::{QemError, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix, SuperOp};
use crate::noise::NoiseModel;
use crate::observable::Observable;

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionResult {
    pub rho: DensityMatrix,
    /// Trace of the (possibly post-selected) state.
    pub branch_weight: f64,
}

pub fn reset_superop() -> SuperOp {
    SuperOp::from_kraus(&[
        ComplexMatrix::real(&[&[1.0, 0.0], &[0.0, 0.0]]),
        ComplexMatrix::real(&[&[0.0, 1.0], &[0.0, 0.0]]),
    ])
}

struct ChannelCache<'a> {
    model: &'a NoiseModel,
    n_qubits: usize,
    entries: Vec<(u64, Vec<Option<SuperOp>>)>,
}

impl<'a> ChannelCache<'a> {
    fn get(&mut self, duration: f64) -> &[Option<SuperOp>] {
        let key = duration.to_bits();
        if let Some(pos) = self.entries.iter().position(|(k, _)| *k == key) {
            return &self.entries[pos].1;
        }
        let chans = (0..self.n_qubits).map(|q| self.model.layer_channel(q, duration)).collect();
        self.entries.push((key, chans));
        &self.entries.last().expect("just pushed").1
    }
}

fn apply_op(rho: &mut DensityMatrix, op: &Op) -> Result<()> {
    match op {
        Op::Gate(g) => rho.apply_local(&g.matrix(), &g.targets),
        Op::Apply { tag, qubit } => rho.apply_local(&tag.matrix(), &[*qubit]),
        Op::Reset(q) => rho.apply_superop(&reset_superop(), *q),
        Op::Linear { map, qubit, .. } => rho.apply_superop(map, *qubit),
    }
}

/// Evolves `initial` (default |0…0⟩) through the circuit.
pub fn evolve(c: &Circuit, model: &NoiseModel, initial: Option<&DensityMatrix>) -> Result<EvolutionResult> {
    let mut rho = match initial {
        Some(r) => {
            if r.n_qubits() != c.n_qubits {
                return Err(QemError::DimensionMismatch { expected: 1 << c.n_qubits, found: r.dim() });
            }
            r.clone()
        }
        None => DensityMatrix::ground(c.n_qubits),
    };
    let mut cache = ChannelCache { model, n_qubits: c.n_qubits, entries: Vec::new() };
    for layer in &c.layers {
        for op in &layer.ops {
            apply_op(&mut rho, op)?;
        }
        if layer.duration > 0.0 {
            for (q, ch) in cache.get(layer.duration).iter().enumerate() {
                if let Some(s) = ch {
                    rho.apply_superop(s, q)?;
                }
            }
        }
    }
    let branch_weight = rho.trace();
    Ok(EvolutionResult { rho, branch_weight })
}

/// Unnormalized branch ⟨b|ρ|b⟩ of one ancilla; the ancilla is removed.
pub fn postselect(full: &EvolutionResult, ancilla: usize, outcome: u8) -> Result<EvolutionResult> {
    let rho = full.rho.project_out(ancilla, outcome)?;
    let branch_weight = rho.trace();
    Ok(EvolutionResult { rho, branch_weight })
}

/// Diagonal of ρ in the computational basis; sums to the branch weight.
pub fn basis_probabilities(r: &EvolutionResult) -> Vec<f64> {
    r.rho.probabilities()
}

/// Register probabilities of the branch selected by `post`, with all other
/// non-register qubits traced out. Not renormalized.
pub fn register_probabilities(r: &EvolutionResult, n_register: usize, post: &[PostSelect]) -> Vec<f64> {
    let full = r.rho.probabilities();
    let reg_mask = (1usize << n_register) - 1;
    let mut out = vec![0.0; 1 << n_register];
    'outer: for (i, p) in full.iter().enumerate() {
        for ps in post {
            if ((i >> ps.ancilla) & 1) as u8 != ps.outcome {
                continue 'outer;
            }
        }
        out[i & reg_mask] += p;
    }
    out
}

/// How the basis change for X-type observables is simulated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rotation {
    /// Rotation layer of the given duration passes through the noise model.
    Noisy(f64),
    /// Rotation layer has zero duration.
    Noiseless,
}

impl Default for Rotation {
    fn default() -> Self {
        Rotation::Noisy(1.0)
    }
}

impl Rotation {
    pub fn duration(&self) -> f64 {
        match self {
            Rotation::Noisy(d) => *d,
            Rotation::Noiseless => 0.0,
        }
    }
}

/// ⟨O⟩ obtained by appending the observable's basis rotation to the circuit,
/// evolving under `model`, and reading the computational-basis diagonal.
pub fn measured_expectation(c: &Circuit, model: &NoiseModel, o: &Observable, rotation: Rotation) -> Result<f64> {
    let mc = o.measurement_circuit(c, rotation.duration())?;
    let r = evolve(&mc, model, None)?;
    Ok(o.value(&register_probabilities(&r, mc.n_register, &[])))
}

/// Computational-basis value of a diagonal observable on a post-selected branch.
pub fn branch_value(r: &EvolutionResult, n_register: usize, post: &[PostSelect], o: &Observable) -> Result<f64> {
    if o.n_qubits != n_register {
        return Err(QemError::DimensionMismatch { expected: 1 << n_register, found: o.diag.len() });
    }
    Ok(o.value(&register_probabilities(r, n_register, post)))
}
