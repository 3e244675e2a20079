//! Oracles computed straight from matrices, independent of the group builders.
#![allow(dead_code)]

use qemkit::circuit::{Circuit, Op};
use qemkit::linalg::{ComplexMatrix, DensityMatrix};
use qemkit::noise::{lindblad, Generator};
use qemkit::Observable;

/// Applies the gates of one layer (no noise).
pub fn apply_layer(rho: &DensityMatrix, c: &Circuit, k: usize) -> DensityMatrix {
    let mut r = rho.clone();
    for op in &c.layers[k].ops {
        match op {
            Op::Gate(g) => r.apply_local(&g.matrix(), &g.targets).unwrap(),
            other => panic!("oracle only handles gates, got {other:?}"),
        }
    }
    r
}

/// Propagates through layers k+1..d unitarily.
pub fn propagate_from(rho: &DensityMatrix, c: &Circuit, k: usize) -> DensityMatrix {
    let mut r = rho.clone();
    for l in k + 1..c.layers.len() {
        r = apply_layer(&r, c, l);
    }
    r
}

pub fn as_state(m: ComplexMatrix) -> DensityMatrix {
    DensityMatrix::from_matrix(m).unwrap()
}

/// Σ_j L_j[ρ] over the register qubits, times `w`.
pub fn gen(rho: &DensityMatrix, g: Generator, n: usize, w: f64) -> DensityMatrix {
    let qs: Vec<usize> = (0..n).collect();
    as_state(lindblad(rho, g, &qs).unwrap().scale(qemkit::C64::new(w, 0.0)))
}

/// Tr(O Σ_k w_k U_{>k} L[ρ_k] U_{>k}†).
pub fn delta1_oracle(c: &Circuit, g: Generator, o: &Observable) -> f64 {
    let n = c.n_qubits;
    let om = o.matrix().unwrap();
    let mut rho = DensityMatrix::ground(n);
    let mut total = 0.0;
    for k in 0..c.layers.len() {
        rho = apply_layer(&rho, c, k);
        let w = c.layers[k].duration;
        if w > 0.0 {
            let d = propagate_from(&gen(&rho, g, n, w), c, k);
            total += d.expectation(&om).unwrap();
        }
    }
    total
}

/// Tr(O Δ₂ρ) with Δ₂ = Σ_k w_k² L_k L_k + 2 Σ_{k₁>k₂} w_{k₁} w_{k₂} L_{k₁} U L_{k₂}.
pub fn delta2_oracle(c: &Circuit, g: Generator, o: &Observable) -> f64 {
    let n = c.n_qubits;
    let om = o.matrix().unwrap();
    let d = c.layers.len();
    let mut states = Vec::with_capacity(d);
    let mut rho = DensityMatrix::ground(n);
    for k in 0..d {
        rho = apply_layer(&rho, c, k);
        states.push(rho.clone());
    }
    let mut total = 0.0;
    for k1 in 0..d {
        let w1 = c.layers[k1].duration;
        if w1 == 0.0 {
            continue;
        }
        let same = gen(&gen(&states[k1], g, n, w1), g, n, w1);
        total += propagate_from(&same, c, k1).expectation(&om).unwrap();
        for k2 in 0..k1 {
            let w2 = c.layers[k2].duration;
            if w2 == 0.0 {
                continue;
            }
            let mut x = gen(&states[k2], g, n, w2);
            for l in k2 + 1..=k1 {
                x = apply_layer(&x, c, l);
            }
            let x = gen(&x, g, n, w1);
            total += 2.0 * propagate_from(&x, c, k1).expectation(&om).unwrap();
        }
    }
    total
}

/// Noiseless expectation by straight unitary propagation.
pub fn ideal(c: &Circuit, o: &Observable) -> f64 {
    let mut rho = DensityMatrix::ground(c.n_qubits);
    for k in 0..c.layers.len() {
        rho = apply_layer(&rho, c, k);
    }
    rho.expectation(&o.matrix().unwrap()).unwrap()
}

/// Random layered circuit on `n` qubits with unit durations.
pub fn random_circuit(n: usize, depth: usize, seed: u64) -> Circuit {
    use qemkit::{Gate, GateKind};
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(n);
    for _ in 0..depth {
        let mut free: Vec<usize> = (0..n).collect();
        let mut gates = Vec::new();
        while !free.is_empty() {
            let a = free.remove(rng.random_range(0..free.len()));
            let angle = rng.random_range(-3.0..3.0);
            if !free.is_empty() && rng.random_bool(0.4) {
                let b = free.remove(rng.random_range(0..free.len()));
                let kind = [GateKind::CX, GateKind::CZ, GateKind::CRy(angle), GateKind::CH][rng.random_range(0..4)];
                gates.push(Gate::two(kind, a, b));
            } else {
                let kind = [GateKind::H, GateKind::X, GateKind::Ry(angle), GateKind::Rx(angle), GateKind::Rz(angle), GateKind::SX][rng.random_range(0..6)];
                gates.push(Gate::one(kind, a));
            }
        }
        c.push(gates, 1.0).unwrap();
    }
    c
}
