//! Benchmark circuits: H chains, CH chains, two Grover-type amplitude
//! amplification circuits, a depth-15 QAOA for Max-Cut on the 4-cycle, and a
//! repeated-CZ circuit in a native gate set.
//!
//! Every builder uses unit layer duration except virtual-Z layers, which get
//! duration 0.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, GateKind, Style};
use crate::densim::evolve;
use crate::densim::register_probabilities;
use crate::error::{QemError, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::noise::NoiseModel;
use crate::observable::Observable;

/// Depth grid d = 1 + 2ⁿ, n = 3, 4, 5.
pub const STANDARD_DEPTHS: [usize; 3] = [9, 17, 33];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BenchmarkSpec {
    /// X followed by d−1 Hadamard layers on one qubit.
    Pre1 { depth: usize },
    /// X⊗X followed by d−1 CH[0;1] layers.
    Pre2 { depth: usize },
    /// Three-qubit search for |11⟩ on qubits 1, 2 with a phase-kickback
    /// ancilla on qubit 0; `k` oracle+diffusion rounds.
    Qaa3 {
        #[serde(default = "one")]
        k: usize,
    },
    /// Two-qubit search for |11⟩-type marked state with CZ reflection.
    Qaa2 {
        #[serde(default)]
        style: Style,
        #[serde(default = "one")]
        k: usize,
    },
    /// p = 2 QAOA on the 4-cycle; angles (ϑ₁, ϑ₂, φ₁, φ₂).
    QaoaSquare {
        #[serde(default)]
        params: Option<[f64; 4]>,
    },
    /// (CZ[0;1])^n · X⊗X.
    Imp2 {
        n_rep: usize,
        #[serde(default)]
        style: Style,
    },
}

fn one() -> usize {
    1
}

impl BenchmarkSpec {
    pub fn n_qubits(&self) -> usize {
        match self {
            BenchmarkSpec::Pre1 { .. } => 1,
            BenchmarkSpec::Pre2 { .. } | BenchmarkSpec::Qaa2 { .. } | BenchmarkSpec::Imp2 { .. } => 2,
            BenchmarkSpec::Qaa3 { .. } => 3,
            BenchmarkSpec::QaoaSquare { .. } => 4,
        }
    }

    pub fn label(&self) -> String {
        match self {
            BenchmarkSpec::Pre1 { depth } => format!("pre1_d{depth}"),
            BenchmarkSpec::Pre2 { depth } => format!("pre2_d{depth}"),
            BenchmarkSpec::Qaa3 { k } => format!("qaa3_k{k}"),
            BenchmarkSpec::Qaa2 { style, k } => format!("qaa2_{}_k{k}", style_name(*style)),
            BenchmarkSpec::QaoaSquare { .. } => "qaoa_square".into(),
            BenchmarkSpec::Imp2 { n_rep, style } => format!("imp2_{}_n{n_rep}", style_name(*style)),
        }
    }
}

fn style_name(s: Style) -> &'static str {
    match s {
        Style::Direct => "direct",
        Style::Native => "native",
    }
}

pub fn build(spec: &BenchmarkSpec) -> Result<Circuit> {
    match spec {
        BenchmarkSpec::Pre1 { depth } => pre1(*depth),
        BenchmarkSpec::Pre2 { depth } => pre2(*depth),
        BenchmarkSpec::Qaa3 { k } => qaa3(*k),
        BenchmarkSpec::Qaa2 { style, k } => qaa2(*style, *k),
        BenchmarkSpec::QaoaSquare { params } => qaoa(&MaxCutGraph::square(), &params.unwrap_or(default_qaoa_params())),
        BenchmarkSpec::Imp2 { n_rep, style } => imp2(*n_rep, *style),
    }
}

fn check_depth(d: usize) -> Result<()> {
    if d == 0 {
        return Err(QemError::InvalidParameter("depth must be at least 1".into()));
    }
    Ok(())
}

pub fn pre1(depth: usize) -> Result<Circuit> {
    check_depth(depth)?;
    let mut c = Circuit::new(1);
    c.push(vec![Gate::one(GateKind::X, 0)], 1.0)?;
    for _ in 1..depth {
        c.push(vec![Gate::one(GateKind::H, 0)], 1.0)?;
    }
    Ok(c)
}

pub fn pre2(depth: usize) -> Result<Circuit> {
    check_depth(depth)?;
    let mut c = Circuit::new(2);
    c.push(vec![Gate::one(GateKind::X, 0), Gate::one(GateKind::X, 1)], 1.0)?;
    for _ in 1..depth {
        c.push(vec![Gate::two(GateKind::CH, 0, 1)], 1.0)?;
    }
    Ok(c)
}

fn check_rounds(k: usize) -> Result<()> {
    if k == 0 {
        return Err(QemError::InvalidParameter("at least one search round is required".into()));
    }
    Ok(())
}

/// Qubit 0 is the oracle ancilla, qubits 1 and 2 the search register.
pub fn qaa3(k: usize) -> Result<Circuit> {
    check_rounds(k)?;
    let (o, r0, r1) = (0, 1, 2);
    let g = Gate::one;
    let mut c = Circuit::new(3);
    c.push(vec![g(GateKind::H, r0), g(GateKind::H, r1), g(GateKind::X, o)], 1.0)?;
    c.push(vec![g(GateKind::H, o)], 1.0)?;
    for _ in 0..k {
        c.push(vec![Gate::new(GateKind::Toffoli, vec![r0, r1, o])?], 1.0)?;
        c.push(vec![g(GateKind::H, r0), g(GateKind::H, r1)], 1.0)?;
        c.push(vec![g(GateKind::X, r0), g(GateKind::X, r1)], 1.0)?;
        c.push(vec![g(GateKind::H, r1)], 1.0)?;
        c.push(vec![Gate::cx(r0, r1)], 1.0)?;
        c.push(vec![g(GateKind::H, r1)], 1.0)?;
        c.push(vec![g(GateKind::X, r0), g(GateKind::X, r1)], 1.0)?;
        c.push(vec![g(GateKind::H, r0), g(GateKind::H, r1)], 1.0)?;
    }
    Ok(c)
}

/// Initial state CX[1;0]·(Ry(2π/3)⊗H), oracle (XZX)⊗Z, and the reflection
/// V_init·(X⊗X)·CZ[1;0]·(X⊗X)·V_init† with its global sign dropped. The
/// `native` style writes CZ as H·CX·H on qubit 0.
pub fn qaa2(style: Style, k: usize) -> Result<Circuit> {
    check_rounds(k)?;
    let (r0, r1) = (0, 1);
    let g = Gate::one;
    let a = 2.0 * PI / 3.0;
    let v_init = |c: &mut Circuit| -> Result<()> {
        c.push(vec![g(GateKind::Ry(a), r0), g(GateKind::H, r1)], 1.0)?;
        c.push(vec![Gate::cx(r1, r0)], 1.0)
    };
    let mut c = Circuit::new(2);
    v_init(&mut c)?;
    for _ in 0..k {
        c.push(vec![g(GateKind::X, r0)], 1.0)?;
        c.push(vec![g(GateKind::Z, r0), g(GateKind::Z, r1)], 1.0)?;
        c.push(vec![g(GateKind::X, r0)], 1.0)?;
        c.push(vec![Gate::cx(r1, r0)], 1.0)?;
        c.push(vec![g(GateKind::Ry(-a), r0), g(GateKind::H, r1)], 1.0)?;
        c.push(vec![g(GateKind::X, r0), g(GateKind::X, r1)], 1.0)?;
        match style {
            Style::Direct => c.push(vec![Gate::two(GateKind::CZ, r1, r0)], 1.0)?,
            Style::Native => {
                c.push(vec![g(GateKind::H, r0)], 1.0)?;
                c.push(vec![Gate::cx(r1, r0)], 1.0)?;
                c.push(vec![g(GateKind::H, r0)], 1.0)?;
            }
        }
        c.push(vec![g(GateKind::X, r0), g(GateKind::X, r1)], 1.0)?;
        v_init(&mut c)?;
    }
    Ok(c)
}

/// (CZ[0;1])^n·X⊗X. The native form uses H = Rz(π/2)·SX·Rz(π/2) with
/// zero-duration Rz layers, cancels the interior Hadamard pairs and keeps two
/// identity layers in their place, for 3n+1 timed layers.
pub fn imp2(n_rep: usize, style: Style) -> Result<Circuit> {
    if n_rep == 0 {
        return Err(QemError::InvalidParameter("n_rep must be at least 1".into()));
    }
    let g = Gate::one;
    let mut c = Circuit::new(2);
    c.push(vec![g(GateKind::X, 0), g(GateKind::X, 1)], 1.0)?;
    match style {
        Style::Direct => {
            for _ in 0..n_rep {
                c.push(vec![Gate::two(GateKind::CZ, 0, 1)], 1.0)?;
            }
        }
        Style::Native => {
            let h = |c: &mut Circuit| -> Result<()> {
                c.push(vec![g(GateKind::Rz(FRAC_PI_2), 1)], 0.0)?;
                c.push(vec![g(GateKind::SX, 1)], 1.0)?;
                c.push(vec![g(GateKind::Rz(FRAC_PI_2), 1)], 0.0)
            };
            h(&mut c)?;
            c.push(vec![Gate::cx(0, 1)], 1.0)?;
            for _ in 1..n_rep {
                c.push(vec![g(GateKind::I, 0), g(GateKind::I, 1)], 1.0)?;
                c.push(vec![g(GateKind::I, 0), g(GateKind::I, 1)], 1.0)?;
                c.push(vec![Gate::cx(0, 1)], 1.0)?;
            }
            h(&mut c)?;
        }
    }
    Ok(c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxCutGraph {
    pub n_vertices: usize,
    /// (i, j, C_ij) with C_ij ≥ 0.
    pub edges: Vec<(usize, usize, f64)>,
}

impl MaxCutGraph {
    pub fn new(n_vertices: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(i, j, w) in &edges {
            if i == j {
                return Err(QemError::InvalidParameter(format!("self-loop on vertex {i}")));
            }
            if i >= n_vertices || j >= n_vertices {
                return Err(QemError::IndexOutOfRange { index: i.max(j), len: n_vertices });
            }
            if !(w >= 0.0) {
                return Err(QemError::InvalidParameter(format!("edge ({i},{j}) has negative weight {w}")));
            }
        }
        Ok(Self { n_vertices, edges })
    }

    /// The 4-cycle 0–1–2–3–0 with unit weights.
    pub fn square() -> Self {
        Self { n_vertices: 4, edges: vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)] }
    }

    /// C(z) = ½ Σ C_ij (z_i z_j − 1) for spins z ∈ {±1}.
    pub fn cost(&self, z: &[i8]) -> f64 {
        self.edges.iter().map(|&(i, j, w)| 0.5 * w * (f64::from(z[i] * z[j]) - 1.0)).sum()
    }

    /// Edges split greedily into groups with disjoint vertices, in edge order.
    pub fn matchings(&self) -> Vec<Vec<(usize, usize, f64)>> {
        let mut groups: Vec<Vec<(usize, usize, f64)>> = Vec::new();
        for &e in &self.edges {
            let slot = groups.iter_mut().find(|g| g.iter().all(|&(a, b, _)| a != e.0 && a != e.1 && b != e.0 && b != e.1));
            match slot {
                Some(g) => g.push(e),
                None => groups.push(vec![e]),
            }
        }
        groups
    }
}

/// Spin of qubit `q` in basis state `index`: bit 0 ↦ +1, bit 1 ↦ −1.
fn spins(index: usize, n: usize) -> Vec<i8> {
    (0..n).map(|q| if (index >> q) & 1 == 1 { -1 } else { 1 }).collect()
}

pub const MAX_QAOA_VERTICES: usize = 6;

/// H_C = ½ Σ C_ij (Z_i Z_j − 1); diagonal with entries C(z).
pub fn qaoa_cost_hamiltonian(g: &MaxCutGraph) -> Result<ComplexMatrix> {
    let d: Vec<C64> = cost_diagonal(g)?.into_iter().map(|x| C64::new(x, 0.0)).collect();
    ComplexMatrix::diagonal(&d)
}

pub fn cost_diagonal(g: &MaxCutGraph) -> Result<Vec<f64>> {
    if g.n_vertices > MAX_QAOA_VERTICES {
        return Err(QemError::InvalidParameter(format!("graph has {} vertices; at most {MAX_QAOA_VERTICES} supported", g.n_vertices)));
    }
    Ok((0..1usize << g.n_vertices).map(|i| g.cost(&spins(i, g.n_vertices))).collect())
}

pub fn cost_observable(g: &MaxCutGraph) -> Result<Observable> {
    Observable::diagonal("C", cost_diagonal(g)?)
}

/// Optimized p = 2 angles (ϑ₁, ϑ₂, φ₁, φ₂) for the 4-cycle.
pub fn default_qaoa_params() -> [f64; 4] {
    [2.023075, 2.130055, 1.011537, 1.118518]
}

/// p = 2 QAOA: a Hadamard layer, then per round each matching as
/// [CX], [Rz(2ϑC_ij) on targets], [CX], followed by [Rx(2φ)] on all qubits.
pub fn qaoa(g: &MaxCutGraph, params: &[f64; 4]) -> Result<Circuit> {
    let n = g.n_vertices;
    let mut c = Circuit::new(n);
    c.push((0..n).map(|q| Gate::one(GateKind::H, q)).collect(), 1.0)?;
    let (thetas, phis) = (&params[..2], &params[2..]);
    for (&th, &ph) in thetas.iter().zip(phis) {
        for m in g.matchings() {
            c.push(m.iter().map(|&(i, j, _)| Gate::cx(i, j)).collect(), 1.0)?;
            c.push(m.iter().map(|&(_, j, w)| Gate::one(GateKind::Rz(2.0 * th * w), j)).collect(), 1.0)?;
            c.push(m.iter().map(|&(i, j, _)| Gate::cx(i, j)).collect(), 1.0)?;
        }
        c.push((0..n).map(|q| Gate::one(GateKind::Rx(2.0 * ph), q)).collect(), 1.0)?;
    }
    Ok(c)
}

/// Exact noiseless cost ⟨H_C⟩ at the given angles.
pub fn qaoa_cost(g: &MaxCutGraph, params: &[f64; 4]) -> Result<f64> {
    let c = qaoa(g, params)?;
    let r = evolve(&c, &NoiseModel::none(), None)?;
    Ok(cost_observable(g)?.value(&register_probabilities(&r, c.n_register, &[])))
}

/// Derivative-free coordinate descent on the exact cost. Each sweep tries
/// ±step on every angle and halves the step when nothing improves.
pub fn coordinate_descent(g: &MaxCutGraph, start: [f64; 4], step: f64, min_step: f64) -> Result<([f64; 4], f64)> {
    let mut x = start;
    let mut fx = qaoa_cost(g, &x)?;
    let mut h = step;
    while h >= min_step {
        let mut improved = false;
        for i in 0..4 {
            for s in [h, -h] {
                let mut y = x;
                y[i] += s;
                let fy = qaoa_cost(g, &y)?;
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            h /= 2.0;
        }
    }
    Ok((x, fx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_counts_layers() {
        assert_eq!(qaoa(&MaxCutGraph::square(), &default_qaoa_params()).unwrap().depth(), 15);
        assert_eq!(imp2(5, Style::Native).unwrap().effective_depth(), 16);
        assert_eq!(pre1(9).unwrap().depth(), 9);
    }

    #[test]
    fn spec_from_toml_like_json() {
        let s: BenchmarkSpec = serde_json::from_str(r#"{"name":"qaa2","style":"native"}"#).unwrap();
        assert_eq!(s, BenchmarkSpec::Qaa2 { style: Style::Native, k: 1 });
    }
}
