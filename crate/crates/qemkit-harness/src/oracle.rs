//! Δ₁ computed straight from matrices: each Lindblad term is applied to the
//! state after layer k and propagated unitarily through the rest.

use qemkit::circuit::{Circuit, Op};
use qemkit::linalg::DensityMatrix;
use qemkit::noise::{lindblad, Generator};
use qemkit::{Observable, QemError, Result, C64};

fn apply_layer(rho: &DensityMatrix, c: &Circuit, k: usize) -> Result<DensityMatrix> {
    let mut r = rho.clone();
    for op in &c.layers[k].ops {
        match op {
            Op::Gate(g) => r.apply_local(&g.matrix(), &g.targets)?,
            _ => return Err(QemError::Unsupported("oracle handles gate layers only".into())),
        }
    }
    Ok(r)
}

/// Tr(O Σ_k w_k U_{>k} L[ρ_k] U_{>k}†) with L summed over all qubits.
pub fn delta1(c: &Circuit, g: Generator, o: &Observable) -> Result<f64> {
    let n = c.n_qubits;
    let om = o.matrix()?;
    let qs: Vec<usize> = (0..n).collect();
    let mut rho = DensityMatrix::ground(n);
    let mut total = 0.0;
    for k in 0..c.layers.len() {
        rho = apply_layer(&rho, c, k)?;
        let w = c.layers[k].duration;
        if w == 0.0 {
            continue;
        }
        let mut d = DensityMatrix::from_matrix(lindblad(&rho, g, &qs)?.scale(C64::new(w, 0.0)))?;
        for l in k + 1..c.layers.len() {
            d = apply_layer(&d, c, l)?;
        }
        total += d.expectation(&om)?;
    }
    Ok(total)
}
