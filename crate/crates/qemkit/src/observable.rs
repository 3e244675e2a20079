//! Observables measured in the computational basis, optionally after an
//! X-basis rotation on some qubits.

use crate::circuit::{Circuit, GateKind};
use crate::error::{QemError, Result};
use crate::linalg::{embed, ComplexMatrix, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    pub label: String,
    pub n_qubits: usize,
    /// Eigenvalues on the (rotated) computational basis of the register.
    pub diag: Vec<f64>,
    /// Qubits measured in the X basis, realized by a Hadamard layer.
    pub x_qubits: Vec<usize>,
}

impl Observable {
    pub fn diagonal(label: impl Into<String>, diag: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(QemError::InvalidParameter("observable diagonal length must be a power of two".into()));
        }
        Ok(Self { label: label.into(), n_qubits: n.trailing_zeros() as usize, diag, x_qubits: Vec::new() })
    }

    /// Projector onto one basis state. `bits` is written most-significant
    /// qubit first, so "110" on three qubits is index 6.
    pub fn projector(bits: &str) -> Result<Self> {
        let n = bits.len();
        let idx = usize::from_str_radix(bits, 2).map_err(|_| QemError::InvalidParameter(format!("bad bit string `{bits}`")))?;
        let mut diag = vec![0.0; 1 << n];
        diag[idx] = 1.0;
        Self::diagonal(format!("P{bits}"), diag)
    }

    /// Product of Pauli Z/X factors, e.g. `[('Z', 1), ('X', 0)]`.
    pub fn pauli(n_qubits: usize, factors: &[(char, usize)]) -> Result<Self> {
        let mut diag = vec![1.0; 1 << n_qubits];
        let mut x_qubits = Vec::new();
        let mut label = String::new();
        for &(p, q) in factors {
            if q >= n_qubits {
                return Err(QemError::IndexOutOfRange { index: q, len: n_qubits });
            }
            match p {
                'Z' => {}
                'X' => x_qubits.push(q),
                'I' => continue,
                other => return Err(QemError::InvalidParameter(format!("unsupported Pauli factor `{other}`"))),
            }
            for (i, d) in diag.iter_mut().enumerate() {
                if (i >> q) & 1 == 1 {
                    *d = -*d;
                }
            }
            label.push_str(&format!("{p}{q}"));
        }
        if label.is_empty() {
            label.push('I');
        }
        x_qubits.sort_unstable();
        x_qubits.dedup();
        Ok(Self { label, n_qubits, diag, x_qubits })
    }

    /// Parses `P0101`, `I`, or a Pauli product such as `Z1X0` / `Z1 Z3`.
    pub fn parse(spec: &str, n_qubits: usize) -> Result<Self> {
        let s: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
        if let Some(bits) = s.strip_prefix('P') {
            if bits.len() != n_qubits || !bits.chars().all(|c| c == '0' || c == '1') {
                return Err(QemError::InvalidParameter(format!("projector `{spec}` needs {n_qubits} bits")));
            }
            return Self::projector(bits);
        }
        if s == "I" {
            return Self::pauli(n_qubits, &[]);
        }
        let mut factors = Vec::new();
        let chars: Vec<char> = s.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let p = chars[i];
            let start = i + 1;
            let mut end = start;
            while end < chars.len() && chars[end].is_ascii_digit() {
                end += 1;
            }
            if end == start {
                return Err(QemError::InvalidParameter(format!("observable `{spec}`: missing qubit index after `{p}`")));
            }
            let q: usize = chars[start..end].iter().collect::<String>().parse().expect("digits");
            factors.push((p, q));
            i = end;
        }
        Self::pauli(n_qubits, &factors)
    }

    pub fn value(&self, probs: &[f64]) -> f64 {
        self.diag.iter().zip(probs).map(|(d, p)| d * p).sum()
    }

    pub fn needs_rotation(&self) -> bool {
        !self.x_qubits.is_empty()
    }

    /// Circuit with the basis rotation appended (duration as given).
    pub fn measurement_circuit(&self, c: &Circuit, rotation_duration: f64) -> Result<Circuit> {
        c.with_rotation(&self.x_qubits, rotation_duration)
    }

    /// Operator in the unrotated frame: H^{⊗x} D H^{⊗x}.
    pub fn matrix(&self) -> Result<ComplexMatrix> {
        let d: Vec<C64> = self.diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        let mut m = ComplexMatrix::diagonal(&d)?;
        for &q in &self.x_qubits {
            let h = embed(&GateKind::H.matrix(), &[q], self.n_qubits)?;
            m = h.matmul(&m)?.matmul(&h)?;
        }
        Ok(m)
    }
}
