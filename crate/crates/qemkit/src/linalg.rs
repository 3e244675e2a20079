//! Dense complex matrices and density matrices over little-endian qubit registers.
//!
//! Qubit `q` is bit `q` of the computational-basis index, so qubit 0 is the
//! least-significant bit. Multi-qubit local operators take an ordered target
//! list whose first entry is the most-significant bit of the local index.

use num_complex::Complex64;

use crate::error::{QemError, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_pow2(dim)?;
        Ok(Self { dim, data: vec![ZERO; dim * dim] })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        Ok(m)
    }

    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self> {
        check_pow2(dim)?;
        if data.len() != dim * dim {
            return Err(QemError::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from real row-major entries. Panics on a non-square or
    /// non power-of-two input; meant for literal constants.
    pub fn real(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        let data = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.len(), dim, "matrix literal must be square");
                r.iter().map(|&x| C64::new(x, 0.0))
            })
            .collect();
        Self::from_vec(dim, data).expect("matrix literal must have power-of-two size")
    }

    pub fn complex(rows: &[&[C64]]) -> Self {
        let dim = rows.len();
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::from_vec(dim, data).expect("matrix literal must be square with power-of-two size")
    }

    pub fn diagonal(entries: &[C64]) -> Result<Self> {
        let mut m = Self::zeros(entries.len())?;
        for (i, &v) in entries.iter().enumerate() {
            m.data[i * m.dim + i] = v;
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.dim + c] = v;
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(Self { dim: n, data: out })
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                out[j * n + i] = self.data[i * n + j].conj();
            }
        }
        Self { dim: n, data: out }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { dim: self.dim, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { dim: self.dim, data })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn add_scaled(&mut self, other: &Self, s: C64) -> Result<()> {
        self.same_dim(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
        Ok(())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim;
        for i in 0..n {
            for j in i..n {
                if (self.data[i * n + j] - self.data[j * n + i].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let p = self.adjoint().matmul(self).expect("same dimension");
        p.max_abs_diff(&Self::identity(self.dim).expect("power of two")) <= tol
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim;
        (0..n).all(|i| (0..n).all(|j| i == j || self.data[i * n + j].norm() <= tol))
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).collect()
    }

    /// Smallest |phase-aligned difference| between `self` and `other`, i.e.
    /// max |self - e^{iφ} other| for the φ fixed by the largest entry of `other`.
    pub fn max_abs_diff_up_to_phase(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        let (idx, _) = other
            .data
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .expect("non-empty");
        if other.data[idx].norm() == 0.0 {
            return self.max_abs();
        }
        let ratio = self.data[idx] / other.data[idx];
        let phase = if ratio.norm() > 0.0 { ratio / ratio.norm() } else { ONE };
        self.max_abs_diff(&other.scale(phase))
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(QemError::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(())
    }
}

fn check_pow2(dim: usize) -> Result<()> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(QemError::InvalidParameter(format!("matrix dimension {dim} is not a power of two")));
    }
    Ok(())
}

/// Tensor product with `a` occupying the most-significant index block.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.dim, b.dim);
    let n = na * nb;
    let mut data = vec![ZERO; n * n];
    for i in 0..na {
        for j in 0..na {
            let x = a.data[i * na + j];
            if x == ZERO {
                continue;
            }
            for k in 0..nb {
                for l in 0..nb {
                    data[(i * nb + k) * n + j * nb + l] = x * b.data[k * nb + l];
                }
            }
        }
    }
    ComplexMatrix { dim: n, data }
}

/// Offsets into a register index for every local index of an operator on `qs`.
/// `qs[0]` is the most-significant local bit.
pub(crate) fn local_offsets(qs: &[usize]) -> Vec<usize> {
    let k = qs.len();
    (0..1usize << k)
        .map(|r| {
            qs.iter()
                .enumerate()
                .map(|(i, &q)| ((r >> (k - 1 - i)) & 1) << q)
                .sum()
        })
        .collect()
}

/// Register indices whose bits on `qs` are all zero.
pub(crate) fn base_indices(n_qubits: usize, qs: &[usize]) -> Vec<usize> {
    let mask: usize = qs.iter().map(|&q| 1usize << q).sum();
    (0..1usize << n_qubits).filter(|i| i & mask == 0).collect()
}

fn check_targets(n_qubits: usize, qs: &[usize], m: &ComplexMatrix) -> Result<()> {
    if m.dim != 1 << qs.len() {
        return Err(QemError::DimensionMismatch { expected: 1 << qs.len(), found: m.dim });
    }
    for (i, &q) in qs.iter().enumerate() {
        if q >= n_qubits {
            return Err(QemError::IndexOutOfRange { index: q, len: n_qubits });
        }
        if qs[..i].contains(&q) {
            return Err(QemError::InvalidParameter(format!("repeated target qubit {q}")));
        }
    }
    Ok(())
}

/// Embeds a local operator acting on `qs` into an `n_qubits` register.
pub fn embed(m: &ComplexMatrix, qs: &[usize], n_qubits: usize) -> Result<ComplexMatrix> {
    check_targets(n_qubits, qs, m)?;
    let dim = 1usize << n_qubits;
    let offs = local_offsets(qs);
    let mut out = ComplexMatrix::zeros(dim)?;
    for base in base_indices(n_qubits, qs) {
        for (r, &ro) in offs.iter().enumerate() {
            for (c, &co) in offs.iter().enumerate() {
                out.data[(base + ro) * dim + base + co] = m.data[r * m.dim + c];
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    n_qubits: usize,
    normalized: bool,
}

impl DensityMatrix {
    /// |0…0⟩⟨0…0| on `n_qubits`.
    pub fn ground(n_qubits: usize) -> Self {
        let mut m = ComplexMatrix::zeros(1 << n_qubits).expect("power of two");
        m.data[0] = ONE;
        Self { matrix: m, n_qubits, normalized: true }
    }

    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_hermitian(1e-12) {
            return Err(QemError::NotHermitian);
        }
        let n_qubits = matrix.n_qubits();
        let normalized = (matrix.trace().re - 1.0).abs() <= 1e-12;
        Ok(Self { matrix, n_qubits, normalized })
    }

    pub fn from_pure(amplitudes: &[C64]) -> Result<Self> {
        let dim = amplitudes.len();
        let mut m = ComplexMatrix::zeros(dim)?;
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = amplitudes[i] * amplitudes[j].conj();
            }
        }
        Self::from_matrix(m)
    }

    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(QemError::IndexOutOfRange { index, len: dim });
        }
        let mut m = ComplexMatrix::zeros(dim)?;
        m.data[index * dim + index] = ONE;
        Ok(Self { matrix: m, n_qubits, normalized: true })
    }

    pub(crate) fn from_parts(matrix: ComplexMatrix, normalized: bool) -> Self {
        let n_qubits = matrix.n_qubits();
        Self { matrix, n_qubits, normalized }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        let n = self.dim();
        let d = &self.matrix.data;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += (d[i * n + j] * d[j * n + i]).re;
            }
        }
        s
    }

    /// Diagonal in the computational basis.
    pub fn probabilities(&self) -> Vec<f64> {
        self.matrix.diag().iter().map(|z| z.re).collect()
    }

    /// ρ ← m ρ m† for a local operator `m` on `qs`.
    pub fn apply_local(&mut self, m: &ComplexMatrix, qs: &[usize]) -> Result<()> {
        check_targets(self.n_qubits, qs, m)?;
        let dim = self.dim();
        let k = m.dim;
        let offs = local_offsets(qs);
        let bases = base_indices(self.n_qubits, qs);
        let md = &m.data;
        let rho = &mut self.matrix.data;
        let mut buf = vec![ZERO; k];
        // left multiplication, column by column
        for col in 0..dim {
            for &b in &bases {
                for (r, &o) in offs.iter().enumerate() {
                    buf[r] = rho[(b + o) * dim + col];
                }
                for (r, &o) in offs.iter().enumerate() {
                    let mut acc = ZERO;
                    for c in 0..k {
                        acc += md[r * k + c] * buf[c];
                    }
                    rho[(b + o) * dim + col] = acc;
                }
            }
        }
        // right multiplication by m†, row by row
        for row in 0..dim {
            let line = &mut rho[row * dim..(row + 1) * dim];
            for &b in &bases {
                for (c, &o) in offs.iter().enumerate() {
                    buf[c] = line[b + o];
                }
                for (r, &o) in offs.iter().enumerate() {
                    let mut acc = ZERO;
                    for c in 0..k {
                        acc += buf[c] * md[r * k + c].conj();
                    }
                    line[b + o] = acc;
                }
            }
        }
        if !m.is_unitary(1e-12) {
            self.normalized = false;
        }
        Ok(())
    }

    /// Applies a single-qubit linear map given as a 4×4 superoperator acting on
    /// the row-major vectorized 2×2 block of qubit `q`.
    pub fn apply_superop(&mut self, s: &SuperOp, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(QemError::IndexOutOfRange { index: q, len: self.n_qubits });
        }
        let dim = self.dim();
        let bit = 1usize << q;
        let rho = &mut self.matrix.data;
        let m = &s.m;
        for r in (0..dim).filter(|r| r & bit == 0) {
            for c in (0..dim).filter(|c| c & bit == 0) {
                let idx = [r * dim + c, r * dim + c + bit, (r + bit) * dim + c, (r + bit) * dim + c + bit];
                let v = [rho[idx[0]], rho[idx[1]], rho[idx[2]], rho[idx[3]]];
                for (i, &ix) in idx.iter().enumerate() {
                    rho[ix] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2] + m[i][3] * v[3];
                }
            }
        }
        if !s.trace_preserving {
            self.normalized = false;
        }
        Ok(())
    }

    /// Unnormalized branch ⟨b|ρ|b⟩ on qubit `q`; the result has one qubit fewer.
    pub fn project_out(&self, q: usize, outcome: u8) -> Result<Self> {
        if q >= self.n_qubits {
            return Err(QemError::IndexOutOfRange { index: q, len: self.n_qubits });
        }
        if outcome > 1 {
            return Err(QemError::InvalidParameter(format!("outcome {outcome} is not a bit")));
        }
        Ok(Self::from_parts(self.reduce(q, outcome as usize), false))
    }

    /// Partial trace over qubit `q`.
    pub fn partial_trace(&self, q: usize) -> Result<Self> {
        if q >= self.n_qubits {
            return Err(QemError::IndexOutOfRange { index: q, len: self.n_qubits });
        }
        let m0 = self.reduce(q, 0);
        let m1 = self.reduce(q, 1);
        Ok(Self::from_parts(m0.add(&m1).expect("same dim"), self.normalized))
    }

    fn reduce(&self, q: usize, b: usize) -> ComplexMatrix {
        let n = self.n_qubits - 1;
        let dim = 1usize << n;
        let full = self.dim();
        let low = (1usize << q) - 1;
        let lift = |i: usize| ((i & !low) << 1) | (b << q) | (i & low);
        let mut out = ComplexMatrix::zeros(dim).expect("power of two");
        for i in 0..dim {
            let fi = lift(i);
            for j in 0..dim {
                out.data[i * dim + j] = self.matrix.data[fi * full + lift(j)];
            }
        }
        out
    }

    /// Re Tr(Oρ). Fails when O is not Hermitian or the imaginary part exceeds 1e-10.
    pub fn expectation(&self, o: &ComplexMatrix) -> Result<f64> {
        expectation(o, self)
    }
}

/// SρS† on the full register.
pub fn conjugate(rho: &DensityMatrix, s: &ComplexMatrix) -> Result<DensityMatrix> {
    if s.dim() != rho.dim() {
        return Err(QemError::DimensionMismatch { expected: rho.dim(), found: s.dim() });
    }
    let out = s.matmul(rho.matrix())?.matmul(&s.adjoint())?;
    let normalized = rho.normalized && s.is_unitary(1e-12);
    Ok(DensityMatrix::from_parts(out, normalized))
}

pub fn partial_trace(rho: &DensityMatrix, qubit: usize) -> Result<DensityMatrix> {
    rho.partial_trace(qubit)
}

pub fn expectation(o: &ComplexMatrix, rho: &DensityMatrix) -> Result<f64> {
    if o.dim() != rho.dim() {
        return Err(QemError::DimensionMismatch { expected: rho.dim(), found: o.dim() });
    }
    if !o.is_hermitian(1e-12) {
        return Err(QemError::NotHermitian);
    }
    let n = o.dim();
    let (od, rd) = (o.data(), rho.matrix().data());
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += od[i * n + j] * rd[j * n + i];
        }
    }
    if acc.im.abs() > 1e-10 {
        return Err(QemError::Numeric(format!("expectation has imaginary part {:e}", acc.im)));
    }
    Ok(acc.re)
}

/// A single-qubit linear map on density matrices in row-major vectorized form:
/// vec(Φ(B))_{2i+j} = Σ m[2i+j][2k+l] B_{kl}.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOp {
    pub m: [[C64; 4]; 4],
    pub trace_preserving: bool,
}

impl SuperOp {
    pub fn identity() -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        Self { m, trace_preserving: true }
    }

    /// Σ_K K·B·K† for 2×2 Kraus operators.
    pub fn from_kraus(ks: &[ComplexMatrix]) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for k in ks {
            assert_eq!(k.dim(), 2, "single-qubit Kraus operator expected");
            for i in 0..2 {
                for j in 0..2 {
                    for a in 0..2 {
                        for b in 0..2 {
                            m[2 * i + j][2 * a + b] += k.get(i, a) * k.get(j, b).conj();
                        }
                    }
                }
            }
        }
        let mut s = Self { m, trace_preserving: false };
        s.trace_preserving = s.preserves_trace(1e-12);
        s
    }

    pub fn compose(&self, first: &Self) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..4).map(|k| self.m[i][k] * first.m[k][j]).sum();
            }
        }
        Self { m, trace_preserving: self.trace_preserving && first.trace_preserving }
    }

    pub fn linear_combination(terms: &[(f64, &SuperOp)]) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (w, s) in terms {
            for i in 0..4 {
                for j in 0..4 {
                    m[i][j] += s.m[i][j] * *w;
                }
            }
        }
        let mut s = Self { m, trace_preserving: false };
        s.trace_preserving = s.preserves_trace(1e-12);
        s
    }

    /// Tr Φ(B) = Tr B for all B ⇔ rows 0 and 3 sum to the trace functional.
    fn preserves_trace(&self, tol: f64) -> bool {
        (0..4).all(|j| {
            let want = if j == 0 || j == 3 { ONE } else { ZERO };
            (self.m[0][j] + self.m[3][j] - want).norm() <= tol
        })
    }

    pub fn apply_2x2(&self, b: &ComplexMatrix) -> ComplexMatrix {
        let v = [b.get(0, 0), b.get(0, 1), b.get(1, 0), b.get(1, 1)];
        let out: Vec<C64> = (0..4).map(|i| (0..4).map(|k| self.m[i][k] * v[k]).sum()).collect();
        ComplexMatrix::from_vec(2, out).expect("2x2")
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                d = d.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        d
    }
}
