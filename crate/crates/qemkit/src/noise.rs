//! Single-qubit Markovian noise: Kraus maps, Lindblad generators and their
//! rewriting as weighted sums of conjugations.

use serde::{Deserialize, Serialize};

use crate::circuit::OpTag;
use crate::error::{QemError, Result};
use crate::linalg::{embed, ComplexMatrix, DensityMatrix, SuperOp, C64, ONE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    Ad,
    Gad,
    Pd,
    Adpd,
    Depolarizing,
}

/// Per-qubit coherence times. Qubits beyond the listed entries (ancillas)
/// reuse the last entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coherence {
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
}

impl Coherence {
    pub fn new(t1: Vec<f64>, t2: Vec<f64>) -> Result<Self> {
        if t1.len() != t2.len() || t1.is_empty() {
            return Err(QemError::InvalidParameter("T1 and T2 lists must be nonempty and of equal length".into()));
        }
        for (j, (&a, &b)) in t1.iter().zip(&t2).enumerate() {
            if !(a > 0.0) || !(b > 0.0) {
                return Err(QemError::InvalidParameter(format!("qubit {j}: coherence times must be positive")));
            }
            if b > 2.0 * a * (1.0 + 1e-12) {
                return Err(QemError::InvalidParameter(format!("qubit {j}: T2 = {b} exceeds 2·T1 = {}", 2.0 * a)));
            }
        }
        Ok(Self { t1, t2 })
    }

    pub fn t1(&self, q: usize) -> f64 {
        self.t1[q.min(self.t1.len() - 1)]
    }

    pub fn t2(&self, q: usize) -> f64 {
        self.t2[q.min(self.t2.len() - 1)]
    }

    /// Pure-dephasing rate left after removing the part of 1/T2 caused by
    /// relaxation: (1/T2 − 1/(2T1))/2, in units of L_PD[ρ] = ZρZ − ρ.
    pub fn dephasing_rate(&self, q: usize) -> f64 {
        (1.0 / self.t2(q) - 0.5 / self.t1(q)) / 2.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// γΔt per unit layer duration (AD, GAD, ADPD).
    pub tau: f64,
    pub n_bar: f64,
    /// γ_PD·Δt per unit layer duration (PD, ADPD).
    pub tau_pd: f64,
    /// Per-unit-duration depolarizing probability.
    pub p_depol: f64,
    /// When set, overrides `kind`: each qubit relaxes with its own T1/T2 and
    /// layer durations are physical times.
    pub coherence: Option<Coherence>,
}

impl NoiseModel {
    fn base(kind: NoiseKind) -> Self {
        Self { kind, tau: 0.0, n_bar: 0.0, tau_pd: 0.0, p_depol: 0.0, coherence: None }
    }

    pub fn none() -> Self {
        Self::base(NoiseKind::None)
    }

    pub fn ad(tau: f64) -> Result<Self> {
        check_nonneg("tau", tau)?;
        Ok(Self { tau, ..Self::base(NoiseKind::Ad) })
    }

    pub fn ad_theta(theta: f64) -> Result<Self> {
        Self::ad(tau_from_theta(theta)?)
    }

    pub fn gad(tau: f64, n_bar: f64) -> Result<Self> {
        check_nonneg("tau", tau)?;
        check_nonneg("n_bar", n_bar)?;
        Ok(Self { tau, n_bar, ..Self::base(NoiseKind::Gad) })
    }

    pub fn pd(tau_pd: f64) -> Result<Self> {
        check_nonneg("tau_pd", tau_pd)?;
        Ok(Self { tau_pd, ..Self::base(NoiseKind::Pd) })
    }

    /// (G)AD followed by phase damping in every layer.
    pub fn adpd(tau: f64, n_bar: f64, tau_pd: f64) -> Result<Self> {
        check_nonneg("tau", tau)?;
        check_nonneg("n_bar", n_bar)?;
        check_nonneg("tau_pd", tau_pd)?;
        Ok(Self { tau, n_bar, tau_pd, ..Self::base(NoiseKind::Adpd) })
    }

    pub fn depolarizing(p: f64) -> Result<Self> {
        if !(0.0..0.75).contains(&p) {
            return Err(QemError::InvalidParameter(format!("depolarizing probability {p} outside [0, 3/4)")));
        }
        Ok(Self { p_depol: p, ..Self::base(NoiseKind::Depolarizing) })
    }

    pub fn inhomogeneous(coherence: Coherence) -> Self {
        Self { coherence: Some(coherence), ..Self::base(NoiseKind::Adpd) }
    }

    /// ϑ_τ with cos²(ϑ_τ/2) = e^{−τ}.
    pub fn theta_tau(&self) -> f64 {
        theta_from_tau(self.tau)
    }

    /// Generator strength of the depolarizing channel: p = ¾(1 − e^{−4τ/3}).
    pub fn tau_depol(&self) -> f64 {
        -0.75 * (1.0 - 4.0 * self.p_depol / 3.0).ln()
    }

    pub fn is_noiseless(&self) -> bool {
        self.coherence.is_none()
            && match self.kind {
                NoiseKind::None => true,
                NoiseKind::Ad | NoiseKind::Gad => self.tau == 0.0,
                NoiseKind::Pd => self.tau_pd == 0.0,
                NoiseKind::Adpd => self.tau == 0.0 && self.tau_pd == 0.0,
                NoiseKind::Depolarizing => self.p_depol == 0.0,
            }
    }

    /// Channel acting on `qubit` during a layer of the given duration, or
    /// `None` when it is the identity.
    pub fn layer_channel(&self, qubit: usize, duration: f64) -> Option<SuperOp> {
        if duration <= 0.0 {
            return None;
        }
        if let Some(c) = &self.coherence {
            let ad = ad_superop(duration / c.t1(qubit));
            let pd = pd_superop(c.dephasing_rate(qubit) * duration);
            return Some(pd.compose(&ad));
        }
        match self.kind {
            NoiseKind::None => None,
            _ if self.is_noiseless() => None,
            NoiseKind::Ad => Some(ad_superop(self.tau * duration)),
            NoiseKind::Gad => Some(gad_superop(self.tau * duration, self.n_bar)),
            NoiseKind::Pd => Some(pd_superop(self.tau_pd * duration)),
            NoiseKind::Adpd => {
                let a = gad_superop(self.tau * duration, self.n_bar);
                Some(pd_superop(self.tau_pd * duration).compose(&a))
            }
            NoiseKind::Depolarizing => Some(depol_superop(self.tau_depol() * duration)),
        }
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(QemError::InvalidParameter(format!("{name} = {v} must be finite and ≥ 0")));
    }
    Ok(())
}

pub fn tau_from_theta(theta: f64) -> Result<f64> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(QemError::InvalidParameter(format!("theta_tau = {theta} outside [0, π]")));
    }
    // `+ 0.0` turns the -0.0 at theta = 0 into 0.0.
    Ok(-2.0 * (theta / 2.0).cos().ln() + 0.0)
}

pub fn theta_from_tau(tau: f64) -> f64 {
    2.0 * (-tau / 2.0).exp().acos()
}

/// Kraus pair (M₀, M₁) of amplitude damping at angle ϑ_τ.
pub fn ad_kraus(theta: f64) -> Result<[ComplexMatrix; 2]> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(QemError::InvalidParameter(format!("theta_tau = {theta} outside [0, π]")));
    }
    let (s, c) = ((theta / 2.0).sin(), (theta / 2.0).cos());
    Ok([ComplexMatrix::real(&[&[0.0, s], &[0.0, 0.0]]), ComplexMatrix::real(&[&[1.0, 0.0], &[0.0, c]])])
}

/// Kraus operators of e^{τ L_GAD} with L_GAD = (n̄+1)D[σ⁻] + n̄D[σ⁺].
pub fn gad_kraus(tau: f64, n_bar: f64) -> [ComplexMatrix; 4] {
    let p = (n_bar + 1.0) / (2.0 * n_bar + 1.0);
    let keep = (-(2.0 * n_bar + 1.0) * tau).exp();
    let g = 1.0 - keep;
    let (sp, sq) = (p.sqrt(), (1.0 - p).sqrt());
    let (sk, sg) = (keep.sqrt(), g.sqrt());
    [
        ComplexMatrix::real(&[&[sp, 0.0], &[0.0, sp * sk]]),
        ComplexMatrix::real(&[&[0.0, sp * sg], &[0.0, 0.0]]),
        ComplexMatrix::real(&[&[sq * sk, 0.0], &[0.0, sq]]),
        ComplexMatrix::real(&[&[0.0, 0.0], &[sq * sg, 0.0]]),
    ]
}

pub fn ad_superop(tau: f64) -> SuperOp {
    let theta = theta_from_tau(tau);
    SuperOp::from_kraus(&ad_kraus(theta).expect("angle in range"))
}

pub fn gad_superop(tau: f64, n_bar: f64) -> SuperOp {
    if n_bar == 0.0 {
        return ad_superop(tau);
    }
    SuperOp::from_kraus(&gad_kraus(tau, n_bar))
}

/// Kraus pair of e^{τ L_PD} with L_PD[ρ] = ZρZ − ρ.
pub fn pd_kraus(tau_pd: f64) -> [ComplexMatrix; 2] {
    let e = (-2.0 * tau_pd).exp();
    let a = ((1.0 + e) / 2.0).sqrt();
    let b = ((1.0 - e) / 2.0).sqrt();
    [ComplexMatrix::identity(2).expect("2").scale(C64::new(a, 0.0)), OpTag::Z.matrix().scale(C64::new(b, 0.0))]
}

pub fn pd_superop(tau_pd: f64) -> SuperOp {
    SuperOp::from_kraus(&pd_kraus(tau_pd))
}

/// e^{τ L} with L[ρ] = (XρX + YρY + ZρZ)/3 − ρ.
pub fn depol_superop(tau: f64) -> SuperOp {
    let p = 0.75 * (1.0 - (-4.0 * tau / 3.0).exp());
    pauli_channel(p)
}

/// Kraus set of (1−p)ρ + (p/3)(XρX + YρY + ZρZ).
pub fn pauli_kraus(p: f64) -> [ComplexMatrix; 4] {
    let w = (p / 3.0).sqrt();
    [
        ComplexMatrix::identity(2).expect("2").scale(C64::new((1.0 - p).sqrt(), 0.0)),
        OpTag::X.matrix().scale(C64::new(w, 0.0)),
        OpTag::Y.matrix().scale(C64::new(w, 0.0)),
        OpTag::Z.matrix().scale(C64::new(w, 0.0)),
    ]
}

pub fn pauli_channel(p: f64) -> SuperOp {
    SuperOp::from_kraus(&pauli_kraus(p))
}

/// Applies the model's unit-duration channel to each listed qubit.
pub fn apply_channel(rho: &DensityMatrix, model: &NoiseModel, qubits: &[usize]) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    for &q in qubits {
        if q >= rho.n_qubits() {
            return Err(QemError::IndexOutOfRange { index: q, len: rho.n_qubits() });
        }
        if let Some(s) = model.layer_channel(q, 1.0) {
            out.apply_superop(&s, q)?;
        }
    }
    Ok(out)
}

/// Lindblad generators with unit rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Generator {
    /// D[σ⁻].
    Ad,
    /// (n̄+1)D[σ⁻] + n̄D[σ⁺].
    Gad { n_bar: f64 },
    /// D[σ⁻] alone, the emission part of GAD.
    GadEmission,
    /// D[σ⁺], the absorption part of GAD.
    GadAbsorption,
    /// ZρZ − ρ.
    Pd,
    /// (XρX + YρY + ZρZ)/3 − ρ.
    Pauli,
}

/// One term of a rewritten generator; `None` means the identity map.
pub type Term = (f64, Option<OpTag>);

/// Weighted conjugations Σ c·SρS† equal to the generator.
pub fn rewrite_lindblad_terms(g: Generator) -> Vec<Term> {
    use OpTag::*;
    match g {
        Generator::Ad | Generator::GadEmission => vec![(-0.25, None), (0.25, Some(Z)), (1.0, Some(SigmaMinus)), (-1.0, Some(P1))],
        Generator::GadAbsorption => vec![(-0.25, None), (0.25, Some(Z)), (1.0, Some(SigmaPlus)), (-1.0, Some(P0))],
        Generator::Gad { n_bar } => {
            let (e, a) = (n_bar + 1.0, n_bar);
            vec![
                (-0.25 * (e + a), None),
                (0.25 * (e + a), Some(Z)),
                (e, Some(SigmaMinus)),
                (-e, Some(P1)),
                (a, Some(SigmaPlus)),
                (-a, Some(P0)),
            ]
        }
        Generator::Pd => vec![(-1.0, None), (1.0, Some(Z))],
        Generator::Pauli => vec![(-1.0, None), (1.0 / 3.0, Some(X)), (1.0 / 3.0, Some(Y)), (1.0 / 3.0, Some(Z))],
    }
}

fn dissipator(rho: &ComplexMatrix, l: &ComplexMatrix) -> ComplexMatrix {
    let ld = l.adjoint();
    let ll = ld.matmul(l).expect("dim");
    let jump = l.matmul(rho).expect("dim").matmul(&ld).expect("dim");
    let anti = ll.matmul(rho).expect("dim").add(&rho.matmul(&ll).expect("dim")).expect("dim");
    jump.sub(&anti.scale(C64::new(0.5, 0.0))).expect("dim")
}

/// Σ_{j ∈ qubits} L_j[ρ] evaluated from the Lindblad form.
pub fn lindblad(rho: &DensityMatrix, g: Generator, qubits: &[usize]) -> Result<ComplexMatrix> {
    let n = rho.n_qubits();
    let r = rho.matrix();
    let mut out = ComplexMatrix::zeros(rho.dim())?;
    for &q in qubits {
        let op = |t: OpTag| embed(&t.matrix(), &[q], n);
        let term = match g {
            Generator::Ad | Generator::GadEmission => dissipator(r, &op(OpTag::SigmaMinus)?),
            Generator::GadAbsorption => dissipator(r, &op(OpTag::SigmaPlus)?),
            Generator::Gad { n_bar } => {
                let mut t = dissipator(r, &op(OpTag::SigmaMinus)?).scale(C64::new(n_bar + 1.0, 0.0));
                t.add_scaled(&dissipator(r, &op(OpTag::SigmaPlus)?), C64::new(n_bar, 0.0))?;
                t
            }
            Generator::Pd => {
                let z = op(OpTag::Z)?;
                z.matmul(r)?.matmul(&z)?.sub(r)?
            }
            Generator::Pauli => {
                let mut t = r.scale(C64::new(-1.0, 0.0));
                for tag in [OpTag::X, OpTag::Y, OpTag::Z] {
                    let p = op(tag)?;
                    t.add_scaled(&p.matmul(r)?.matmul(&p)?, C64::new(1.0 / 3.0, 0.0))?;
                }
                t
            }
        };
        out.add_scaled(&term, ONE)?;
    }
    Ok(out)
}

/// Single-qubit generator as a 4×4 superoperator built from the rewritten terms.
pub fn generator_superop(g: Generator) -> SuperOp {
    let terms = rewrite_lindblad_terms(g);
    let maps: Vec<(f64, SuperOp)> = terms
        .iter()
        .map(|&(c, t)| {
            let s = match t {
                None => SuperOp::identity(),
                Some(tag) => SuperOp::from_kraus(&[tag.matrix()]),
            };
            (c, s)
        })
        .collect();
    let refs: Vec<(f64, &SuperOp)> = maps.iter().map(|(c, s)| (*c, s)).collect();
    SuperOp::linear_combination(&refs)
}
