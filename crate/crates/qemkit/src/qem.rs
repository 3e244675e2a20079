//! Quantum-noise-effect circuit groups and the mitigated estimators built on
//! them.
//!
//! A group is a list of distinct circuits plus weighted members. A member is a
//! circuit together with a post-selection condition on its ancillas; its value
//! is the register observable on the post-selected (unnormalized) branch.
//! Identity terms of the rewritten generator are folded into one coefficient
//! on the original circuit.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::circuit::{
    materialize, to_text, Circuit, GadgetOptions, InsertMode, LayerRole, OpTag, Placement, PostSelect, Realization,
};
use crate::densim::{evolve, register_probabilities, Rotation};
use crate::error::{QemError, Result};
use crate::exec::Exec;
use crate::noise::{rewrite_lindblad_terms, Coherence, Generator, NoiseKind, NoiseModel, Term};
use crate::observable::Observable;
use crate::shotsim::{sample_series, ShotConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct GroupMember {
    /// Index into `CircuitGroup::circuits`.
    pub circuit: usize,
    pub coefficient: f64,
    pub postselect: Vec<PostSelect>,
    /// Number of noise-effect insertions (identity terms excluded).
    pub order: u8,
    /// Power of τ multiplying this member in the mitigated estimate.
    pub tau_factor: u8,
    /// Insertions as `layer:qubit:tag` items, in application order.
    pub label: String,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GroupKind {
    FirstOrder(Generator),
    Inhomogeneous,
    SecondOrder(Generator),
    Delta1OfDelta1(Generator),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitGroup {
    pub original: Circuit,
    /// Distinct circuits; index 0 is the original.
    pub circuits: Vec<Circuit>,
    pub members: Vec<GroupMember>,
    pub kind: GroupKind,
    pub mode: InsertMode,
    pub order: u8,
    /// Separates the shot streams of different groups over the same circuit.
    pub stream_salt: u64,
}

impl CircuitGroup {
    pub fn n_circuits(&self) -> usize {
        self.circuits.len()
    }

    /// Sum of |c| over members: the sampling overhead of the group.
    pub fn coefficient_norm(&self) -> f64 {
        self.members.iter().map(|m| m.coefficient.abs()).sum()
    }
}

/// Zero-duration insertions on different qubits commute; sorting adjacent runs
/// of them by qubit merges circuits that differ only in that order.
fn canonicalize(c: &mut Circuit) {
    let is_free = |l: &crate::circuit::Layer| l.role == LayerRole::Inserted && l.duration == 0.0 && l.ops.len() == 1;
    let mut i = 0;
    while i < c.layers.len() {
        if !is_free(&c.layers[i]) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < c.layers.len() && is_free(&c.layers[j]) {
            j += 1;
        }
        c.layers[i..j].sort_by_key(|l| l.ops[0].qubits()[0]);
        i = j;
    }
}

struct Builder {
    circuits: Vec<Circuit>,
    index: HashMap<String, usize>,
    members: Vec<GroupMember>,
    member_index: HashMap<(usize, Vec<PostSelect>), usize>,
}

impl Builder {
    fn new(original: &Circuit) -> Result<Self> {
        let mut b = Self { circuits: Vec::new(), index: HashMap::new(), members: Vec::new(), member_index: HashMap::new() };
        b.intern(original.clone())?;
        Ok(b)
    }

    fn intern(&mut self, mut c: Circuit) -> Result<usize> {
        canonicalize(&mut c);
        let key = to_text(&c)?;
        if let Some(&i) = self.index.get(&key) {
            return Ok(i);
        }
        self.circuits.push(c);
        self.index.insert(key, self.circuits.len() - 1);
        Ok(self.circuits.len() - 1)
    }

    fn add(&mut self, c: Circuit, mut post: Vec<PostSelect>, coefficient: f64, order: u8, tau_factor: u8, label: String) -> Result<()> {
        let ci = self.intern(c)?;
        post.sort();
        match self.member_index.get(&(ci, post.clone())) {
            Some(&mi) => {
                let m = &mut self.members[mi];
                m.coefficient += coefficient;
                if m.label.is_empty() {
                    m.label = label;
                }
            }
            None => {
                self.member_index.insert((ci, post.clone()), self.members.len());
                self.members.push(GroupMember { circuit: ci, coefficient, postselect: post, order, tau_factor, label });
            }
        }
        Ok(())
    }

    fn finish(self, original: &Circuit, kind: GroupKind, mode: InsertMode, order: u8, stream_salt: u64) -> CircuitGroup {
        CircuitGroup { original: original.clone(), circuits: self.circuits, members: self.members, kind, mode, order, stream_salt }
    }
}

/// One noise-effect insertion: operator `tag` on `qubit` right after `layer`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Ins {
    layer: usize,
    qubit: usize,
    tag: OpTag,
}

fn label_of(seq: &[Ins]) -> String {
    seq.iter().map(|i| format!("{}:{}:{}", i.layer, i.qubit, i.tag.name())).collect::<Vec<_>>().join(",")
}

/// Realizes insertions (in application order) on `base`.
fn realize(base: &Circuit, seq: &[Ins], mode: InsertMode, opts: GadgetOptions) -> Result<(Circuit, Vec<PostSelect>)> {
    let placements: Vec<Placement> = seq
        .iter()
        .map(|i| Ok(Placement { layer: i.layer, qubit: i.qubit, realization: Realization::of(i.tag, mode)? }))
        .collect::<Result<_>>()?;
    let (c, ancillas) = materialize(base, &placements, opts)?;
    let post = seq
        .iter()
        .zip(&ancillas)
        .filter_map(|(i, a)| a.map(|anc| PostSelect { ancilla: anc, outcome: i.tag.gadget().expect("gadget tag").1 }))
        .collect();
    Ok((c, post))
}

/// Single-insertion expansion over `sites`, with `terms(layer, qubit)` giving
/// already-weighted generator terms. Returns the folded identity weight and
/// the non-identity insertions with their weights; zero-weight terms are
/// dropped.
fn expand_sites(
    c: &Circuit,
    sites: &[usize],
    qubits: usize,
    terms: impl Fn(usize, usize) -> Vec<Term>,
) -> (f64, Vec<(f64, Ins)>) {
    let mut identity = 0.0;
    let mut out = Vec::new();
    for &k in sites {
        for j in 0..qubits {
            for (w, t) in terms(k, j) {
                if w == 0.0 {
                    continue;
                }
                match t {
                    None => identity += w,
                    Some(tag) => out.push((w, Ins { layer: k, qubit: j, tag })),
                }
            }
        }
    }
    debug_assert!(sites.iter().all(|&k| k < c.layers.len()));
    (identity, out)
}

fn scaled_terms(g: Generator, w: f64) -> Vec<Term> {
    rewrite_lindblad_terms(g).into_iter().map(|(c, t)| (c * w, t)).collect()
}

/// First-order group Δ₁ for a homogeneous generator. Each noisy base layer k
/// contributes with weight equal to its duration.
pub fn first_order_group(c: &Circuit, g: Generator, mode: InsertMode) -> Result<CircuitGroup> {
    first_order_group_with(c, g, mode, GadgetOptions::default())
}

pub fn first_order_group_with(c: &Circuit, g: Generator, mode: InsertMode, opts: GadgetOptions) -> Result<CircuitGroup> {
    c.validate()?;
    let sites = c.noisy_sites();
    let (identity, ins) = expand_sites(c, &sites, c.n_register, |k, _| scaled_terms(g, c.layers[k].duration));
    let mut b = Builder::new(c)?;
    b.add(c.clone(), Vec::new(), identity, 0, 1, String::new())?;
    for (w, i) in ins {
        let (circ, post) = realize(c, &[i], mode, opts)?;
        b.add(circ, post, w, 1, 1, label_of(&[i]))?;
    }
    Ok(b.finish(c, GroupKind::FirstOrder(g), mode, 1, 1))
}

/// First-order group for per-qubit T1/T2 relaxation with physical layer
/// durations. Weights: Z and identity ±Δt_k/(2T2_j), σ⁻ and P¹ ±Δt_k/T1_j.
/// The external τ multiplier of this group is 1.
pub fn inhomogeneous_group(c: &Circuit, coherence: &Coherence, mode: InsertMode) -> Result<CircuitGroup> {
    c.validate()?;
    if coherence.t1.len() < c.n_register {
        return Err(QemError::DimensionMismatch { expected: c.n_register, found: coherence.t1.len() });
    }
    let sites = c.noisy_sites();
    let (identity, ins) = expand_sites(c, &sites, c.n_register, |k, j| {
        let dt = c.layers[k].duration;
        let (z, a) = (dt / (2.0 * coherence.t2(j)), dt / coherence.t1(j));
        vec![(-z, None), (z, Some(OpTag::Z)), (a, Some(OpTag::SigmaMinus)), (-a, Some(OpTag::P1))]
    });
    let opts = GadgetOptions::default();
    let mut b = Builder::new(c)?;
    b.add(c.clone(), Vec::new(), identity, 0, 0, String::new())?;
    for (w, i) in ins {
        let (circ, post) = realize(c, &[i], mode, opts)?;
        b.add(circ, post, w, 1, 0, label_of(&[i]))?;
    }
    Ok(b.finish(c, GroupKind::Inhomogeneous, mode, 1, 4))
}

/// Second-order group Δ₂ = Σ_k w_k² L_k L_k + 2 Σ_{k₁>k₂} w_{k₁} w_{k₂} L_{k₁} L_{k₂},
/// each L a sum over register qubits.
pub fn second_order_group(c: &Circuit, g: Generator, mode: InsertMode) -> Result<CircuitGroup> {
    c.validate()?;
    let opts = GadgetOptions::default();
    let sites = c.noisy_sites();
    let terms = rewrite_lindblad_terms(g);
    let nq = c.n_register;
    // (weight, qubit, tag) choices available at one layer.
    let per_layer = |k: usize| -> Vec<(f64, usize, Option<OpTag>)> {
        let w = c.layers[k].duration;
        (0..nq).flat_map(|j| terms.iter().map(move |&(a, t)| (a * w, j, t))).collect()
    };
    let mut b = Builder::new(c)?;
    let mut emit = |coef: f64, first: (usize, usize, Option<OpTag>), second: (usize, usize, Option<OpTag>)| -> Result<()> {
        if coef == 0.0 {
            return Ok(());
        }
        let seq: Vec<Ins> = [first, second]
            .iter()
            .filter_map(|&(layer, qubit, t)| t.map(|tag| Ins { layer, qubit, tag }))
            .collect();
        let (circ, post) = realize(c, &seq, mode, opts)?;
        b.add(circ, post, coef, seq.len() as u8, 2, label_of(&seq))
    };
    for (si, &k1) in sites.iter().enumerate() {
        let l1 = per_layer(k1);
        for &(w1, j1, t1) in &l1 {
            for &(w2, j2, t2) in &l1 {
                emit(w1 * w2, (k1, j2, t2), (k1, j1, t1))?;
            }
        }
        for &k2 in &sites[..si] {
            for &(w2, j2, t2) in &per_layer(k2) {
                for &(w1, j1, t1) in &l1 {
                    emit(2.0 * w1 * w2, (k2, j2, t2), (k1, j1, t1))?;
                }
            }
        }
    }
    Ok(b.finish(c, GroupKind::SecondOrder(g), mode, 2, 2))
}

/// Δ₁ applied to every member of a first-order group. The inner expansion
/// runs over every nonzero-duration layer of the member circuit (gadget layers
/// included) and every qubit (ancillas included), since the noisy evaluation
/// of the outer group is exposed to noise there too.
pub fn delta1_of_delta1_group(first: &CircuitGroup) -> Result<CircuitGroup> {
    let g = match first.kind {
        GroupKind::FirstOrder(g) => g,
        _ => return Err(QemError::InvalidParameter("Δ₁∘Δ₁ needs a homogeneous first-order group".into())),
    };
    let opts = GadgetOptions::default();
    let mut b = Builder::new(&first.original)?;
    for m in &first.members {
        let mc = &first.circuits[m.circuit];
        let sites: Vec<usize> = mc.layers.iter().enumerate().filter(|(_, l)| l.duration > 0.0).map(|(i, _)| i).collect();
        let (identity, ins) = expand_sites(mc, &sites, mc.n_qubits, |k, _| scaled_terms(g, mc.layers[k].duration));
        b.add(mc.clone(), m.postselect.clone(), m.coefficient * identity, m.order, 2, m.label.clone())?;
        for (w, i) in ins {
            let (circ, post) = realize(mc, &[i], first.mode, opts)?;
            let mut all = m.postselect.clone();
            all.extend(post);
            let label = if m.label.is_empty() { label_of(&[i]) } else { format!("{};{}", m.label, label_of(&[i])) };
            b.add(circ, all, m.coefficient * w, m.order + 1, 2, label)?;
        }
    }
    Ok(b.finish(&first.original, GroupKind::Delta1OfDelta1(g), first.mode, 2, 3))
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Engine {
    #[default]
    Exact,
    Shots(ShotConfig),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupValue {
    /// Σ coefficient · member value, summed in member order.
    pub value: f64,
    pub member_values: Vec<f64>,
    /// Per-repetition totals under the shot engine.
    pub samples: Option<Vec<f64>>,
}

fn rotated(c: &Circuit, o: &Observable) -> Result<Circuit> {
    o.measurement_circuit(c, 0.0)
}

fn diagonal_of(o: &Observable) -> Observable {
    Observable { x_qubits: Vec::new(), ..o.clone() }
}

/// Evaluates every member under `model`. X-type observable factors are read
/// out through a noiseless basis change appended to each member circuit.
pub fn evaluate_group(g: &CircuitGroup, o: &Observable, model: &NoiseModel, engine: Engine, exec: Exec) -> Result<GroupValue> {
    if o.n_qubits != g.original.n_register {
        return Err(QemError::DimensionMismatch { expected: 1 << g.original.n_register, found: o.diag.len() });
    }
    let od = diagonal_of(o);
    let mut by_circuit: Vec<Vec<usize>> = vec![Vec::new(); g.circuits.len()];
    for (i, m) in g.members.iter().enumerate() {
        by_circuit[m.circuit].push(i);
    }
    let idx: Vec<usize> = (0..g.circuits.len()).collect();
    type Row = Vec<(usize, f64, Option<Vec<f64>>)>;
    let rows: Vec<Row> = exec.try_map(&idx, |&ci| -> Result<Row> {
        if by_circuit[ci].is_empty() {
            return Ok(Vec::new());
        }
        let c = rotated(&g.circuits[ci], o)?;
        let r = evolve(&c, model, None)?;
        by_circuit[ci]
            .iter()
            .map(|&mi| {
                let probs = register_probabilities(&r, c.n_register, &g.members[mi].postselect);
                match engine {
                    Engine::Exact => Ok((mi, od.value(&probs), None)),
                    Engine::Shots(cfg) => {
                        let s = sample_series(&probs, &od, &cfg, (g.stream_salt << 40) | mi as u64)?;
                        Ok((mi, s.mean, Some(s.values)))
                    }
                }
            })
            .collect()
    })?;
    let mut member_values = vec![0.0; g.members.len()];
    let mut member_samples: Vec<Option<Vec<f64>>> = vec![None; g.members.len()];
    for (mi, v, s) in rows.into_iter().flatten() {
        member_values[mi] = v;
        member_samples[mi] = s;
    }
    let value = g.members.iter().zip(&member_values).map(|(m, v)| m.coefficient * v).sum();
    let samples = match engine {
        Engine::Exact => None,
        Engine::Shots(cfg) => Some(
            (0..cfg.n_samp)
                .map(|s| {
                    g.members
                        .iter()
                        .zip(&member_samples)
                        .map(|(m, v)| m.coefficient * v.as_ref().expect("sampled")[s])
                        .sum()
                })
                .collect(),
        ),
    };
    Ok(GroupValue { value, member_values, samples })
}

/// ⟨O⟩ of Δ₁ρ evaluated noisily, with the default executor.
pub fn delta1_expectation(g: &CircuitGroup, o: &Observable, model: &NoiseModel, engine: Engine) -> Result<f64> {
    Ok(evaluate_group(g, o, model, engine, Exec::default())?.value)
}

pub fn mitigate_first_order(noisy: f64, delta1: f64, tau: f64) -> f64 {
    noisy - tau * delta1
}

pub fn mitigate_second_order(noisy: f64, delta1: f64, delta2: f64, delta1_of_delta1: f64, tau: f64) -> f64 {
    noisy - tau * delta1 - 0.5 * tau * tau * delta2 + tau * tau * delta1_of_delta1
}

/// Second-order correction alone, without the −τΔ₁ term.
pub fn mitigate_second_order_only(noisy: f64, delta2: f64, delta1_of_delta1: f64, tau: f64) -> f64 {
    noisy - 0.5 * tau * tau * delta2 + tau * tau * delta1_of_delta1
}

pub fn composite_mitigate(noisy: f64, gad_delta1: f64, pd_delta1: f64, tau: f64, tau_pd: f64) -> f64 {
    noisy - tau * gad_delta1 - tau_pd * pd_delta1
}

/// M_1st/2nd = |(⟨O⟩_2nd − ⟨O⟩_2nd,only)/τ|; `None` at τ = 0.
pub fn m_first_second(mitigated_2nd: f64, mitigated_2nd_only: f64, tau: f64) -> Option<f64> {
    (tau > 0.0).then(|| ((mitigated_2nd - mitigated_2nd_only) / tau).abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QemConfig {
    pub order: u8,
    pub mode: InsertMode,
    /// Basis change for X-type observables; a noisy rotation becomes part of
    /// the mitigated circuit.
    pub rotation: Rotation,
    pub engine: Engine,
    pub exec: Exec,
}

impl Default for QemConfig {
    fn default() -> Self {
        Self { order: 1, mode: InsertMode::Direct, rotation: Rotation::default(), engine: Engine::Exact, exec: Exec::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QemEstimate {
    pub ideal: Option<f64>,
    pub noisy: f64,
    pub mitigated: f64,
    pub delta1: f64,
    pub delta2: Option<f64>,
    pub delta1_of_delta1: Option<f64>,
    /// Multiplier of Δ₁ (1 for the inhomogeneous model).
    pub tau: f64,
    pub tau_pd: Option<f64>,
    pub pd_delta1: Option<f64>,
    pub m_first_second: Option<f64>,
    pub group_size: usize,
    /// Per-repetition mitigated values under the shot engine.
    pub samples: Option<Vec<f64>>,
    /// Per-repetition noisy values under the shot engine.
    pub noisy_samples: Option<Vec<f64>>,
}

/// Generator and τ of a homogeneous single-channel model.
pub fn generator_of(model: &NoiseModel) -> Option<(Generator, f64)> {
    if model.coherence.is_some() {
        return None;
    }
    match model.kind {
        NoiseKind::None => Some((Generator::Ad, 0.0)),
        NoiseKind::Ad => Some((Generator::Ad, model.tau)),
        NoiseKind::Gad => Some((Generator::Gad { n_bar: model.n_bar }, model.tau)),
        NoiseKind::Pd => Some((Generator::Pd, model.tau_pd)),
        NoiseKind::Depolarizing => Some((Generator::Pauli, model.tau_depol())),
        NoiseKind::Adpd => None,
    }
}

/// Circuit actually run for `o`: X factors add a rotation layer.
pub fn measured_circuit(c: &Circuit, o: &Observable, rotation: Rotation) -> Result<Circuit> {
    o.measurement_circuit(c, rotation.duration())
}

fn add_samples(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

/// Full pipeline: ideal and noisy values, the groups required by the model
/// and order, and the mitigated estimate.
pub fn mitigate(c: &Circuit, o: &Observable, model: &NoiseModel, cfg: &QemConfig) -> Result<QemEstimate> {
    let base = measured_circuit(c, o, cfg.rotation)?;
    let od = diagonal_of(o);
    let ideal = {
        let r = evolve(&base, &NoiseModel::none(), None)?;
        od.value(&register_probabilities(&r, base.n_register, &[]))
    };
    let run = |g: &CircuitGroup| evaluate_group(g, &od, model, cfg.engine, cfg.exec);
    if let Some(coh) = &model.coherence {
        if cfg.order != 1 {
            return Err(QemError::Unsupported("only first-order QEM is available for per-qubit T1/T2 noise".into()));
        }
        let g = inhomogeneous_group(&base, coh, cfg.mode)?;
        let v = run(&g)?;
        let (noisy, noisy_samples) = noisy_estimate(&g, &v, &od, model, cfg.engine)?;
        return Ok(QemEstimate {
            ideal: Some(ideal),
            noisy,
            mitigated: mitigate_first_order(noisy, v.value, 1.0),
            delta1: v.value,
            delta2: None,
            delta1_of_delta1: None,
            tau: 1.0,
            tau_pd: None,
            pd_delta1: None,
            m_first_second: None,
            group_size: g.n_circuits(),
            samples: noisy_samples.as_ref().map(|n| add_samples(n, v.samples.as_ref().expect("shot engine"), -1.0)),
            noisy_samples,
        });
    }
    if model.kind == NoiseKind::Adpd {
        if cfg.order != 1 {
            return Err(QemError::Unsupported("second order is available for single-channel models only".into()));
        }
        let gg = first_order_group(&base, Generator::Gad { n_bar: model.n_bar }, cfg.mode)?;
        let mut gp = first_order_group(&base, Generator::Pd, cfg.mode)?;
        gp.stream_salt = 5;
        let (vg, vp) = (run(&gg)?, run(&gp)?);
        let (noisy, noisy_samples) = noisy_estimate(&gg, &vg, &od, model, cfg.engine)?;
        let samples = noisy_samples.as_ref().map(|n| {
            let s = add_samples(n, vg.samples.as_ref().expect("shot engine"), -model.tau);
            add_samples(&s, vp.samples.as_ref().expect("shot engine"), -model.tau_pd)
        });
        return Ok(QemEstimate {
            ideal: Some(ideal),
            noisy,
            mitigated: composite_mitigate(noisy, vg.value, vp.value, model.tau, model.tau_pd),
            delta1: vg.value,
            delta2: None,
            delta1_of_delta1: None,
            tau: model.tau,
            tau_pd: Some(model.tau_pd),
            pd_delta1: Some(vp.value),
            m_first_second: None,
            group_size: gg.n_circuits(),
            samples,
            noisy_samples,
        });
    }
    let (gen, tau) = generator_of(model).expect("homogeneous model");
    let g1 = first_order_group(&base, gen, cfg.mode)?;
    let v1 = run(&g1)?;
    let (noisy, noisy_samples) = noisy_estimate(&g1, &v1, &od, model, cfg.engine)?;
    match cfg.order {
        1 => Ok(QemEstimate {
            ideal: Some(ideal),
            noisy,
            mitigated: mitigate_first_order(noisy, v1.value, tau),
            delta1: v1.value,
            delta2: None,
            delta1_of_delta1: None,
            tau,
            tau_pd: None,
            pd_delta1: None,
            m_first_second: None,
            group_size: g1.n_circuits(),
            samples: noisy_samples.as_ref().map(|n| add_samples(n, v1.samples.as_ref().expect("shot engine"), -tau)),
            noisy_samples,
        }),
        2 => {
            let g2 = second_order_group(&base, gen, cfg.mode)?;
            let v2 = run(&g2)?;
            let v11 = match cfg.mode {
                InsertMode::Direct => v2.clone(),
                InsertMode::Ancilla => run(&delta1_of_delta1_group(&g1)?)?,
            };
            let mitigated = mitigate_second_order(noisy, v1.value, v2.value, v11.value, tau);
            let only = mitigate_second_order_only(noisy, v2.value, v11.value, tau);
            let samples = noisy_samples.as_ref().map(|n| {
                let s = add_samples(n, v1.samples.as_ref().expect("shots"), -tau);
                let s = add_samples(&s, v2.samples.as_ref().expect("shots"), -0.5 * tau * tau);
                add_samples(&s, v11.samples.as_ref().expect("shots"), tau * tau)
            });
            Ok(QemEstimate {
                ideal: Some(ideal),
                noisy,
                mitigated,
                delta1: v1.value,
                delta2: Some(v2.value),
                delta1_of_delta1: Some(v11.value),
                tau,
                tau_pd: None,
                pd_delta1: None,
                m_first_second: m_first_second(mitigated, only, tau),
                group_size: g1.n_circuits(),
                samples,
                noisy_samples,
            })
        }
        p => Err(QemError::Unsupported(format!("QEM order {p}"))),
    }
}

/// Noisy value of the original circuit. Under the exact engine it is read
/// from the group; under shots it gets its own sample stream.
fn noisy_estimate(g: &CircuitGroup, v: &GroupValue, od: &Observable, model: &NoiseModel, engine: Engine) -> Result<(f64, Option<Vec<f64>>)> {
    match engine {
        Engine::Exact => {
            let mi = g.members.iter().position(|m| m.circuit == 0 && m.postselect.is_empty()).expect("original member");
            Ok((v.member_values[mi], None))
        }
        Engine::Shots(cfg) => {
            let r = evolve(&g.original, model, None)?;
            let probs = register_probabilities(&r, g.original.n_register, &[]);
            let s = sample_series(&probs, od, &cfg, u64::MAX)?;
            Ok((s.mean, Some(s.values)))
        }
    }
}

/// Human-readable listing of a group: members, coefficients, insertions and
/// the text form of every circuit.
pub fn manifest(g: &CircuitGroup) -> Result<String> {
    let mut s = String::new();
    let mode = match g.mode {
        InsertMode::Direct => "direct",
        InsertMode::Ancilla => "ancilla",
    };
    writeln!(s, "# group {:?} order {} mode {}", g.kind, g.order, mode).expect("write to string");
    writeln!(s, "circuits {}", g.circuits.len()).expect("write to string");
    writeln!(s, "members {}", g.members.len()).expect("write to string");
    for (i, m) in g.members.iter().enumerate() {
        let post: Vec<String> = m.postselect.iter().map(|p| format!("{}={}", p.ancilla, p.outcome)).collect();
        writeln!(
            s,
            "member {i} circuit {} coeff {:?} order {} post [{}] ins [{}]",
            m.circuit,
            m.coefficient,
            m.order,
            post.join(" "),
            m.label
        )
        .expect("write to string");
    }
    for (i, c) in g.circuits.iter().enumerate() {
        writeln!(s, "\n## circuit {i}").expect("write to string");
        s.push_str(&to_text(c)?);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Gate, GateKind};

    fn x_circuit() -> Circuit {
        Circuit::from_layers(1, vec![(vec![Gate::one(GateKind::X, 0)], 1.0)]).unwrap()
    }

    #[test]
    fn single_layer_group_has_four_circuits() {
        let g = first_order_group(&x_circuit(), Generator::Ad, InsertMode::Direct).unwrap();
        assert_eq!(g.n_circuits(), 4);
        assert_eq!(g.members[0].coefficient, -0.25);
    }

    #[test]
    fn zero_noise_delta1_of_x() {
        let g = first_order_group(&x_circuit(), Generator::Ad, InsertMode::Direct).unwrap();
        let z = Observable::parse("Z0", 1).unwrap();
        let d = delta1_expectation(&g, &z, &NoiseModel::none(), Engine::Exact).unwrap();
        assert!((d - 2.0).abs() < 1e-14);
    }

    #[test]
    fn arithmetic() {
        assert!((mitigate_first_order(0.9, 2.0, 0.05) - 0.8).abs() < 1e-15);
        assert_eq!(mitigate_second_order(0.7, 1.0, 0.0, 0.0, 0.1), mitigate_first_order(0.7, 1.0, 0.1));
        assert_eq!(composite_mitigate(0.7, 1.0, 3.0, 0.1, 0.0), mitigate_first_order(0.7, 1.0, 0.1));
    }
}
