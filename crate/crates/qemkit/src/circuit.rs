//! Layered circuit representation, gate matrices, native decompositions and
//! insertion of noise-effect operators (directly or through ancilla gadgets).

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

use crate::error::{QemError, Result};
use crate::linalg::{embed, ComplexMatrix, SuperOp, C64, I, ZERO};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateKind {
    I,
    X,
    Y,
    Z,
    H,
    SX,
    Rx(f64),
    Ry(f64),
    Rz(f64),
    CX,
    CZ,
    CH,
    CRy(f64),
    Toffoli,
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::CX | GateKind::CZ | GateKind::CH | GateKind::CRy(_) => 2,
            GateKind::Toffoli => 3,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::I => "I",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::H => "H",
            GateKind::SX => "SX",
            GateKind::Rx(_) => "RX",
            GateKind::Ry(_) => "RY",
            GateKind::Rz(_) => "RZ",
            GateKind::CX => "CX",
            GateKind::CZ => "CZ",
            GateKind::CH => "CH",
            GateKind::CRy(_) => "CRY",
            GateKind::Toffoli => "CCX",
        }
    }

    fn angle(&self) -> Option<f64> {
        match *self {
            GateKind::Rx(t) | GateKind::Ry(t) | GateKind::Rz(t) | GateKind::CRy(t) => Some(t),
            _ => None,
        }
    }

    /// Matrix on the gate's own targets, first target most significant.
    pub fn matrix(&self) -> ComplexMatrix {
        let r = FRAC_1_SQRT_2;
        match *self {
            GateKind::I => ComplexMatrix::real(&[&[1.0, 0.0], &[0.0, 1.0]]),
            GateKind::X => pauli_x(),
            GateKind::Y => pauli_y(),
            GateKind::Z => pauli_z(),
            GateKind::H => ComplexMatrix::real(&[&[r, r], &[r, -r]]),
            GateKind::SX => {
                let a = C64::new(0.5, 0.5);
                let b = C64::new(0.5, -0.5);
                ComplexMatrix::complex(&[&[a, b], &[b, a]])
            }
            GateKind::Rx(t) => {
                let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
                ComplexMatrix::complex(&[&[C64::new(c, 0.0), C64::new(0.0, -s)], &[C64::new(0.0, -s), C64::new(c, 0.0)]])
            }
            GateKind::Ry(t) => ry(t),
            GateKind::Rz(t) => {
                let e = C64::from_polar(1.0, t / 2.0);
                ComplexMatrix::complex(&[&[e.conj(), ZERO], &[ZERO, e]])
            }
            GateKind::CX => controlled(&pauli_x()),
            GateKind::CZ => controlled(&pauli_z()),
            GateKind::CH => controlled(&GateKind::H.matrix()),
            GateKind::CRy(t) => controlled(&ry(t)),
            GateKind::Toffoli => controlled(&controlled(&pauli_x())),
        }
    }
}

fn ry(t: f64) -> ComplexMatrix {
    let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
    ComplexMatrix::real(&[&[c, -s], &[s, c]])
}

fn controlled(u: &ComplexMatrix) -> ComplexMatrix {
    let d = u.dim();
    let mut m = ComplexMatrix::identity(2 * d).expect("power of two");
    for i in 0..d {
        for j in 0..d {
            m.set(d + i, d + j, u.get(i, j));
        }
    }
    m
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::real(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::complex(&[&[ZERO, -I], &[I, ZERO]])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::real(&[&[1.0, 0.0], &[0.0, -1.0]])
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    /// Controls first, then the target.
    pub targets: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>) -> Result<Self> {
        let g = Self { kind, targets };
        g.validate()?;
        Ok(g)
    }

    pub fn one(kind: GateKind, q: usize) -> Self {
        Self::new(kind, vec![q]).expect("single-qubit gate")
    }

    pub fn cx(c: usize, t: usize) -> Self {
        Self::new(GateKind::CX, vec![c, t]).expect("distinct qubits")
    }

    pub fn two(kind: GateKind, c: usize, t: usize) -> Self {
        Self::new(kind, vec![c, t]).expect("distinct qubits")
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets.len() != self.kind.arity() {
            return Err(QemError::InvalidGate(format!(
                "{} expects {} targets, got {}",
                self.kind.name(),
                self.kind.arity(),
                self.targets.len()
            )));
        }
        for (i, q) in self.targets.iter().enumerate() {
            if self.targets[..i].contains(q) {
                return Err(QemError::InvalidGate(format!("{} repeats qubit {q}", self.kind.name())));
            }
        }
        Ok(())
    }

    pub fn matrix(&self) -> ComplexMatrix {
        self.kind.matrix()
    }
}

/// Full-register unitary of a single gate.
pub fn gate_unitary(g: &Gate, n_qubits: usize) -> Result<ComplexMatrix> {
    g.validate()?;
    embed(&g.matrix(), &g.targets, n_qubits)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    #[default]
    Direct,
    Native,
}

/// Rewrites composite gates into CX plus single-qubit rotations. The returned
/// list is in application order. `Direct` returns the gate unchanged.
pub fn decompose(g: &Gate, style: Style) -> Result<Vec<Gate>> {
    g.validate()?;
    if style == Style::Direct {
        return Ok(vec![g.clone()]);
    }
    let t = &g.targets;
    let one = Gate::one;
    Ok(match g.kind {
        GateKind::CZ => vec![one(GateKind::H, t[1]), Gate::cx(t[0], t[1]), one(GateKind::H, t[1])],
        GateKind::CH => vec![
            one(GateKind::Ry(FRAC_PI_4), t[1]),
            Gate::cx(t[0], t[1]),
            one(GateKind::Ry(-FRAC_PI_4), t[1]),
        ],
        GateKind::CRy(th) => vec![
            Gate::cx(t[0], t[1]),
            one(GateKind::Ry(-th / 2.0), t[1]),
            Gate::cx(t[0], t[1]),
            one(GateKind::Ry(th / 2.0), t[1]),
        ],
        GateKind::Toffoli => {
            let (a, b, c) = (t[0], t[1], t[2]);
            let tt = |q| one(GateKind::Rz(FRAC_PI_4), q);
            let td = |q| one(GateKind::Rz(-FRAC_PI_4), q);
            vec![
                one(GateKind::H, c),
                Gate::cx(b, c),
                td(c),
                Gate::cx(a, c),
                tt(c),
                Gate::cx(b, c),
                td(c),
                Gate::cx(a, c),
                tt(b),
                tt(c),
                one(GateKind::H, c),
                Gate::cx(a, b),
                tt(a),
                td(b),
                Gate::cx(a, b),
            ]
        }
        _ => return Err(QemError::Unsupported(format!("no decomposition for {}", g.kind.name()))),
    })
}

/// Operators inserted by the noise-effect circuit groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpTag {
    X,
    Y,
    Z,
    SigmaMinus,
    SigmaPlus,
    P0,
    P1,
}

impl OpTag {
    pub fn matrix(&self) -> ComplexMatrix {
        match self {
            OpTag::X => pauli_x(),
            OpTag::Y => pauli_y(),
            OpTag::Z => pauli_z(),
            OpTag::SigmaMinus => ComplexMatrix::real(&[&[0.0, 1.0], &[0.0, 0.0]]),
            OpTag::SigmaPlus => ComplexMatrix::real(&[&[0.0, 0.0], &[1.0, 0.0]]),
            OpTag::P0 => ComplexMatrix::real(&[&[1.0, 0.0], &[0.0, 0.0]]),
            OpTag::P1 => ComplexMatrix::real(&[&[0.0, 0.0], &[0.0, 1.0]]),
        }
    }

    pub fn is_unitary(&self) -> bool {
        matches!(self, OpTag::X | OpTag::Y | OpTag::Z)
    }

    pub fn name(&self) -> &'static str {
        match self {
            OpTag::X => "X",
            OpTag::Y => "Y",
            OpTag::Z => "Z",
            OpTag::SigmaMinus => "SM",
            OpTag::SigmaPlus => "SP",
            OpTag::P0 => "P0",
            OpTag::P1 => "P1",
        }
    }

    /// Gadget and post-selected ancilla outcome realizing this operator at ϑ = π.
    pub fn gadget(&self) -> Option<(Gadget, u8)> {
        match self {
            OpTag::SigmaMinus => Some((Gadget::A, 1)),
            OpTag::P0 => Some((Gadget::A, 0)),
            OpTag::P1 => Some((Gadget::B, 0)),
            OpTag::SigmaPlus => Some((Gadget::B, 1)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Gate(Gate),
    /// ρ → SρS† with a possibly non-unitary single-qubit S.
    Apply { tag: OpTag, qubit: usize },
    /// Trace out and reinitialize to |0⟩.
    Reset(usize),
    /// Arbitrary single-qubit linear map; not serializable.
    Linear { map: SuperOp, qubit: usize, label: String },
}

impl Op {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Op::Gate(g) => g.targets.clone(),
            Op::Apply { qubit, .. } | Op::Reset(qubit) | Op::Linear { qubit, .. } => vec![*qubit],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LayerRole {
    /// Part of the circuit being mitigated; a site for noise-effect insertions.
    Base,
    /// Direct insertion of a noise-effect operator.
    Inserted,
    /// Ancilla gadget realizing an insertion.
    Gadget,
    /// Quasiprobability basis operation.
    Recovery,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub ops: Vec<Op>,
    /// Exposure time; 1.0 is one homogeneous time step, 0 means no noise.
    pub duration: f64,
    pub role: LayerRole,
}

impl Layer {
    pub fn gates(gates: Vec<Gate>, duration: f64) -> Self {
        Self { ops: gates.into_iter().map(Op::Gate).collect(), duration, role: LayerRole::Base }
    }

    pub fn is_unitary(&self) -> bool {
        self.ops.iter().all(|o| match o {
            Op::Gate(_) => true,
            Op::Apply { tag, .. } => tag.is_unitary(),
            _ => false,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    /// Register qubits are 0..n_register; higher indices are ancillas.
    pub n_register: usize,
    pub layers: Vec<Layer>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, n_register: n_qubits, layers: Vec::new() }
    }

    /// Builds a circuit from (gates, duration) layers, validating targets.
    pub fn from_layers(n_qubits: usize, layers: Vec<(Vec<Gate>, f64)>) -> Result<Self> {
        let mut c = Self::new(n_qubits);
        for (g, d) in layers {
            c.push(g, d)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gates: Vec<Gate>, duration: f64) -> Result<()> {
        self.push_layer(Layer::gates(gates, duration))
    }

    pub fn push_layer(&mut self, layer: Layer) -> Result<()> {
        self.check_layer(&layer)?;
        self.layers.push(layer);
        Ok(())
    }

    fn check_layer(&self, layer: &Layer) -> Result<()> {
        if !(layer.duration >= 0.0) || !layer.duration.is_finite() {
            return Err(QemError::InvalidParameter(format!("layer duration {}", layer.duration)));
        }
        let mut seen = Vec::new();
        for op in &layer.ops {
            if let Op::Gate(g) = op {
                g.validate()?;
            }
            for q in op.qubits() {
                if q >= self.n_qubits {
                    return Err(QemError::IndexOutOfRange { index: q, len: self.n_qubits });
                }
                if seen.contains(&q) {
                    return Err(QemError::InvalidGate(format!("qubit {q} used twice in one layer")));
                }
                seen.push(q);
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.layers.iter().try_for_each(|l| self.check_layer(l))
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Indices of base layers with nonzero duration: the insertion sites.
    pub fn noisy_sites(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.role == LayerRole::Base && l.duration > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn effective_depth(&self) -> usize {
        self.noisy_sites().len()
    }

    /// Returns a copy whose composite gates are rewritten by `decompose`.
    /// A layer expands into as many layers as its longest decomposition; the
    /// i-th sub-layer carries the i-th gate of every expansion.
    pub fn decomposed(&self, style: Style) -> Result<Self> {
        let mut out = Self { layers: Vec::new(), ..self.clone() };
        for layer in &self.layers {
            let mut parts: Vec<Vec<Op>> = Vec::new();
            for op in &layer.ops {
                let seq: Vec<Op> = match op {
                    Op::Gate(g) if matches!(g.kind, GateKind::CZ | GateKind::CH | GateKind::CRy(_) | GateKind::Toffoli) => {
                        decompose(g, style)?.into_iter().map(Op::Gate).collect()
                    }
                    other => vec![other.clone()],
                };
                parts.push(seq);
            }
            let len = parts.iter().map(Vec::len).max().unwrap_or(1).max(1);
            for i in 0..len {
                let ops = parts.iter().filter_map(|p| p.get(i).cloned()).collect();
                out.layers.push(Layer { ops, duration: layer.duration, role: layer.role });
            }
        }
        Ok(out)
    }

    /// Appends the basis change that turns an X-type measurement on `qubits`
    /// into a Z-type one.
    pub fn with_rotation(&self, qubits: &[usize], duration: f64) -> Result<Self> {
        let mut c = self.clone();
        if !qubits.is_empty() {
            c.push(qubits.iter().map(|&q| Gate::one(GateKind::H, q)).collect(), duration)?;
        }
        Ok(c)
    }
}

/// U_d ⋯ U_1 for a circuit without non-unitary operations.
pub fn circuit_unitary(c: &Circuit) -> Result<ComplexMatrix> {
    let dim = 1usize << c.n_qubits;
    let mut u = ComplexMatrix::identity(dim)?;
    for layer in &c.layers {
        for op in &layer.ops {
            let m = match op {
                Op::Gate(g) => gate_unitary(g, c.n_qubits)?,
                Op::Apply { tag, qubit } if tag.is_unitary() => embed(&tag.matrix(), &[*qubit], c.n_qubits)?,
                _ => return Err(QemError::NonUnitary),
            };
            u = m.matmul(&u)?;
        }
    }
    Ok(u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gadget {
    /// CRy(ϑ)[Q_j; Q_a] then CX[Q_a; Q_j].
    A,
    /// CRy(ϑ)[Q_j; Q_a], X on Q_a, then CX[Q_a; Q_j].
    B,
}

impl Gadget {
    pub fn layers(&self, qubit: usize, ancilla: usize, theta: f64, duration: f64) -> Vec<Layer> {
        let mut ls = vec![Layer::gates(vec![Gate::two(GateKind::CRy(theta), qubit, ancilla)], duration)];
        if *self == Gadget::B {
            ls.push(Layer::gates(vec![Gate::one(GateKind::X, ancilla)], duration));
        }
        ls.push(Layer::gates(vec![Gate::cx(ancilla, qubit)], duration));
        for l in &mut ls {
            l.role = LayerRole::Gadget;
        }
        ls
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InsertMode {
    #[default]
    Direct,
    Ancilla,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Insertion {
    /// Index into `Circuit::layers`; the operator acts right after this layer.
    pub layer: usize,
    pub qubit: usize,
    pub tag: OpTag,
    pub mode: InsertMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PostSelect {
    pub ancilla: usize,
    pub outcome: u8,
}

/// How one insertion is physically realized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Realization {
    Direct(OpTag),
    Gadget(Gadget),
}

impl Realization {
    pub fn of(tag: OpTag, mode: InsertMode) -> Result<Self> {
        match mode {
            InsertMode::Direct => Ok(Realization::Direct(tag)),
            InsertMode::Ancilla if tag.is_unitary() => Ok(Realization::Direct(tag)),
            InsertMode::Ancilla => Ok(Realization::Gadget(tag.gadget().expect("non-unitary tags have gadgets").0)),
        }
    }
}

/// One placed insertion: after layer `layer` (index into the base circuit).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Placement {
    pub layer: usize,
    pub qubit: usize,
    pub realization: Realization,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GadgetOptions {
    pub theta: f64,
    /// Duration of each gadget layer.
    pub duration: f64,
}

impl Default for GadgetOptions {
    fn default() -> Self {
        Self { theta: PI, duration: 1.0 }
    }
}

/// Builds the circuit for a sequence of placements given in application order.
/// Placements after the same layer act in list order. Returns the circuit and,
/// for each placement, the ancilla it allocated (gadgets only).
pub fn materialize(base: &Circuit, seq: &[Placement], opts: GadgetOptions) -> Result<(Circuit, Vec<Option<usize>>)> {
    for p in seq {
        if p.layer >= base.layers.len() {
            return Err(QemError::IndexOutOfRange { index: p.layer, len: base.layers.len() });
        }
        if p.qubit >= base.n_qubits {
            return Err(QemError::IndexOutOfRange { index: p.qubit, len: base.n_qubits });
        }
    }
    let n_gadgets = seq.iter().filter(|p| matches!(p.realization, Realization::Gadget(_))).count();
    let mut ancillas = Vec::with_capacity(seq.len());
    let mut next = base.n_qubits;
    for p in seq {
        if matches!(p.realization, Realization::Gadget(_)) {
            ancillas.push(Some(next));
            next += 1;
        } else {
            ancillas.push(None);
        }
    }
    let mut out = Circuit { n_qubits: base.n_qubits + n_gadgets, n_register: base.n_register, layers: Vec::new() };
    for (li, layer) in base.layers.iter().enumerate() {
        out.layers.push(layer.clone());
        for (p, anc) in seq.iter().zip(&ancillas).filter(|(p, _)| p.layer == li) {
            match (p.realization, anc) {
                (Realization::Direct(tag), _) => out.layers.push(Layer {
                    ops: vec![tag_op(tag, p.qubit)],
                    duration: 0.0,
                    role: LayerRole::Inserted,
                }),
                (Realization::Gadget(g), Some(a)) => {
                    out.layers.extend(g.layers(p.qubit, *a, opts.theta, opts.duration));
                }
                _ => unreachable!("gadget placements always own an ancilla"),
            }
        }
    }
    Ok((out, ancillas))
}

/// Pauli tags become ordinary gates so the text form round-trips.
fn tag_op(tag: OpTag, qubit: usize) -> Op {
    match tag {
        OpTag::X => Op::Gate(Gate::one(GateKind::X, qubit)),
        OpTag::Y => Op::Gate(Gate::one(GateKind::Y, qubit)),
        OpTag::Z => Op::Gate(Gate::one(GateKind::Z, qubit)),
        _ => Op::Apply { tag, qubit },
    }
}

/// Inserts one noise-effect operator after layer `ins.layer`. In ancilla mode
/// the operator is realized by a gadget on a fresh ancilla at ϑ = π and the
/// returned post-selection picks the branch carrying the operator.
pub fn apply_insertion(c: &Circuit, ins: &Insertion) -> Result<(Circuit, Option<PostSelect>)> {
    let realization = Realization::of(ins.tag, ins.mode)?;
    let placement = Placement { layer: ins.layer, qubit: ins.qubit, realization };
    let (circ, anc) = materialize(c, &[placement], GadgetOptions::default())?;
    let post = anc[0].map(|a| PostSelect { ancilla: a, outcome: ins.tag.gadget().expect("gadget tag").1 });
    Ok((circ, post))
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind.angle() {
            Some(t) => write!(f, "{}({:?})", self.kind.name(), t)?,
            None => write!(f, "{}", self.kind.name())?,
        }
        for q in &self.targets {
            write!(f, " {q}")?;
        }
        Ok(())
    }
}

/// Line-oriented text form:
///
/// ```text
/// qubits 3
/// register 2
/// 1.0 : H 0 ; CX 1 2
/// 0 : SM 1 @inserted
/// ```
///
/// Each layer line is `duration : op ; op ...` with an optional trailing role
/// tag (`@inserted`, `@gadget`, `@recovery`). Operators are gate names with
/// optional `(angle)` followed by qubit indices, the insertion tags
/// `SM SP P0 P1` and `RESET q`. `#` starts a comment.
pub fn to_text(c: &Circuit) -> Result<String> {
    let mut s = format!("qubits {}\n", c.n_qubits);
    if c.n_register != c.n_qubits {
        s.push_str(&format!("register {}\n", c.n_register));
    }
    for l in &c.layers {
        let ops: Vec<String> = l
            .ops
            .iter()
            .map(|o| match o {
                Op::Gate(g) => Ok(g.to_string()),
                Op::Apply { tag, qubit } => Ok(format!("{} {}", tag.name(), qubit)),
                Op::Reset(q) => Ok(format!("RESET {q}")),
                Op::Linear { label, .. } => Err(QemError::Unsupported(format!("cannot serialize linear map {label}"))),
            })
            .collect::<Result<_>>()?;
        s.push_str(&format!("{:?} : {}", l.duration, ops.join(" ; ")));
        match l.role {
            LayerRole::Base => {}
            LayerRole::Inserted => s.push_str(" @inserted"),
            LayerRole::Gadget => s.push_str(" @gadget"),
            LayerRole::Recovery => s.push_str(" @recovery"),
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn from_text(text: &str) -> Result<Circuit> {
    let mut n_qubits = None;
    let mut n_register = None;
    let mut layers = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |msg: String| QemError::Parse { line: line_no, msg };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("qubits") {
            n_qubits = Some(rest.trim().parse::<usize>().map_err(|e| err(e.to_string()))?);
            continue;
        }
        if let Some(rest) = line.strip_prefix("register") {
            n_register = Some(rest.trim().parse::<usize>().map_err(|e| err(e.to_string()))?);
            continue;
        }
        let (dur, body) = line.split_once(':').ok_or_else(|| err("expected `duration : ops`".into()))?;
        let duration: f64 = dur.trim().parse().map_err(|_| err(format!("bad duration `{}`", dur.trim())))?;
        let (body, role) = match body.rsplit_once('@') {
            Some((b, r)) => {
                let role = match r.trim() {
                    "inserted" => LayerRole::Inserted,
                    "gadget" => LayerRole::Gadget,
                    "recovery" => LayerRole::Recovery,
                    other => return Err(err(format!("unknown role `{other}`"))),
                };
                (b, role)
            }
            None => (body, LayerRole::Base),
        };
        let mut ops = Vec::new();
        for item in body.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            ops.push(parse_op(item).map_err(err)?);
        }
        layers.push((line_no, Layer { ops, duration, role }));
    }
    let n_qubits = n_qubits.ok_or(QemError::Parse { line: 1, msg: "missing `qubits` header".into() })?;
    let mut c = Circuit { n_qubits, n_register: n_register.unwrap_or(n_qubits), layers: Vec::new() };
    if c.n_register > n_qubits {
        return Err(QemError::Parse { line: 1, msg: "register larger than qubit count".into() });
    }
    for (line, l) in layers {
        c.push_layer(l).map_err(|e| QemError::Parse { line, msg: e.to_string() })?;
    }
    Ok(c)
}

fn parse_op(item: &str) -> std::result::Result<Op, String> {
    let mut parts = item.split_whitespace();
    let head = parts.next().ok_or("empty operation")?;
    let qubits: Vec<usize> = parts
        .map(|p| p.parse::<usize>().map_err(|_| format!("bad qubit index `{p}`")))
        .collect::<std::result::Result<_, _>>()?;
    let (name, angle) = match head.split_once('(') {
        Some((n, rest)) => {
            let a = rest.strip_suffix(')').ok_or(format!("unclosed angle in `{head}`"))?;
            (n.to_ascii_uppercase(), Some(a.parse::<f64>().map_err(|_| format!("bad angle `{a}`"))?))
        }
        None => (head.to_ascii_uppercase(), None),
    };
    let need_angle = |a: Option<f64>| a.ok_or(format!("{name} needs an angle"));
    let single = |qs: &[usize]| -> std::result::Result<usize, String> {
        match qs {
            [q] => Ok(*q),
            _ => Err(format!("{name} takes one qubit")),
        }
    };
    let tag = match name.as_str() {
        "SM" => Some(OpTag::SigmaMinus),
        "SP" => Some(OpTag::SigmaPlus),
        "P0" => Some(OpTag::P0),
        "P1" => Some(OpTag::P1),
        _ => None,
    };
    if let Some(tag) = tag {
        return Ok(Op::Apply { tag, qubit: single(&qubits)? });
    }
    if name == "RESET" {
        return Ok(Op::Reset(single(&qubits)?));
    }
    let kind = match name.as_str() {
        "I" | "ID" => GateKind::I,
        "X" => GateKind::X,
        "Y" => GateKind::Y,
        "Z" => GateKind::Z,
        "H" => GateKind::H,
        "SX" => GateKind::SX,
        "RX" => GateKind::Rx(need_angle(angle)?),
        "RY" => GateKind::Ry(need_angle(angle)?),
        "RZ" => GateKind::Rz(need_angle(angle)?),
        "CX" | "CNOT" => GateKind::CX,
        "CZ" => GateKind::CZ,
        "CH" => GateKind::CH,
        "CRY" => GateKind::CRy(need_angle(angle)?),
        "CCX" | "TOFFOLI" => GateKind::Toffoli,
        other => return Err(format!("unknown operation `{other}`")),
    };
    Gate::new(kind, qubits).map(Op::Gate).map_err(|e| e.to_string())
}

/// H written in native gates: Rz(π/2)·SX·Rz(π/2), equal to H up to phase.
pub fn native_hadamard(q: usize) -> [Gate; 3] {
    [Gate::one(GateKind::Rz(FRAC_PI_2), q), Gate::one(GateKind::SX, q), Gate::one(GateKind::Rz(FRAC_PI_2), q)]
}
