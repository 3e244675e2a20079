use std::f64::consts::PI;

use proptest::prelude::*;
use qemkit::circuit::{
    apply_insertion, circuit_unitary, decompose, from_text, gate_unitary, materialize, native_hadamard, to_text, GadgetOptions, Insertion,
    OpTag, Placement, Realization,
};
use qemkit::densim::evolve;
use qemkit::linalg::{embed, ComplexMatrix, DensityMatrix, C64};
use qemkit::{Circuit, Gate, GateKind, InsertMode, NoiseModel, QemError, Style};

fn sequence_unitary(gates: &[Gate], n: usize) -> ComplexMatrix {
    let mut u = ComplexMatrix::identity(1 << n).unwrap();
    for g in gates {
        u = gate_unitary(g, n).unwrap().matmul(&u).unwrap();
    }
    u
}

fn check_decomposition(g: Gate, n: usize) {
    let want = gate_unitary(&g, n).unwrap();
    let got = sequence_unitary(&decompose(&g, Style::Native).unwrap(), n);
    assert!(want.max_abs_diff_up_to_phase(&got) < 1e-12, "{g}");
}

#[test]
fn toffoli_decomposition() {
    check_decomposition(Gate::new(GateKind::Toffoli, vec![0, 1, 2]).unwrap(), 3);
    check_decomposition(Gate::new(GateKind::Toffoli, vec![2, 0, 1]).unwrap(), 3);
}

#[test]
fn cz_and_ch_decompositions() {
    check_decomposition(Gate::two(GateKind::CZ, 0, 1), 2);
    check_decomposition(Gate::two(GateKind::CZ, 1, 0), 2);
    check_decomposition(Gate::two(GateKind::CH, 0, 1), 2);
    check_decomposition(Gate::two(GateKind::CH, 1, 0), 2);
}

#[test]
fn cry_decomposition_over_angles() {
    for i in 0..100 {
        let th = -2.0 * PI + 4.0 * PI * (i as f64 + 0.37) / 100.0;
        check_decomposition(Gate::two(GateKind::CRy(th), 0, 1), 2);
    }
}

#[test]
fn native_hadamard_is_hadamard() {
    let got = sequence_unitary(&native_hadamard(0), 1);
    assert!(GateKind::H.matrix().max_abs_diff_up_to_phase(&got) < 1e-12);
}

#[test]
fn direct_style_keeps_gates() {
    let g = Gate::two(GateKind::CZ, 0, 1);
    assert_eq!(decompose(&g, Style::Direct).unwrap(), vec![g]);
    assert!(decompose(&Gate::one(GateKind::H, 0), Style::Native).is_err());
}

#[test]
fn gate_validation() {
    assert!(Gate::new(GateKind::CX, vec![0, 0]).is_err());
    assert!(Gate::new(GateKind::CX, vec![0]).is_err());
    let mut c = Circuit::new(2);
    assert!(c.push(vec![Gate::one(GateKind::H, 0), Gate::cx(0, 1)], 1.0).is_err());
    assert!(c.push(vec![Gate::one(GateKind::H, 5)], 1.0).is_err());
}

/// Register qubit in a generic pure state, ancilla appended by a gadget.
fn gadget_branch(tag: OpTag, alpha: f64, phi: f64) -> (ComplexMatrix, ComplexMatrix) {
    let mut base = Circuit::new(1);
    base.push(vec![Gate::one(GateKind::Ry(alpha), 0)], 1.0).unwrap();
    base.push(vec![Gate::one(GateKind::Rz(phi), 0)], 1.0).unwrap();
    let (gc, post) = apply_insertion(&base, &Insertion { layer: 1, qubit: 0, tag, mode: InsertMode::Ancilla }).unwrap();
    let post = post.unwrap();
    let r = evolve(&gc, &NoiseModel::none(), None).unwrap();
    let branch = r.rho.project_out(post.ancilla, post.outcome).unwrap();

    let clean = evolve(&base, &NoiseModel::none(), None).unwrap().rho;
    let s = tag.matrix();
    let want = s.matmul(clean.matrix()).unwrap().matmul(&s.adjoint()).unwrap();
    (branch.into_matrix(), want)
}

#[test]
fn gadgets_realize_non_unitary_operators() {
    for tag in [OpTag::SigmaMinus, OpTag::SigmaPlus, OpTag::P0, OpTag::P1] {
        for &(a, p) in &[(0.3, 0.0), (1.1, 0.7), (2.5, -1.9), (PI, 0.2)] {
            let (got, want) = gadget_branch(tag, a, p);
            assert!(got.max_abs_diff(&want) < 1e-12, "{tag:?} α={a}");
        }
    }
}

#[test]
fn gadget_layers_allocate_ancillas_in_order() {
    let mut base = Circuit::new(2);
    base.push(vec![Gate::cx(0, 1)], 1.0).unwrap();
    let seq = [
        Placement { layer: 0, qubit: 0, realization: Realization::Gadget(qemkit::circuit::Gadget::A) },
        Placement { layer: 0, qubit: 1, realization: Realization::Direct(OpTag::Z) },
        Placement { layer: 0, qubit: 1, realization: Realization::Gadget(qemkit::circuit::Gadget::B) },
    ];
    let (c, anc) = materialize(&base, &seq, GadgetOptions::default()).unwrap();
    assert_eq!(anc, vec![Some(2), None, Some(3)]);
    assert_eq!(c.n_qubits, 4);
    assert_eq!(c.n_register, 2);
    assert_eq!(c.layers.len(), 1 + 2 + 1 + 3);
    assert!(materialize(&base, &[Placement { layer: 3, ..seq[0] }], GadgetOptions::default()).is_err());
}

#[test]
fn pauli_insertions_stay_unitary() {
    let mut base = Circuit::new(1);
    base.push(vec![Gate::one(GateKind::H, 0)], 1.0).unwrap();
    let (c, post) = apply_insertion(&base, &Insertion { layer: 0, qubit: 0, tag: OpTag::Z, mode: InsertMode::Ancilla }).unwrap();
    assert!(post.is_none());
    let u = circuit_unitary(&c).unwrap();
    let want = OpTag::Z.matrix().matmul(&GateKind::H.matrix()).unwrap();
    assert!(u.max_abs_diff(&want) < 1e-15);
}

#[test]
fn text_form_round_trips() {
    let text = "qubits 3\nregister 2\n1.0 : H 0 ; CX 1 2\n0.0 : SM 1 @inserted\n0.5 : RY(0.25) 2 @gadget\n0.0 : RESET 2 @recovery\n";
    let c = from_text(text).unwrap();
    assert_eq!(c.n_qubits, 3);
    assert_eq!(c.n_register, 2);
    assert_eq!(to_text(&c).unwrap(), text);
    assert_eq!(from_text(&to_text(&c).unwrap()).unwrap(), c);
}

#[test]
fn text_errors_report_lines() {
    match from_text("qubits 2\n1.0 : H 0\n1.0 : FOO 1\n") {
        Err(QemError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("unexpected {other:?}"),
    }
    assert!(from_text("qubits 2\nnot a layer\n").is_err());
}

#[test]
fn embed_orders_targets_most_significant_first() {
    let cx = GateKind::CX.matrix();
    // Control on qubit 0 (LSB), target on qubit 1.
    let u = embed(&cx, &[0, 1], 2).unwrap();
    let mut rho = DensityMatrix::basis_state(2, 0b01).unwrap();
    rho.apply_local(&cx, &[0, 1]).unwrap();
    assert_eq!(rho.probabilities(), vec![0.0, 0.0, 0.0, 1.0]);
    assert_eq!(u.get(3, 1), C64::new(1.0, 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cry_native_matches_for_any_angle(th in -10.0f64..10.0, flip in any::<bool>()) {
        let (a, b) = if flip { (1, 0) } else { (0, 1) };
        let g = Gate::two(GateKind::CRy(th), a, b);
        let want = gate_unitary(&g, 2).unwrap();
        let got = sequence_unitary(&decompose(&g, Style::Native).unwrap(), 2);
        prop_assert!(want.max_abs_diff_up_to_phase(&got) < 1e-12);
    }

    #[test]
    fn rotations_are_unitary(th in -10.0f64..10.0) {
        for k in [GateKind::Rx(th), GateKind::Ry(th), GateKind::Rz(th), GateKind::CRy(th)] {
            prop_assert!(k.matrix().is_unitary(1e-12));
        }
    }
}
