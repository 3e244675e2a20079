mod common;

use proptest::prelude::*;
use qemkit::algos::*;
use qemkit::circuit::circuit_unitary;
use qemkit::densim::{evolve, register_probabilities};
use qemkit::{Circuit, Gate, GateKind, NoiseModel, Observable, Style};

fn ideal_probs(c: &Circuit) -> Vec<f64> {
    let r = evolve(c, &NoiseModel::none(), None).unwrap();
    register_probabilities(&r, c.n_register, &[])
}

/// Index of a most-significant-first bit string.
fn idx(bits: &str) -> usize {
    usize::from_str_radix(bits, 2).unwrap()
}

#[test]
fn pre1_layout() {
    let c = pre1(9).unwrap();
    assert_eq!(c.depth(), 9);
    let mut want = Circuit::new(1);
    want.push(vec![Gate::one(GateKind::X, 0)], 1.0).unwrap();
    for _ in 0..8 {
        want.push(vec![Gate::one(GateKind::H, 0)], 1.0).unwrap();
    }
    assert_eq!(c, want);
    assert!(pre1(0).is_err());
}

#[test]
fn qaa3_finds_marked_states() {
    let p = ideal_probs(&qaa3(1).unwrap());
    assert!((p[idx("110")] - 0.5).abs() < 1e-12);
    assert!((p[idx("111")] - 0.5).abs() < 1e-12);
}

#[test]
fn qaa2_ideal_is_balanced() {
    for style in [Style::Direct, Style::Native] {
        let p = ideal_probs(&qaa2(style, 1).unwrap());
        assert!((p[idx("00")] - 0.5).abs() < 1e-10, "{style:?}");
        assert!((p[idx("11")] - 0.5).abs() < 1e-10, "{style:?}");
    }
}

#[test]
fn qaoa_reaches_minimum_cut() {
    let g = MaxCutGraph::square();
    let c = qaoa(&g, &default_qaoa_params()).unwrap();
    assert_eq!(c.depth(), 15);
    let cost = qaoa_cost(&g, &default_qaoa_params()).unwrap();
    assert!((cost + 4.0).abs() < 1e-2, "{cost}");
    let p = ideal_probs(&c);
    assert!((p[idx("0101")] - 0.5).abs() < 1e-2);
    assert!((p[idx("1010")] - 0.5).abs() < 1e-2);
}

#[test]
fn default_angles_are_a_local_minimum() {
    let g = MaxCutGraph::square();
    let start = default_qaoa_params();
    let f0 = qaoa_cost(&g, &start).unwrap();
    let (x, f) = coordinate_descent(&g, start, 0.05, 1e-4).unwrap();
    assert!(f0 - f < 1e-3);
    for (a, b) in x.iter().zip(&start) {
        assert!((a - b).abs() < 0.1);
    }
}

#[test]
fn cost_of_cuts() {
    let g = MaxCutGraph::square();
    assert_eq!(g.cost(&[1, -1, 1, -1]), -4.0);
    assert_eq!(g.cost(&[1, 1, 1, 1]), 0.0);
    assert_eq!(g.cost(&[-1, -1, -1, -1]), 0.0);
    let h = qaoa_cost_hamiltonian(&g).unwrap();
    assert!(h.is_diagonal(0.0));
    assert!(MaxCutGraph::new(3, vec![(0, 3, 1.0)]).is_err());
    assert!(MaxCutGraph::new(3, vec![(1, 1, 1.0)]).is_err());
    assert!(cost_diagonal(&MaxCutGraph::new(7, vec![(0, 1, 1.0)]).unwrap()).is_err());
}

#[test]
fn matchings_are_disjoint() {
    let g = MaxCutGraph::square();
    let m = g.matchings();
    assert_eq!(m.len(), 2);
    for group in &m {
        let mut seen = [false; 4];
        for &(a, b, _) in group {
            assert!(!seen[a] && !seen[b]);
            seen[a] = true;
            seen[b] = true;
        }
    }
}

#[test]
fn builders_are_unitary() {
    let specs = [
        BenchmarkSpec::Pre1 { depth: 33 },
        BenchmarkSpec::Pre2 { depth: 17 },
        BenchmarkSpec::Qaa3 { k: 2 },
        BenchmarkSpec::Qaa2 { style: Style::Native, k: 2 },
        BenchmarkSpec::QaoaSquare { params: None },
        BenchmarkSpec::Imp2 { n_rep: 4, style: Style::Native },
    ];
    for s in specs {
        let c = build(&s).unwrap();
        assert_eq!(c.n_qubits, s.n_qubits());
        assert!(circuit_unitary(&c).unwrap().is_unitary(1e-12), "{}", s.label());
    }
}

#[test]
fn imp2_native_equals_direct() {
    for n in 1..=6 {
        let d = circuit_unitary(&imp2(n, Style::Direct).unwrap()).unwrap();
        let t = circuit_unitary(&imp2(n, Style::Native).unwrap()).unwrap();
        assert!(d.max_abs_diff_up_to_phase(&t) < 1e-12, "n = {n}");
    }
    assert_eq!(imp2(5, Style::Native).unwrap().effective_depth(), 16);
}

#[test]
fn qaa2_native_equals_direct() {
    let d = circuit_unitary(&qaa2(Style::Direct, 1).unwrap()).unwrap();
    let t = circuit_unitary(&qaa2(Style::Native, 1).unwrap()).unwrap();
    assert!(d.max_abs_diff_up_to_phase(&t) < 1e-12);
}

#[test]
fn pre_benchmarks_stay_real_under_damping() {
    let m = NoiseModel::ad_theta(0.4).unwrap();
    for c in [pre1(17).unwrap(), pre2(17).unwrap()] {
        let r = evolve(&c, &m, None).unwrap();
        let im = r.rho.matrix().data().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        assert!(im <= 1e-12);
    }
}

#[test]
fn spec_serde_rejects_unknown_fields() {
    let ok: BenchmarkSpec = serde_json::from_str(r#"{"name":"pre1","depth":9}"#).unwrap();
    assert_eq!(ok, BenchmarkSpec::Pre1 { depth: 9 });
    assert!(serde_json::from_str::<BenchmarkSpec>(r#"{"name":"pre1","depth":9,"x":1}"#).is_err());
    let q: BenchmarkSpec = serde_json::from_str(r#"{"name":"qaoa_square"}"#).unwrap();
    assert_eq!(build(&q).unwrap(), qaoa(&MaxCutGraph::square(), &default_qaoa_params()).unwrap());
}

#[test]
fn ideal_values_match_unitary_oracle() {
    let o = Observable::parse("P11", 2).unwrap();
    let c = pre2(9).unwrap();
    let got = o.value(&ideal_probs(&c));
    assert!((got - common::ideal(&c, &o)).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cost_matches_classical_sum(edges in prop::collection::vec((0usize..5, 0usize..5, 0.1f64..2.0), 1..7), index in 0usize..32) {
        let edges: Vec<_> = edges.into_iter().filter(|(a, b, _)| a != b).collect();
        prop_assume!(!edges.is_empty());
        let g = MaxCutGraph::new(5, edges.clone()).unwrap();
        let z: Vec<i8> = (0..5).map(|q| if (index >> q) & 1 == 1 { -1 } else { 1 }).collect();
        let want: f64 = edges.iter().map(|&(a, b, w)| if z[a] != z[b] { -w } else { 0.0 }).sum();
        prop_assert!((g.cost(&z) - want).abs() < 1e-12);
        prop_assert!((cost_diagonal(&g).unwrap()[index] - want).abs() < 1e-12);
    }
}
