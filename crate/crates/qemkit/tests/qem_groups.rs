mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use qemkit::algos::{self, BenchmarkSpec};
use qemkit::analysis::loglog_slope;
use qemkit::circuit::{from_text, InsertMode, OpTag, Style};
use qemkit::noise::{Coherence, Generator, NoiseModel};
use qemkit::qem::*;
use qemkit::shotsim::ShotConfig;
use qemkit::{Circuit, Exec, Gate, GateKind, Observable, Rotation};

fn zero_noise_delta(g: &CircuitGroup, o: &Observable) -> f64 {
    delta1_expectation(g, o, &NoiseModel::none(), Engine::Exact).unwrap()
}

fn small_benchmarks() -> Vec<(BenchmarkSpec, Vec<&'static str>)> {
    vec![
        (BenchmarkSpec::Pre1 { depth: 9 }, vec!["Z0", "X0"]),
        (BenchmarkSpec::Pre2 { depth: 9 }, vec!["Z0", "Z1", "P11"]),
        (BenchmarkSpec::Qaa3 { k: 1 }, vec!["P110", "P111", "Z2"]),
        (BenchmarkSpec::Qaa2 { style: Style::Direct, k: 1 }, vec!["P00", "P11"]),
        (BenchmarkSpec::Qaa2 { style: Style::Native, k: 1 }, vec!["P00", "P11"]),
        (BenchmarkSpec::Imp2 { n_rep: 3, style: Style::Direct }, vec!["Z0Z1"]),
        (BenchmarkSpec::Imp2 { n_rep: 3, style: Style::Native }, vec!["Z0Z1"]),
    ]
}

#[test]
fn group_size_is_three_d_n_plus_one() {
    let cases = [
        (BenchmarkSpec::Pre1 { depth: 9 }, 28),
        (BenchmarkSpec::Pre1 { depth: 17 }, 52),
        (BenchmarkSpec::Pre1 { depth: 33 }, 100),
        (BenchmarkSpec::Pre2 { depth: 9 }, 55),
        (BenchmarkSpec::Qaa3 { k: 1 }, 91),
        (BenchmarkSpec::QaoaSquare { params: None }, 181),
    ];
    for (spec, want) in cases {
        let c = algos::build(&spec).unwrap();
        for mode in [InsertMode::Direct, InsertMode::Ancilla] {
            let g = first_order_group(&c, Generator::Ad, mode).unwrap();
            assert_eq!(g.n_circuits(), want, "{} {mode:?}", spec.label());
            assert_eq!(g.n_circuits(), 3 * c.effective_depth() * c.n_register + 1);
        }
    }
}

#[test]
fn zero_duration_layers_are_not_sites() {
    let c = algos::imp2(5, Style::Native).unwrap();
    assert_eq!(c.effective_depth(), 16);
    let g = first_order_group(&c, Generator::Ad, InsertMode::Direct).unwrap();
    assert_eq!(g.n_circuits(), 3 * 16 * 2 + 1);
}

#[test]
fn identity_terms_fold_onto_original() {
    let c = algos::pre1(9).unwrap();
    let g = first_order_group(&c, Generator::Ad, InsertMode::Direct).unwrap();
    let orig = &g.members[0];
    assert_eq!(orig.circuit, 0);
    assert!((orig.coefficient + 9.0 / 4.0).abs() < 1e-15);
}

#[test]
fn gad_direct_counts_five_insertions_per_site() {
    let c = algos::pre1(5).unwrap();
    let g = first_order_group(&c, Generator::Gad { n_bar: 0.2 }, InsertMode::Direct).unwrap();
    assert_eq!(g.n_circuits(), 5 * 5 + 1);
    let a = first_order_group(&c, Generator::Gad { n_bar: 0.2 }, InsertMode::Ancilla).unwrap();
    assert_eq!(a.n_circuits(), 3 * 5 + 1);
}

#[test]
fn delta1_of_flipped_qubit() {
    let c = algos::pre1(1).unwrap();
    let g = first_order_group(&c, Generator::Ad, InsertMode::Direct).unwrap();
    assert_eq!(g.n_circuits(), 4);
    let z = Observable::parse("Z0", 1).unwrap();
    assert!((zero_noise_delta(&g, &z) - 2.0).abs() < 1e-14);
}

#[test]
fn delta1_matches_lindblad_oracle_on_benchmarks() {
    for (spec, obs) in small_benchmarks() {
        let c = algos::build(&spec).unwrap();
        for name in obs {
            let o = Observable::parse(name, c.n_register).unwrap();
            // X factors are read after a rotation layer that is itself a site.
            let mc = o.measurement_circuit(&c, 1.0).unwrap();
            let od = Observable { x_qubits: vec![], ..o.clone() };
            for mode in [InsertMode::Direct, InsertMode::Ancilla] {
                let g = first_order_group(&mc, Generator::Ad, mode).unwrap();
                let got = zero_noise_delta(&g, &od);
                let want = common::delta1_oracle(&mc, Generator::Ad, &od);
                assert!((got - want).abs() < 1e-10, "{} {name} {mode:?}: {got} vs {want}", spec.label());
            }
        }
    }
}

#[test]
fn qaa2_direct_cz_has_no_first_order_term_for_p00() {
    let o = Observable::parse("P00", 2).unwrap();
    let direct = algos::qaa2(Style::Direct, 1).unwrap();
    let g = first_order_group(&direct, Generator::Ad, InsertMode::Direct).unwrap();
    assert!(zero_noise_delta(&g, &o).abs() < 1e-10);
    let native = algos::qaa2(Style::Native, 1).unwrap();
    let g = first_order_group(&native, Generator::Ad, InsertMode::Direct).unwrap();
    assert!(zero_noise_delta(&g, &o).abs() > 0.1);
}

fn generators() -> [Generator; 6] {
    [
        Generator::Ad,
        Generator::Gad { n_bar: 0.3 },
        Generator::GadEmission,
        Generator::GadAbsorption,
        Generator::Pd,
        Generator::Pauli,
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn delta1_matches_oracle_on_random_circuits(seed in any::<u64>(), depth in 1usize..5, which in 0usize..6) {
        let c = common::random_circuit(2, depth, seed);
        let g = generators()[which];
        let o = Observable::parse("Z0Z1", 2).unwrap();
        let p = Observable::parse("P01", 2).unwrap();
        let grp = first_order_group(&c, g, InsertMode::Direct).unwrap();
        for obs in [&o, &p] {
            let got = zero_noise_delta(&grp, obs);
            let want = common::delta1_oracle(&c, g, obs);
            prop_assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn direct_and_ancilla_agree_without_noise(seed in any::<u64>(), depth in 1usize..4, gad in any::<bool>()) {
        let c = common::random_circuit(2, depth, seed);
        let g = if gad { Generator::Gad { n_bar: 0.4 } } else { Generator::Ad };
        let o = Observable::parse("Z1", 2).unwrap();
        let d = zero_noise_delta(&first_order_group(&c, g, InsertMode::Direct).unwrap(), &o);
        let a = zero_noise_delta(&first_order_group(&c, g, InsertMode::Ancilla).unwrap(), &o);
        prop_assert!((d - a).abs() < 1e-10);
    }

    #[test]
    fn first_order_estimate_identity(theta in 0.0f64..1.0, depth in 1usize..8) {
        let c = algos::pre1(depth).unwrap();
        let o = Observable::parse("Z0", 1).unwrap();
        let m = NoiseModel::ad_theta(theta).unwrap();
        let e = mitigate(&c, &o, &m, &QemConfig::default()).unwrap();
        prop_assert!((e.mitigated - (e.noisy - e.tau * e.delta1)).abs() < 1e-12);
    }
}

#[test]
fn delta2_matches_double_lindblad_oracle() {
    let one = algos::pre1(2).unwrap();
    let o = Observable::parse("Z0", 1).unwrap();
    for mode in [InsertMode::Direct, InsertMode::Ancilla] {
        let g = second_order_group(&one, Generator::Ad, mode).unwrap();
        let got = zero_noise_delta(&g, &o);
        let want = common::delta2_oracle(&one, Generator::Ad, &o);
        assert!((got - want).abs() < 1e-9, "{mode:?}: {got} vs {want}");
    }
    for seed in 0..6 {
        let c = common::random_circuit(2, 3, seed);
        let o = Observable::parse("Z0Z1", 2).unwrap();
        for gen in [Generator::Ad, Generator::Pd] {
            let g = second_order_group(&c, gen, InsertMode::Direct).unwrap();
            let got = zero_noise_delta(&g, &o);
            let want = common::delta2_oracle(&c, gen, &o);
            assert!((got - want).abs() < 1e-9, "seed {seed}: {got} vs {want}");
        }
    }
}

#[test]
fn delta2_single_layer_has_no_cross_terms() {
    let c = algos::pre1(1).unwrap();
    let g = second_order_group(&c, Generator::Ad, InsertMode::Direct).unwrap();
    assert!(g.members.iter().all(|m| m.label.split(',').filter(|s| !s.is_empty()).all(|s| s.starts_with("0:"))));
}

/// Distinct insertion patterns of Δ₂ for one qubit, enumerated from the
/// (k, p) tuples: application-ordered lists of (layer, operator).
fn enumerate_delta2_patterns(d: usize) -> BTreeSet<Vec<(usize, &'static str)>> {
    let ops: [Option<&'static str>; 4] = [None, Some("Z"), Some("SM"), Some("P1")];
    let mut set = BTreeSet::new();
    for k1 in 0..d {
        for k2 in 0..=k1 {
            for p1 in ops {
                for p2 in ops {
                    // Application order: (k2, p2) then (k1, p1).
                    let seq: Vec<(usize, &str)> = [(k2, p2), (k1, p1)].iter().filter_map(|&(k, p)| p.map(|p| (k, p))).collect();
                    set.insert(seq);
                }
            }
        }
    }
    set
}

#[test]
fn delta2_member_count_matches_enumeration() {
    let c = algos::pre1(2).unwrap();
    let g = second_order_group(&c, Generator::Ad, InsertMode::Direct).unwrap();
    assert_eq!(g.n_circuits(), enumerate_delta2_patterns(2).len());
}

#[test]
fn delta2_size_is_quadratic() {
    for d in [2usize, 4, 8] {
        let c = algos::pre1(d).unwrap();
        let g = second_order_group(&c, Generator::Ad, InsertMode::Direct).unwrap();
        assert!(g.n_circuits() <= 10 * d * d, "d = {d}: {}", g.n_circuits());
    }
}

#[test]
fn nested_first_order_equals_delta2_in_direct_mode() {
    let c = common::random_circuit(2, 3, 11);
    let o = Observable::parse("Z0", 2).unwrap();
    let g1 = first_order_group(&c, Generator::Ad, InsertMode::Direct).unwrap();
    let nested = delta1_of_delta1_group(&g1).unwrap();
    let g2 = second_order_group(&c, Generator::Ad, InsertMode::Direct).unwrap();
    let m = NoiseModel::ad(0.05).unwrap();
    let a = evaluate_group(&nested, &o, &m, Engine::Exact, Exec::Sequential).unwrap().value;
    let b = evaluate_group(&g2, &o, &m, Engine::Exact, Exec::Sequential).unwrap().value;
    assert!((a - b).abs() < 1e-10, "{a} vs {b}");
}

fn residuals(c: &Circuit, o: &Observable, order: u8, mode: InsertMode, taus: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut unmit = Vec::new();
    let mut mit = Vec::new();
    for &t in taus {
        let m = NoiseModel::ad(t).unwrap();
        let e = mitigate(c, o, &m, &QemConfig { order, mode, ..QemConfig::default() }).unwrap();
        let ideal = e.ideal.unwrap();
        unmit.push((e.noisy - ideal).abs());
        mit.push((e.mitigated - ideal).abs());
    }
    (unmit, mit)
}

fn tau_grid() -> Vec<f64> {
    vec![1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 3e-2]
}

#[test]
fn first_order_residual_is_quadratic() {
    let c = algos::pre1(9).unwrap();
    let o = Observable::parse("Z0", 1).unwrap();
    let taus = tau_grid();
    let (unmit, mit) = residuals(&c, &o, 1, InsertMode::Direct, &taus);
    let s1 = loglog_slope(&taus, &unmit).unwrap();
    let s2 = loglog_slope(&taus, &mit).unwrap();
    assert!((s1 - 1.0).abs() < 0.1, "unmitigated slope {s1}");
    assert!((s2 - 2.0).abs() < 0.15, "first-order slope {s2}");
}

#[test]
fn second_order_residual_is_cubic() {
    let c = algos::pre1(5).unwrap();
    let o = Observable::parse("Z0", 1).unwrap();
    let taus = vec![3e-3, 5e-3, 1e-2, 2e-2, 3e-2];
    for mode in [InsertMode::Direct, InsertMode::Ancilla] {
        let (_, mit) = residuals(&c, &o, 2, mode, &taus);
        let s = loglog_slope(&taus, &mit).unwrap();
        assert!((s - 3.0).abs() < 0.2, "{mode:?}: second-order slope {s}");
    }
}

#[test]
fn second_order_estimate_reports_first_order_share() {
    let c = algos::qaa2(Style::Native, 1).unwrap();
    let o = Observable::parse("P00", 2).unwrap();
    let m = NoiseModel::ad_theta(0.2).unwrap();
    let e = mitigate(&c, &o, &m, &QemConfig { order: 2, ..QemConfig::default() }).unwrap();
    let ratio = e.m_first_second.unwrap();
    assert!((ratio - e.delta1.abs()).abs() < 1e-12);
    assert!(ratio > 0.1);
    assert_eq!(m_first_second(1.0, 1.0, 0.0), None);
}

#[test]
fn inhomogeneous_group_reduces_to_homogeneous() {
    let c = algos::qaa3(1).unwrap();
    let dt = 0.035;
    let mut timed = c.clone();
    for l in &mut timed.layers {
        l.duration = dt;
    }
    let t1 = vec![62.93, 62.31, 45.03];
    let t2: Vec<f64> = t1.iter().map(|t| 2.0 * t).collect();
    let inh = inhomogeneous_group(&timed, &Coherence::new(t1.clone(), t2).unwrap(), InsertMode::Direct).unwrap();
    let hom = first_order_group(&c, Generator::Ad, InsertMode::Direct).unwrap();
    assert_eq!(inh.n_circuits(), hom.n_circuits());
    assert_eq!(inh.members.len(), hom.members.len());
    for (a, b) in inh.members.iter().zip(&hom.members) {
        assert_eq!(a.label, b.label);
        if b.label.is_empty() {
            let want: f64 = -0.25 * c.depth() as f64 * t1.iter().map(|t| dt / t).sum::<f64>();
            assert!((a.coefficient - want).abs() < 1e-12);
        } else {
            let q: usize = b.label.split(':').nth(1).unwrap().parse().unwrap();
            let tau = dt / t1[q];
            assert!((a.coefficient - tau * b.coefficient).abs() < 1e-12, "{}", b.label);
        }
    }
}

#[test]
fn inhomogeneous_without_relaxation_keeps_only_dephasing() {
    let c = algos::pre1(4).unwrap();
    let coh = Coherence::new(vec![f64::INFINITY], vec![50.0]).unwrap();
    let g = inhomogeneous_group(&c, &coh, InsertMode::Direct).unwrap();
    assert!(g.members.iter().skip(1).all(|m| m.label.ends_with(":Z")));
    assert_eq!(g.n_circuits(), 4 + 1);
}

#[test]
fn inhomogeneous_mitigation_beats_noise() {
    let c = algos::pre1(9).unwrap();
    let mut timed = c.clone();
    for l in &mut timed.layers {
        l.duration = 0.5;
    }
    let coh = Coherence::new(vec![60.0], vec![50.0]).unwrap();
    let m = NoiseModel::inhomogeneous(coh);
    let o = Observable::parse("Z0", 1).unwrap();
    let e = mitigate(&timed, &o, &m, &QemConfig::default()).unwrap();
    let ideal = e.ideal.unwrap();
    assert!((e.mitigated - ideal).abs() * 20.0 < (e.noisy - ideal).abs());
    assert_eq!(e.tau, 1.0);
}

#[test]
fn composite_reduces_to_amplitude_damping() {
    let c = algos::pre2(5).unwrap();
    let o = Observable::parse("Z0Z1", 2).unwrap();
    let ad = mitigate(&c, &o, &NoiseModel::ad(0.02).unwrap(), &QemConfig::default()).unwrap();
    let comp = mitigate(&c, &o, &NoiseModel::adpd(0.02, 0.0, 0.0).unwrap(), &QemConfig::default()).unwrap();
    assert!((ad.mitigated - comp.mitigated).abs() < 1e-12);
}

fn h_chain(d: usize) -> Circuit {
    let mut c = Circuit::new(1);
    for _ in 0..d {
        c.push(vec![Gate::one(GateKind::H, 0)], 1.0).unwrap();
    }
    c
}

#[test]
fn phase_damping_residual_is_quadratic() {
    let c = h_chain(9);
    let o = Observable::parse("X0", 1).unwrap();
    let taus = tau_grid();
    let mut mit = Vec::new();
    for &t in &taus {
        let e = mitigate(&c, &o, &NoiseModel::pd(t).unwrap(), &QemConfig::default()).unwrap();
        mit.push((e.mitigated - e.ideal.unwrap()).abs());
    }
    let s = loglog_slope(&taus, &mit).unwrap();
    assert!((s - 2.0).abs() < 0.15, "PD slope {s}");
}

#[test]
fn composite_channel_mitigation_gains_tenfold() {
    let c = h_chain(9);
    let o = Observable::parse("X0", 1).unwrap();
    let e = mitigate(&c, &o, &NoiseModel::adpd(0.01, 0.0, 0.01).unwrap(), &QemConfig::default()).unwrap();
    let ideal = e.ideal.unwrap();
    assert!((e.noisy - ideal).abs() > 1e-3);
    assert!((e.mitigated - ideal).abs() * 10.0 <= (e.noisy - ideal).abs());
    assert!(e.pd_delta1.is_some());
}

#[test]
fn depolarizing_mitigation_is_second_order() {
    let c = algos::pre2(5).unwrap();
    let o = Observable::parse("Z1", 2).unwrap();
    let taus = tau_grid();
    let mut mit = Vec::new();
    for &t in &taus {
        let p = 0.75 * (1.0 - (-4.0 * t / 3.0f64).exp());
        let e = mitigate(&c, &o, &NoiseModel::depolarizing(p).unwrap(), &QemConfig::default()).unwrap();
        mit.push((e.mitigated - e.ideal.unwrap()).abs());
    }
    let s = loglog_slope(&taus, &mit).unwrap();
    assert!((s - 2.0).abs() < 0.15, "depolarizing slope {s}");
}

#[test]
fn noisy_rotation_is_part_of_the_mitigated_circuit() {
    let c = algos::pre1(9).unwrap();
    let o = Observable::parse("X0", 1).unwrap();
    let m = NoiseModel::ad_theta(0.2).unwrap();
    let noisy = mitigate(&c, &o, &m, &QemConfig::default()).unwrap();
    let clean = mitigate(&c, &o, &m, &QemConfig { rotation: Rotation::Noiseless, ..QemConfig::default() }).unwrap();
    assert_eq!(noisy.group_size, 3 * 10 + 1);
    assert_eq!(clean.group_size, 3 * 9 + 1);
    assert!((noisy.ideal.unwrap() - clean.ideal.unwrap()).abs() < 1e-12);
}

#[test]
fn shot_engine_tracks_exact_engine() {
    let c = algos::qaa2(Style::Native, 1).unwrap();
    let o = Observable::parse("P00", 2).unwrap();
    let m = NoiseModel::ad_theta(0.2).unwrap();
    let g = first_order_group(&c, Generator::Ad, InsertMode::Ancilla).unwrap();
    let exact = evaluate_group(&g, &o, &m, Engine::Exact, Exec::Sequential).unwrap();
    let cfg = ShotConfig::new(1 << 14, 20, 99).unwrap();
    let a = evaluate_group(&g, &o, &m, Engine::Shots(cfg), Exec::Parallel).unwrap();
    let b = evaluate_group(&g, &o, &m, Engine::Shots(cfg), Exec::Sequential).unwrap();
    assert_eq!(a, b);
    let samples = a.samples.unwrap();
    assert_eq!(samples.len(), 20);
    let se = (samples.iter().map(|s| (s - a.value).powi(2)).sum::<f64>() / 19.0 / 20.0).sqrt();
    assert!((a.value - exact.value).abs() < 5.0 * se, "{} vs {} (se {se})", a.value, exact.value);
}

#[test]
fn manifest_lists_members_and_round_trips_circuits() {
    let c = algos::pre1(2).unwrap();
    let g = first_order_group(&c, Generator::Ad, InsertMode::Ancilla).unwrap();
    let text = manifest(&g).unwrap();
    assert!(text.contains("circuits 7"));
    assert!(text.contains("post [1=1]"));
    let last = text.rsplit("## circuit ").next().unwrap();
    let body = last.split_once('\n').unwrap().1;
    assert_eq!(&from_text(body).unwrap(), g.circuits.last().unwrap());
    assert!(g.members.iter().any(|m| m.label.ends_with(OpTag::P1.name())));
}
