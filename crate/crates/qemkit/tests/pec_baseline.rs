use qemkit::algos;
use qemkit::linalg::{ComplexMatrix, C64};
use qemkit::noise::{ad_superop, NoiseModel};
use qemkit::pec::*;
use qemkit::{Exec, Observable, Style};

#[test]
fn recovery_inverts_damping() {
    for i in 0..=20 {
        let theta = 3.0 * i as f64 / 20.0;
        let r = recovery(theta).unwrap();
        let tau = qemkit::noise::tau_from_theta(theta).unwrap();
        let comp = r.superop().compose(&ad_superop(tau));
        assert!(comp.max_abs_diff(&qemkit::linalg::SuperOp::identity()) < 1e-12, "ϑ = {theta}");
        let sum: f64 = r.quasiprobs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(r.gamma_norm >= 1.0);
    }
}

#[test]
fn recovery_acts_on_states() {
    let r = recovery(0.7).unwrap();
    let tau = qemkit::noise::tau_from_theta(0.7).unwrap();
    let rho = ComplexMatrix::complex(&[&[C64::new(0.3, 0.0), C64::new(0.1, 0.2)], &[C64::new(0.1, -0.2), C64::new(0.7, 0.0)]]);
    let back = r.superop().apply_2x2(&ad_superop(tau).apply_2x2(&rho));
    assert!(back.max_abs_diff(&rho) < 1e-12);
}

#[test]
fn exact_quasiprobability_sum_recovers_ideal() {
    let m = NoiseModel::ad_theta(0.2).unwrap();
    let cases = [
        (algos::pre1(9).unwrap(), "Z0"),
        (algos::pre2(9).unwrap(), "Z0Z1"),
        (algos::qaa2(Style::Native, 1).unwrap(), "P00"),
        (algos::qaa3(1).unwrap(), "P110"),
        (algos::qaoa(&algos::MaxCutGraph::square(), &algos::default_qaoa_params()).unwrap(), "P0101"),
    ];
    for (c, name) in cases {
        let o = Observable::parse(name, c.n_register).unwrap();
        let ideal = qemkit::densim::measured_expectation(&c, &NoiseModel::none(), &o, qemkit::Rotation::Noiseless).unwrap();
        let got = pec_exact_check(&c, &o, &m).unwrap();
        assert!((got - ideal).abs() < 1e-10, "{name}: {got} vs {ideal}");
    }
}

#[test]
fn sampled_pec_is_unbiased() {
    let c = algos::pre1(5).unwrap();
    let o = Observable::parse("Z0", 1).unwrap();
    let m = NoiseModel::ad_theta(0.3).unwrap();
    let s = pec_sample(&c, &o, &m, 20_000, 5).unwrap();
    let ideal = -1.0;
    assert!((s.mean - ideal).abs() < 4.0 * s.std_error(), "{} ± {}", s.mean, s.std_error());
    let g = total_gamma(&c, &m).unwrap();
    assert!(s.values.iter().all(|v| v.abs() <= g + 1e-12));
}

#[test]
fn pec_without_noise_is_exact() {
    let c = algos::pre2(5).unwrap();
    let o = Observable::parse("Z1", 2).unwrap();
    let m = NoiseModel::ad_theta(0.0).unwrap();
    assert_eq!(total_gamma(&c, &m).unwrap(), 1.0);
    let s = pec_sample(&c, &o, &m, 10, 1).unwrap();
    assert!(s.variance < 1e-24);
}

#[test]
fn pec_rejects_other_channels() {
    let c = algos::pre1(3).unwrap();
    let o = Observable::parse("Z0", 1).unwrap();
    assert!(pec_exact_check(&c, &o, &NoiseModel::pd(0.1).unwrap()).is_err());
    assert!(pec_sample(&c, &o, &NoiseModel::ad(0.1).unwrap(), 0, 0).is_err());
}

#[test]
fn estimates_are_deterministic_across_executors() {
    let c = algos::qaa2(Style::Native, 1).unwrap();
    let o = Observable::parse("P00", 2).unwrap();
    let m = NoiseModel::ad_theta(0.2).unwrap();
    let a = pec_estimates(&c, &o, &m, 50, 8, 42, Exec::Parallel).unwrap();
    let b = pec_estimates(&c, &o, &m, 50, 8, 42, Exec::Sequential).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, pec_estimates(&c, &o, &m, 50, 8, 43, Exec::Sequential).unwrap());
}

#[test]
fn qem_beats_finite_pec_on_qaoa() {
    let g = algos::MaxCutGraph::square();
    let c = algos::qaoa(&g, &algos::default_qaoa_params()).unwrap();
    let o = algos::cost_observable(&g).unwrap();
    let cmp = compare_with_qem(&c, &o, 0.3, 181, 10, 7, Exec::Parallel).unwrap();
    assert!(cmp.var_pec > cmp.var_qem);
    assert!(cmp.fraction_rt_above_one >= 0.8);
    assert_eq!(cmp.pec.len(), 10);
}
