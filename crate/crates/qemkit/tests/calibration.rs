use qemkit::algos;
use qemkit::calib::*;
use qemkit::noise::theta_from_tau;
use qemkit::QemError;

const T1_Q0: f64 = 62.93e-6;
const T2_Q1: f64 = 89.38e-6;

fn ramsey_params() -> T2Params {
    // Detuning of 0.1 MHz plus a weaker second component.
    T2Params { t2: T2_Q1, amplitudes: [0.35, 0.12], frequencies: [1.0e5, 2.3e5], phases: [0.2, -1.1], offset: 0.5 }
}

#[test]
fn t1_exact_recovery() {
    let f = fit_t1(&synthetic_t1(T1_Q0, &t1_grid(), 0.0, 1).unwrap()).unwrap();
    assert!((f.t1 / T1_Q0 - 1.0).abs() < 1e-3);
    assert!(f.residual < 1e-9);
}

#[test]
fn t1_noisy_recovery() {
    for seed in 0..5 {
        let f = fit_t1(&synthetic_t1(T1_Q0, &t1_grid(), 0.01, seed).unwrap()).unwrap();
        assert!((f.t1 / T1_Q0 - 1.0).abs() < 0.05, "seed {seed}: {}", f.t1);
        let f = fit_t1(&synthetic_t1(T1_Q0, &t1_grid(), 0.02, seed).unwrap()).unwrap();
        assert!((f.t1 / T1_Q0 - 1.0).abs() < 0.10, "seed {seed}: {}", f.t1);
    }
}

#[test]
fn t1_needs_five_points() {
    let s = synthetic_t1(T1_Q0, &t1_grid()[..4], 0.0, 0).unwrap();
    assert!(fit_t1(&s).is_err());
}

#[test]
fn t1_fit_is_idempotent() {
    let f = fit_t1(&synthetic_t1(T1_Q0, &t1_grid(), 0.02, 7).unwrap()).unwrap();
    let g = fit_t1(&synthetic_t1(f.t1, &t1_grid(), 0.0, 0).unwrap()).unwrap();
    assert!((g.t1 / f.t1 - 1.0).abs() < 1e-6);
}

#[test]
fn t2_exact_recovery() {
    let p = ramsey_params();
    let f = fit_t2(&synthetic_t2(&p, &t2_grid(), 0.0, 0).unwrap()).unwrap();
    assert!(!f.degenerate);
    let got = f.params.unwrap();
    assert!((got.t2 / T2_Q1 - 1.0).abs() < 0.01, "{got:?}");
    assert!((got.frequencies[0] / 1.0e5 - 1.0).abs() < 1e-3);
    assert!((got.offset - 0.5).abs() < 1e-3);
}

#[test]
fn t2_noisy_recovery() {
    let p = ramsey_params();
    for seed in 0..5 {
        let f = fit_t2(&synthetic_t2(&p, &t2_grid(), 0.02, seed).unwrap()).unwrap();
        let t2 = f.t2().unwrap();
        assert!((t2 / T2_Q1 - 1.0).abs() < 0.10, "seed {seed}: {t2}");
    }
}

#[test]
fn t2_fit_is_idempotent() {
    let p = ramsey_params();
    let f = fit_t2(&synthetic_t2(&p, &t2_grid(), 0.02, 3).unwrap()).unwrap().params.unwrap();
    let g = fit_t2(&synthetic_t2(&f, &t2_grid(), 0.0, 0).unwrap()).unwrap().params.unwrap();
    assert!((g.t2 / f.t2 - 1.0).abs() < 1e-6, "{} vs {}", g.t2, f.t2);
}

#[test]
fn t2_flat_data_is_degenerate() {
    let p = T2Params { amplitudes: [0.0, 0.0], ..ramsey_params() };
    let f = fit_t2(&synthetic_t2(&p, &t2_grid(), 0.0, 0).unwrap()).unwrap();
    assert!(f.degenerate);
    assert!(f.params.is_none());
    assert!((f.offset - 0.5).abs() < 1e-12);
    assert!(fit_t2(&synthetic_t2(&p, &t2_grid()[..10], 0.0, 0).unwrap()).is_err());
}

#[test]
fn decay_series_validation() {
    assert!(DecaySeries::new(vec![1.0, 1.0], vec![0.5, 0.4]).is_err());
    assert!(DecaySeries::new(vec![1.0, 2.0], vec![0.5]).is_err());
    assert!(DecaySeries::new(vec![1.0, 2.0], vec![0.5, f64::NAN]).is_err());
}

const TABLE: &str = r#"
[[qubits]]
index = 0
t1 = 62.93e-6
t2 = 50.00e-6

[[qubits]]
index = 1
t1 = 62.31e-6
t2 = 89.38e-6

[[qubits]]
index = 2
t1 = 45.03e-6
t2 = 50.00e-6

[gate_durations]
X = 3.5e-8
H = 3.5e-8
CX = 4.0e-7
CCX = 1.0e-6
RZ = 0.0
"#;

#[test]
fn device_table_parses_and_assigns_durations() {
    let t = DeviceTable::from_toml_str(TABLE).unwrap();
    assert_eq!(t.qubits.len(), 3);
    let c = t.assign_durations(&algos::qaa3(1).unwrap()).unwrap();
    assert_eq!(c.layers[0].duration, 3.5e-8);
    let tm = tau_matrix(&t, &c).unwrap();
    for (j, q) in t.qubits.iter().enumerate() {
        for (k, l) in c.layers.iter().enumerate() {
            assert!((tm.ad[j][k] - l.duration / q.t1).abs() < 1e-12);
            assert!((tm.dephasing[j][k] - l.duration / (2.0 * q.t2)).abs() < 1e-12);
        }
    }
    let coh = t.coherence();
    // T2 of Q0 is within 2·T1, so the table is physical.
    assert!(coh.is_ok());
}

#[test]
fn device_table_errors_carry_lines() {
    let bad = "[[qubits]]\nindex = 0\nt1 = \"x\"\nt2 = 1.0\n[gate_durations]\n";
    match DeviceTable::from_toml_str(bad) {
        Err(QemError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("unexpected {other:?}"),
    }
    let neg = "[[qubits]]\nindex = 0\nt1 = -1.0\nt2 = 1.0\n[gate_durations]\n";
    assert!(DeviceTable::from_toml_str(neg).is_err());
}

#[test]
fn weak_noise_angle() {
    let table = "[[qubits]]\nindex = 0\nt1 = 100e-6\nt2 = 100e-6\n[gate_durations]\nX = 100e-9\n";
    let t = DeviceTable::from_toml_str(table).unwrap();
    let c = t.assign_durations(&algos::pre1(1).unwrap()).unwrap();
    let tau = tau_matrix(&t, &c).unwrap().ad[0][0];
    assert!((tau - 1e-3).abs() < 1e-15);
    let theta = theta_from_tau(tau);
    assert!((theta - 0.063).abs() < 1e-3, "{theta}");
}

#[test]
fn tau_matrix_is_linear_in_durations() {
    let t = DeviceTable::from_toml_str(TABLE).unwrap();
    let c = t.assign_durations(&algos::qaa3(1).unwrap()).unwrap();
    let mut c2 = c.clone();
    for l in &mut c2.layers {
        l.duration *= 2.0;
    }
    let (a, b) = (tau_matrix(&t, &c).unwrap(), tau_matrix(&t, &c2).unwrap());
    for (ra, rb) in a.ad.iter().zip(&b.ad) {
        for (x, y) in ra.iter().zip(rb) {
            assert_eq!(2.0 * x, *y);
        }
    }
}
