use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qemkit::algos::{self, MaxCutGraph};
use qemkit::noise::Generator;
use qemkit::pec::pec_estimates;
use qemkit::qem::{evaluate_group, first_order_group, Engine};
use qemkit::{Exec, InsertMode, NoiseModel, ShotConfig};

fn group_evaluation(c: &mut Criterion) {
    let g = MaxCutGraph::square();
    let circuit = algos::qaoa(&g, &algos::default_qaoa_params()).unwrap();
    let o = algos::cost_observable(&g).unwrap();
    let model = NoiseModel::ad_theta(0.2).unwrap();
    let mut grp = c.benchmark_group("qaoa_first_order_group");
    grp.sample_size(10);
    for mode in [InsertMode::Direct, InsertMode::Ancilla] {
        let group = first_order_group(&circuit, Generator::Ad, mode).unwrap();
        for exec in [Exec::Parallel, Exec::Sequential] {
            let id = BenchmarkId::new(format!("{exec:?}"), format!("{mode:?}"));
            grp.bench_with_input(id, &exec, |b, &exec| b.iter(|| evaluate_group(&group, &o, &model, Engine::Exact, exec).unwrap()));
        }
        let shots = Engine::Shots(ShotConfig::new(1024, 10, 1).unwrap());
        for exec in [Exec::Parallel, Exec::Sequential] {
            let id = BenchmarkId::new(format!("{exec:?}_shots"), format!("{mode:?}"));
            grp.bench_with_input(id, &exec, |b, &exec| b.iter(|| evaluate_group(&group, &o, &model, shots, exec).unwrap()));
        }
    }
    grp.finish();
}

fn pec_sampling(c: &mut Criterion) {
    let circuit = algos::qaa3(1).unwrap();
    let o = qemkit::Observable::parse("P110", 3).unwrap();
    let model = NoiseModel::ad_theta(0.2).unwrap();
    let mut grp = c.benchmark_group("qaa3_pec_estimates");
    grp.sample_size(10);
    for exec in [Exec::Parallel, Exec::Sequential] {
        grp.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| pec_estimates(&circuit, &o, &model, 91, 16, 3, exec).unwrap())
        });
    }
    grp.finish();
}

criterion_group!(benches, group_evaluation, pec_sampling);
criterion_main!(benches);
