use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tfd_core::oracle::{
    build_thermal_state_doubled, evolve_doubled_boson, evolve_doubled_fermion, BasisDescriptor, OracleConfig,
    Scheme,
};
use tfd_core::verify::{boson_quench, fermion_quench};

fn thermal_states(c: &mut Criterion) {
    let mut group = c.benchmark_group("thermal_state");
    for levels in [20, 40, 60] {
        group.bench_with_input(BenchmarkId::new("boson", levels), &levels, |b, &n| {
            let basis = BasisDescriptor::boson_doubled(n).unwrap();
            b.iter(|| build_thermal_state_doubled(black_box(1.0), 1.0, 1.0, basis).unwrap())
        });
    }
    group.bench_function("fermion", |b| {
        b.iter(|| build_thermal_state_doubled(black_box(1.0), 1.0, 1.0, BasisDescriptor::FermionDoubled).unwrap())
    });
    group.finish();
}

fn evolution(c: &mut Criterion) {
    let boson = boson_quench().unwrap();
    let fermion = fermion_quench().unwrap();
    let times = [4.0, 6.0];
    let mut group = c.benchmark_group("doubled_evolution");
    group.sample_size(10);
    for levels in [20, 40] {
        let initial = build_thermal_state_doubled(1.0, 1.0, 1.0, BasisDescriptor::boson_doubled(levels).unwrap())
            .unwrap()
            .series;
        for scheme in [Scheme::Midpoint, Scheme::Magnus4] {
            let cfg = OracleConfig {
                truncation: levels,
                substeps_per_unit: 200,
                scheme,
            };
            let id = BenchmarkId::new(format!("boson_{scheme:?}"), levels);
            group.bench_with_input(id, &cfg, |b, cfg| {
                b.iter(|| evolve_doubled_boson(&boson, &initial, &times, cfg).unwrap())
            });
        }
    }
    let initial = build_thermal_state_doubled(1.0, 1.0, 1.0, BasisDescriptor::FermionDoubled)
        .unwrap()
        .series;
    let cfg = OracleConfig {
        substeps_per_unit: 200,
        scheme: Scheme::Magnus4,
        ..OracleConfig::default()
    };
    group.bench_function("fermion_Magnus4", |b| {
        b.iter(|| evolve_doubled_fermion(&fermion, &initial, &times, &cfg, 1.0).unwrap())
    });
    group.finish();
}

criterion_group!(benches, thermal_states, evolution);
criterion_main!(benches);
