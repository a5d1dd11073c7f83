use criterion::{criterion_group, criterion_main, Criterion};
use optimist_core::eluder::{build_lower_bound_instance, greedy_eluder_certificate, verify_eluder_sequence};
use optimist_core::instances::validity_instance;
use optimist_core::{FunctionClassTable, LinkKind};

fn greedy(c: &mut Criterion) {
    let table = FunctionClassTable::new(validity_instance().excess_table()).unwrap();
    c.bench_function("greedy_certificate_441x20", |b| {
        b.iter(|| greedy_eluder_certificate(&table, 1e-3, 200))
    });
}

fn lower_bound(c: &mut Criterion) {
    c.bench_function("lower_bound_instance_d17", |b| {
        b.iter(|| {
            let inst = build_lower_bound_instance(17, 4.0, LinkKind::Sigmoid, None, 9).unwrap();
            let table = inst.excess_table().unwrap();
            verify_eluder_sequence(&inst.certificate(), &table).unwrap()
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = greedy, lower_bound
}
criterion_main!(benches);
