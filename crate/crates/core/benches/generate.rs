use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dualbeam::dataset::generate_dataset_with;
use dualbeam::exec::Execution;
use dualbeam::ScenarioConfig;

fn generate(c: &mut Criterion) {
    let cfg = ScenarioConfig::desk();
    let mut group = c.benchmark_group("generate_desk_dataset");
    group.sample_size(10);
    for samples in [8usize, 64] {
        for exec in [Execution::Sequential, Execution::Parallel] {
            group.bench_with_input(
                BenchmarkId::new(format!("{exec:?}"), samples),
                &samples,
                |b, &n| b.iter(|| generate_dataset_with(&cfg, n, 10.0, exec).unwrap()),
            );
        }
    }
    group.finish();
}

criterion_group!(benches, generate);
criterion_main!(benches);
