use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fairclust::data::{balanced_subsample, generate_synthetic, SyntheticSpec};
use fairclust::fair_reduce::algorithm1_with;
use fairclust::matching::{pairwise_emd_table_with, EmdMode};
use fairclust::{ColoredDataset, Exec, NormSpec, SolverConfig};

fn sample(size: usize) -> ColoredDataset {
    let spec = SyntheticSpec {
        colors: 8,
        points_per_color: size / 8 * 4,
        dim: 2,
        components: 6,
        spread: 1.0,
        box_size: 30.0,
    };
    balanced_subsample(&generate_synthetic(&spec, 11).unwrap(), size, 5).unwrap()
}

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn emd_table(c: &mut Criterion) {
    let mut group = c.benchmark_group("pairwise_emd_table");
    group.sample_size(10);
    for size in [200, 400] {
        let ds = sample(size);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, size), &ds, |b, ds| {
                b.iter(|| pairwise_emd_table_with(black_box(ds), NormSpec::k_median(), EmdMode::Exact, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn reduction(c: &mut Criterion) {
    let mut group = c.benchmark_group("algorithm1");
    group.sample_size(10);
    let ds = sample(400);
    for k in [5, 10] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, k), &k, |b, &k| {
                b.iter(|| {
                    algorithm1_with(black_box(&ds), k, NormSpec::k_median(), &SolverConfig::default(), exec).unwrap()
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, emd_table, reduction);
criterion_main!(benches);
