use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use elliptail::estimators::{replicate_fits, FitOptions};
use elliptail::exact::joint_survival_grid;
use elliptail::simulation::sample_pairs;
use elliptail::{EllipticalPair, Execution};

const STRATEGIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn sampling(c: &mut Criterion) {
    let pair = EllipticalPair::gaussian(0.5).unwrap();
    let mut g = c.benchmark_group("sample_pairs_200k");
    for (name, exec) in STRATEGIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sample_pairs(&pair, black_box(200_000), 1, exec).unwrap())
        });
    }
    g.finish();
}

fn exact_grid(c: &mut Criterion) {
    let pair = EllipticalPair::gaussian(0.5).unwrap();
    let points: Vec<(f64, f64)> = (0..16)
        .flat_map(|i| (0..16).map(move |j| (0.5 + 0.5 * i as f64, 0.5 + 0.5 * j as f64)))
        .collect();
    let mut g = c.benchmark_group("exact_grid_16x16");
    for (name, exec) in STRATEGIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| joint_survival_grid(&pair, black_box(&points), 1e-12, exec))
        });
    }
    g.finish();
}

fn replications(c: &mut Criterion) {
    let pair = EllipticalPair::gaussian(0.5).unwrap();
    let opts = FitOptions::default();
    let mut g = c.benchmark_group("replicate_fits_8x20k");
    g.sample_size(10);
    for (name, exec) in STRATEGIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| replicate_fits(&pair, 20_000, 8, 3, &opts, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, sampling, exact_grid, replications);
criterion_main!(benches);
