use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;

use swp_core::alignment::{run_benchmark, synthetic_fixture, BenchmarkConfig, Method};
use swp_core::analysis::split_half_matrix;
use swp_core::item::{Domain, Tone};
use swp_core::linalg::gaussian_matrix;
use swp_core::par::{stream_rng, Execution};
use swp_core::ratings::RatingMatrix;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn rating_matrix(m: usize, n: usize, seed: u64) -> RatingMatrix {
    let means = gaussian_matrix(m, n, &mut stream_rng(seed, 0)).map(|v| (3.0 + v).clamp(1.0, 5.0));
    RatingMatrix {
        tones: (0..m).map(|i| Tone::new(&format!("tone-{}", char::from(b'a' + (i % 26) as u8))).unwrap()).collect(),
        sentences: (0..n).map(|j| format!("sentence {j}")).collect(),
        means,
        counts: DMatrix::from_element(m, n, 5),
        domain: Domain::Human,
    }
}

fn split_half(c: &mut Criterion) {
    let a = rating_matrix(24, 60, 1);
    let b = RatingMatrix {
        domain: Domain::Llm,
        ..rating_matrix(24, 60, 2)
    };
    let mut group = c.benchmark_group("split-half-cross");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bench, &exec| {
            bench.iter(|| split_half_matrix(&a, Some(&b), 500, 3, exec).unwrap())
        });
    }
    group.finish();
}

fn alignment_benchmark(c: &mut Criterion) {
    let f = synthetic_fixture(40, 80, 0);
    let cfg = BenchmarkConfig {
        seeds: 8,
        methods: vec![Method::Procrustes, Method::Bli, Method::Random],
        ..BenchmarkConfig::default()
    };
    let mut group = c.benchmark_group("alignment-benchmark");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bench, &exec| {
            bench.iter(|| run_benchmark(&f.x, &f.y, &f.truth, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, split_half, alignment_benchmark);
criterion_main!(benches);
