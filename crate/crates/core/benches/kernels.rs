//! Rayon pool against a one-thread pool on the heavy kernels. Build with
//! `--no-default-features` to time the plain sequential fallback instead.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPool;

use scod::distributions::{sample, Source};
use scod::metrics::{risk_coverage_curve, EvaluationSet};
use scod::scenarios;
use scod::scorer_models::{loss, Architecture, Head, Objective, ScorerModel};

fn pools() -> Vec<(&'static str, ThreadPool)> {
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("sequential", one), ("rayon", all)]
}

fn kernels(c: &mut Criterion) {
    let env = scenarios::open_set().unwrap();
    let inl = sample(&env, Source::Inlier, 20_000, 1);
    let wild = sample(&env, Source::Wild, 20_000, 2);
    let arch = Architecture {
        input_dim: env.dim(),
        hidden_dim: 16,
        num_classes: env.num_classes(),
        head: Head::Decoupled {
            shared_embedding: false,
        },
    };
    let model = ScorerModel::initialize(arch, 3).unwrap();
    let test = sample(&env, Source::Test, 100_000, 4);
    let eval = EvaluationSet::from_samples(&test).unwrap();
    let scores: Vec<f64> = test.iter().map(|s| s.features[0]).collect();
    let classes = vec![0; test.len()];

    let mut group = c.benchmark_group("kernels");
    group.sample_size(20);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new("sample_100k", name), |b| {
            b.iter(|| pool.install(|| sample(&env, Source::Test, 100_000, 5)))
        });
        group.bench_function(BenchmarkId::new("decoupled_loss_40k", name), |b| {
            b.iter(|| pool.install(|| loss(&model, &Objective::Decoupled, &inl, &wild).unwrap()))
        });
        group.bench_function(BenchmarkId::new("rc_curve_100k", name), |b| {
            b.iter(|| {
                pool.install(|| risk_coverage_curve(&eval, &scores, &classes, 0.75, 101).unwrap())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
