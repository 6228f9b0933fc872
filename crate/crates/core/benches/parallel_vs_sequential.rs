//! Single-thread pool against the default rayon pool on the three hot
//! paths: the likelihood, candidate screening, and benchmark replicates.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPool;

use vinelogit::estimation::log_likelihood;
use vinelogit::selection::{allowed_candidates, candidate_gain};
use vinelogit::simbench::{run_benchmark, simulate, Method, Scenario, SimModelSpec, Strength};
use vinelogit::{select_model, SelectConfig};

fn pools() -> Vec<(&'static str, ThreadPool)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("sequential", one), ("parallel", all)]
}

fn likelihood(c: &mut Criterion) {
    let spec = SimModelSpec::preset(4, 8, Strength::Strong).unwrap();
    let data = simulate(&spec, 4000, 1).unwrap();
    let config = SelectConfig { max_edges: Some(6), ..Default::default() };
    let model = select_model(&data, &config).unwrap().params;
    let mut group = c.benchmark_group("log_likelihood");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new(name, data.n()), |b| {
            b.iter(|| pool.install(|| log_likelihood(&model, &data)))
        });
    }
    group.finish();
}

fn screening(c: &mut Criterion) {
    let spec = SimModelSpec::preset(2, 8, Strength::Strong).unwrap();
    let data = simulate(&spec, 2000, 2).unwrap();
    let config = SelectConfig { max_edges: Some(2), ..Default::default() };
    let model = select_model(&data, &config).unwrap().params;
    let keys = allowed_candidates(model.structure(), 1);
    let tol = Default::default();
    let mut group = c.benchmark_group("candidate_screening");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new(name, keys.len()), |b| {
            b.iter(|| {
                pool.install(|| keys.iter().map(|k| candidate_gain(&model, k, &data, &tol).gain).sum::<f64>())
            })
        });
    }
    group.finish();
}

fn replicates(c: &mut Criterion) {
    let scenario = Scenario {
        model_id: 5,
        n: 500,
        test_size: 1000,
        replicates: 8,
        methods: vec![Method::LinLr, Method::NaiveBayes],
        ..Default::default()
    };
    let mut group = c.benchmark_group("bench_replicates");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new(name, scenario.replicates), |b| {
            b.iter(|| pool.install(|| run_benchmark(&scenario).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, likelihood, screening, replicates);
criterion_main!(benches);
