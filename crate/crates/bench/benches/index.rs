//! Offline costs: k-means and full index construction.

use criterion::{criterion_group, criterion_main, Criterion};

use pirrag_core::eval::gen_synthetic_corpus;
use pirrag_core::index::{default_cluster_count, kmeans_fit, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use pirrag_core::{IndexConfig, PirIndex};

fn kmeans(c: &mut Criterion) {
    let mut g = c.benchmark_group("kmeans");
    g.sample_size(10);
    for n in [1000, 5000] {
        let corpus = gen_synthetic_corpus(n, 32, 50, 0.15, 8, 1).unwrap();
        let vectors: Vec<Vec<f32>> = corpus.into_iter().map(|r| r.embedding).collect();
        let k = default_cluster_count(n);
        g.bench_function(format!("n{n}_k{k}"), |b| {
            b.iter(|| kmeans_fit(&vectors, k, DEFAULT_MAX_ITERS, DEFAULT_TOL, 3).unwrap())
        });
    }
    g.finish();
}

fn build_index(c: &mut Criterion) {
    let corpus = gen_synthetic_corpus(2000, 32, 50, 0.15, 32, 1).unwrap();
    let cfg = IndexConfig::default().seeded(3);
    let mut g = c.benchmark_group("build_index");
    g.sample_size(10);
    g.bench_function("n2000", |b| b.iter(|| PirIndex::build(&corpus, &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, kmeans, build_index);
criterion_main!(benches);
