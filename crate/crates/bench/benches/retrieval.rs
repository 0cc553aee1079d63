use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use outline_bench::Fixture;
use outline_core::expansion::rm1_terms;
use outline_core::index::{build_index, retrieve_topk, Bm25Scorer, CosineScorer};
use outline_core::{Bm25Params, TokenPipelineConfig};

fn indexing(c: &mut Criterion) {
    let fx = Fixture::new(50);
    let texts = fx.data.corpus.texts();
    c.bench_function("build_index/50_pages", |b| {
        b.iter(|| build_index(black_box(&texts), &TokenPipelineConfig::default()).unwrap())
    });
}

fn first_stage(c: &mut Criterion) {
    let fx = Fixture::new(50);
    let ix = &fx.index;
    let mut group = c.benchmark_group("topk_100");
    group.bench_function("bm25", |b| {
        b.iter(|| {
            for q in &fx.queries {
                let scorer = Bm25Scorer::from_tokens(ix, &q.terms, Bm25Params::default());
                black_box(retrieve_topk(ix, &scorer, &q.query_id, 100));
            }
        })
    });
    group.bench_function("tfidf_cosine", |b| {
        b.iter(|| {
            for q in &fx.queries {
                let scorer = CosineScorer::from_tokens(ix, &q.terms);
                black_box(retrieve_topk(ix, &scorer, &q.query_id, 100));
            }
        })
    });
    group.finish();

    c.bench_function("rm1_terms/all_queries", |b| {
        b.iter(|| {
            for q in &fx.queries {
                black_box(rm1_terms(ix, q, 10, 10, 1500.0).unwrap());
            }
        })
    });
}

fn reranking(c: &mut Criterion) {
    let fx = Fixture::new(50);
    let ex = fx.experiment();
    let mut group = c.benchmark_group("rerank_candidates");
    group.sample_size(10);
    for name in ["bm25", "tfidf-cs", "tfidf-cs+rocchio", "glove-cs", "glove-cs+rocchio"] {
        let spec = name.parse().unwrap();
        group.bench_function(name, |b| {
            b.iter(|| ex.run(spec, &fx.queries, Some(&fx.candidates), 0).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, indexing, first_stage, reranking);
criterion_main!(benches);
