use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ecrv_bench::{n1, pca_model, switch_narrative};
use ecrv_core::engine::{trigger_closure, EngineOpts};
use ecrv_core::model::parse_goal;
use ecrv_core::rational::rat;

fn bench_closure(c: &mut Criterion) {
    let model = pca_model();
    let narrative = n1();
    c.bench_function("trigger_closure/pca_n1", |b| {
        b.iter(|| trigger_closure(&model, &narrative, EngineOpts::default()).unwrap())
    });
}

fn bench_query_cache(c: &mut Criterion) {
    let model = pca_model();
    let narrative = n1();
    let tl = trigger_closure(&model, &narrative, EngineOpts::default()).unwrap();
    let goal = parse_goal(
        "holdsAt(total_drug_delivered(V1), 4), holdsAt(total_drug_delivered(V2), 8), V2 #> V1",
    )
    .unwrap();
    c.bench_function("query/cached", |b| {
        b.iter(|| {
            let cache = ecrv_core::engine::Cache::shared();
            tl.solve_with_cache(&goal, &cache).unwrap()
        })
    });
    c.bench_function("query/uncached", |b| b.iter(|| tl.query_with(&goal, None).unwrap()));
}

fn bench_checkpointing(c: &mut Criterion) {
    let (model, narrative) = switch_narrative(8);
    let plain = trigger_closure(&model, &narrative, EngineOpts::default()).unwrap();
    let ck = plain.clone().checkpoint().unwrap();
    let boundaries = plain.boundaries();
    c.bench_function("boundary_values/checkpointed", |b| {
        b.iter_batched(
            || boundaries.clone(),
            |bs| {
                for t in &bs {
                    let _ = ck.value_at("f", t);
                }
            },
            BatchSize::SmallInput,
        )
    });
    c.bench_function("boundary_values/recursive", |b| {
        b.iter_batched(
            || boundaries.clone(),
            |bs| {
                for t in &bs {
                    let _ = plain.value_at("f", t);
                }
            },
            BatchSize::SmallInput,
        )
    });
}

fn bench_value_at(c: &mut Criterion) {
    let model = pca_model();
    let narrative = n1();
    let tl =
        trigger_closure(&model, &narrative, EngineOpts::default()).unwrap().checkpoint().unwrap();
    c.bench_function("value_at/checkpointed", |b| {
        b.iter(|| tl.value_at("total_drug_delivered", &rat(9)).unwrap())
    });
}

criterion_group!(
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench_closure, bench_query_cache, bench_checkpointing, bench_value_at
);
criterion_main!(benches);
