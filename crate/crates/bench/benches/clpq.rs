use criterion::{criterion_group, criterion_main, Criterion};
use ecrv_core::clpq::{LinConstraint, LinExpr, Store};
use ecrv_core::rational::rat;
use std::collections::BTreeSet;

fn chain_store(n: i64) -> Store {
    // x1 <= x2 <= ... <= xn with bounds on both ends
    let mut store = Store::new().assert_cons(&LinConstraint::le(
        LinExpr::constant(rat(0)),
        LinExpr::var("x1"),
    ));
    for i in 1..n {
        store = store.assert_cons(&LinConstraint::le(
            LinExpr::var(format!("x{i}")),
            LinExpr::var(format!("x{}", i + 1)),
        ));
    }
    store.assert_cons(&LinConstraint::le(
        LinExpr::var(format!("x{n}")),
        LinExpr::constant(rat(100)),
    ))
}

fn bench_projection(c: &mut Criterion) {
    let store = chain_store(6);
    let mut keep = BTreeSet::new();
    keep.insert("x1".to_string());
    keep.insert("x6".to_string());
    c.bench_function("clpq/project_chain6", |b| b.iter(|| store.project(&keep)));
}

fn bench_entailment(c: &mut Criterion) {
    let store = chain_store(6);
    let goal = LinConstraint::le(LinExpr::var("x1"), LinExpr::var("x6"));
    c.bench_function("clpq/entails_chain6", |b| b.iter(|| store.entails(&goal)));
}

criterion_group!(
    name = benches;
    config = Criterion::default().sample_size(30);
    targets = bench_projection, bench_entailment
);
criterion_main!(benches);
