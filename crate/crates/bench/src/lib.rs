//! Shared fixtures for the criterion benchmarks: the bundled pump model and
//! generated multi-bolus narratives.

use ecrv_core::model::{parse_domain, parse_narrative, DomainModel, Narrative};
use std::sync::Arc;

pub fn corpus_dir() -> &'static str {
    concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus")
}

pub fn pca_model() -> Arc<DomainModel> {
    let text = std::fs::read_to_string(format!("{}/pca_bolus.ec", corpus_dir())).unwrap();
    Arc::new(parse_domain(&text).unwrap())
}

pub fn n1() -> Narrative {
    let text = std::fs::read_to_string(format!("{}/n1.nrt", corpus_dir())).unwrap();
    parse_narrative(&text).unwrap()
}

/// `k` alternating start/stop events on integer times; horizon scales with k.
pub fn switch_narrative(k: usize) -> (Arc<DomainModel>, Narrative) {
    let model = Arc::new(
        parse_domain(
            "fluent(g). fluent(f(X)). event(start). event(stop).\n\
             initiates(start, g, T).\n\
             terminates(stop, g, T).\n\
             rate(3).\n\
             trajectory(g, T1, f(X), T2) :- rate(R), X #= (T2 - T1) * R.\n\
             initiallyP(f(0)).",
        )
        .unwrap(),
    );
    let mut text = String::new();
    for i in 0..k {
        let name = if i % 2 == 0 { "start" } else { "stop" };
        text.push_str(&format!("happens({name}, {}).\n", i + 1));
    }
    text.push_str(&format!("horizon({}).", k + 2));
    (model, parse_narrative(&text).unwrap())
}
