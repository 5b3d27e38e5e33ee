//! Engine semantics on the bundled pump model: the trigger chain, the
//! open-interval reading of holdsAt, trajectory and snapshot values, and
//! residual-constraint answers.

use ecrv_core::engine::{trigger_closure, ClosedTimeline, EngineError, EngineOpts};
use ecrv_core::model::{parse_domain, parse_goal, parse_narrative, DomainModel, Narrative};
use ecrv_core::rational::{rat, rat_frac, Rat};
use std::sync::Arc;

fn corpus(name: &str) -> String {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus");
    std::fs::read_to_string(format!("{dir}/{name}")).unwrap()
}

fn pca_model() -> Arc<DomainModel> {
    Arc::new(parse_domain(&corpus("pca_bolus.ec")).unwrap())
}

fn n1() -> Narrative {
    parse_narrative(&corpus("n1.nrt")).unwrap()
}

fn pca_n1() -> ClosedTimeline {
    trigger_closure(&pca_model(), &n1(), EngineOpts::default()).unwrap()
}

#[test]
fn trigger_chain_completes_at_seven() {
    let tl = pca_n1();
    assert_eq!(tl.occurrences_of("patient_bolus_completed"), vec![rat(7)]);
    assert_eq!(tl.occurrences_of("patient_bolus_delivery_stopped"), vec![rat(7)]);
    assert_eq!(tl.events.len(), 3);
}

#[test]
fn closure_without_triggers_is_identity() {
    let model = Arc::new(parse_domain("fluent(f). event(e).\ninitiates(e, f, T).").unwrap());
    let n = parse_narrative("happens(e, 1). horizon(5).").unwrap();
    let tl = trigger_closure(&model, &n, EngineOpts::default()).unwrap();
    assert_eq!(tl.events.len(), 1);
}

#[test]
fn toggle_model_hits_zeno_bound() {
    let model = Arc::new(parse_domain(&corpus("toggle.ec")).unwrap());
    let n = parse_narrative(&corpus("toggle.nrt")).unwrap();
    let opts = EngineOpts { zeno_bound: 50, ..Default::default() };
    match trigger_closure(&model, &n, opts) {
        Err(EngineError::Zeno { bound, last }) => {
            assert_eq!(bound, 50);
            assert!(!last.is_empty());
        }
        other => panic!("expected zeno error, got {other:?}"),
    }
}

#[test]
fn holds_at_open_interval_semantics() {
    let tl = pca_n1();
    let f = "patient_bolus_delivery_enabled";
    // false at the initiation instant, true strictly after
    assert!(!tl.holds_at(f, &rat(2)).unwrap().0);
    assert!(tl.holds_at(f, &rat(4)).unwrap().0);
    // still true at the termination instant, false after
    assert!(tl.holds_at(f, &rat(7)).unwrap().0);
    assert!(!tl.holds_at(f, &rat(8)).unwrap().0);
    assert!(!tl.holds_at(f, &rat(0)).unwrap().0);
}

#[test]
fn trajectory_and_snapshot_values() {
    let tl = pca_n1();
    let total = "total_drug_delivered";
    assert_eq!(tl.value_at(total, &rat(0)).unwrap().0, rat(0));
    assert_eq!(tl.value_at(total, &rat(2)).unwrap().0, rat(0));
    // 0 + (4 - 2) * 5
    assert_eq!(tl.value_at(total, &rat(4)).unwrap().0, rat(10));
    // the crossing value at the termination instant
    assert_eq!(tl.value_at(total, &rat(7)).unwrap().0, rat(25));
    // snapshot keeps the value after delivery stops
    assert_eq!(tl.value_at(total, &rat(9)).unwrap().0, rat(25));
    assert_eq!(tl.value_at(total, &rat_frac(17, 4)).unwrap().0, rat_frac(45, 4));

    let pbdd = "patient_bolus_drug_delivered";
    assert_eq!(tl.value_at(pbdd, &rat(4)).unwrap().0, rat(8));
    assert_eq!(tl.value_at(pbdd, &rat(7)).unwrap().0, rat(20));
    assert_eq!(tl.value_at(pbdd, &rat(9)).unwrap().0, rat(20));
}

#[test]
fn query_happens_binds_time() {
    let tl = pca_n1();
    let goal = parse_goal("happens(patient_bolus_completed, T)").unwrap();
    let answers = tl.query(&goal).unwrap();
    assert_eq!(answers.len(), 1);
    assert_eq!(answers[0].bindings.get("T").map(String::as_str), Some("7"));
    assert!(answers[0].residual.is_empty());
}

#[test]
fn query_holds_returns_residual_interval() {
    let tl = pca_n1();
    let goal = parse_goal("holdsAt(patient_bolus_delivery_enabled, T)").unwrap();
    let answers = tl.query(&goal).unwrap();
    assert_eq!(answers.len(), 1);
    let mut residual = answers[0].residual.clone();
    residual.sort();
    assert_eq!(residual, vec!["2 #< T".to_string(), "T #=< 7".to_string()]);
}

#[test]
fn query_on_empty_model_has_no_answers() {
    let model = Arc::new(parse_domain("fluent(f).").unwrap());
    let n = parse_narrative("horizon(5).").unwrap();
    let tl = trigger_closure(&model, &n, EngineOpts::default()).unwrap();
    let goal = parse_goal("holdsAt(f, 1)").unwrap();
    assert!(tl.query(&goal).unwrap().is_empty());
}

#[test]
fn value_query_relates_value_and_time() {
    let tl = pca_n1();
    // during the bolus the total is 5*(T - 2); at 20 that is T = 6
    let goal = parse_goal("holdsAt(total_drug_delivered(20), T), T #< 7").unwrap();
    let answers = tl.query(&goal).unwrap();
    assert_eq!(answers.len(), 1);
    assert_eq!(answers[0].bindings.get("T").map(String::as_str), Some("6"));
}

#[test]
fn no_value_before_initialization() {
    let model = Arc::new(parse_domain("fluent(f(X)). event(e).").unwrap());
    let n = parse_narrative("horizon(5).").unwrap();
    let tl = trigger_closure(&model, &n, EngineOpts::default()).unwrap();
    match tl.value_at("f", &rat(1)) {
        Err(EngineError::NoValue { .. }) => {}
        other => panic!("expected NoValue, got {other:?}"),
    }
}

#[test]
fn multi_value_reported_on_conflicting_settings() {
    let model = Arc::new(
        parse_domain(
            "fluent(f(X)). event(a). event(b).\n\
             initiates(a, f(1), T).\n\
             initiates(b, f(2), T).",
        )
        .unwrap(),
    );
    let n = parse_narrative("happens(a, 1). happens(b, 1). horizon(5).").unwrap();
    let tl = trigger_closure(&model, &n, EngineOpts::default()).unwrap();
    match tl.value_at("f", &rat(3)) {
        Err(EngineError::MultiValue { values, .. }) => assert_eq!(values.len(), 2),
        other => panic!("expected MultiValue, got {other:?}"),
    }
}

#[test]
fn proofs_replay_against_the_timeline() {
    let tl = pca_n1();
    let (held, proof) = tl.holds_at("patient_bolus_delivery_enabled", &rat(4)).unwrap();
    assert!(held);
    tl.replay_proof(&proof).unwrap();

    let (_, vproof) = tl.value_at("total_drug_delivered", &rat(9)).unwrap();
    tl.replay_proof(&vproof).unwrap();

    for goal_text in
        ["happens(patient_bolus_completed, T)", "holdsAt(patient_bolus_delivery_enabled, T)"]
    {
        let goal = parse_goal(goal_text).unwrap();
        for ans in tl.query(&goal).unwrap() {
            tl.replay_proof(&ans.proof).unwrap();
        }
    }
}

#[test]
fn checkpointed_reads_agree_with_recursion() {
    let tl = pca_n1();
    let ck = tl.clone().checkpoint().unwrap();
    let f = "patient_bolus_delivery_enabled";
    let total = "total_drug_delivered";
    let mut t = Rat::from_integer(0.into());
    let quarter = rat_frac(1, 4);
    while t <= rat(10) {
        assert_eq!(
            ck.holds_at(f, &t).unwrap().0,
            tl.holds_at(f, &t).unwrap().0,
            "holds mismatch at {t}"
        );
        let a = ck.value_at(total, &t).map(|(v, _)| v);
        let b = tl.value_at(total, &t).map(|(v, _)| v);
        match (a, b) {
            (Ok(x), Ok(y)) => assert_eq!(x, y, "value mismatch at {t}"),
            (Err(_), Err(_)) => {}
            (x, y) => panic!("divergent value results at {t}: {x:?} vs {y:?}"),
        }
        t += quarter.clone();
    }
}

#[test]
fn checkpoint_skips_history() {
    let tl = pca_n1();
    let ck = tl.clone().checkpoint().unwrap();
    let cache = None;
    // uncheckpointed: recursion through the snapshot chain
    let (_, stats_plain) = {
        let goal = parse_goal("holdsAt(total_drug_delivered(V), 9)").unwrap();
        tl.query_with(&goal, cache).unwrap()
    };
    let (_, stats_ck) = {
        let goal = parse_goal("holdsAt(total_drug_delivered(V), 9)").unwrap();
        ck.query_with(&goal, cache).unwrap()
    };
    assert!(stats_ck.checkpoint_reads > 0);
    assert!(
        stats_ck.expansions < stats_plain.expansions,
        "checkpointed {} vs plain {}",
        stats_ck.expansions,
        stats_plain.expansions
    );
}

#[test]
fn cached_and_uncached_answers_agree() {
    let tl = pca_n1();
    let goal = parse_goal(
        "holdsAt(patient_bolus_delivery_enabled, 4), holdsAt(patient_bolus_delivery_enabled, 4)",
    )
    .unwrap();
    let cache = ecrv_core::engine::Cache::shared();
    let (with_cache, stats) = tl.solve_with_cache(&goal, &cache).unwrap();
    assert_eq!(with_cache.len(), 1);
    assert!(stats.cache.hits >= 1, "repeated ground subgoal should hit: {stats:?}");

    let plain = tl.query(&goal).unwrap();
    assert_eq!(plain.len(), with_cache.len());
}

#[test]
fn concurrent_queries_share_a_timeline() {
    let tl = Arc::new(pca_n1().checkpoint().unwrap());
    let mut handles = Vec::new();
    for i in 0..4 {
        let tl = Arc::clone(&tl);
        handles.push(std::thread::spawn(move || {
            let t = rat(i);
            tl.holds_at("patient_bolus_delivery_enabled", &t).unwrap().0
        }));
    }
    let results: Vec<bool> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert_eq!(results, vec![false, false, false, true]);
}
