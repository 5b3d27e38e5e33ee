//! Engine vs oracle agreement: two independent evaluation paths over the
//! same models must coincide at every grid point, exactly.

use ecrv_core::engine::{trigger_closure, EngineOpts};
use ecrv_core::model::{parse_domain, parse_narrative};
use ecrv_core::oracle::{cross_check, simulate};
use ecrv_core::rational::{rat, rat_frac, Rat};
use std::sync::Arc;

fn corpus(name: &str) -> String {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus");
    std::fs::read_to_string(format!("{dir}/{name}")).unwrap()
}

fn check_agreement(model_src: &str, narrative_src: &str, dts: &[Rat]) {
    let model = Arc::new(parse_domain(model_src).unwrap());
    let narrative = parse_narrative(narrative_src).unwrap();
    let tl = trigger_closure(&model, &narrative, EngineOpts::default()).unwrap();
    let ck = tl.clone().checkpoint().unwrap();
    for dt in dts {
        let trace = simulate(&model, &narrative, dt, 1000).unwrap();
        // oracle and closure must derive the same event set
        let mut closure_events: Vec<String> = tl
            .event_pairs()
            .iter()
            .map(|(e, t)| format!("{e}@{}", ecrv_core::rational::rat_str(t)))
            .collect();
        closure_events.sort();
        let mut oracle_events: Vec<String> = trace
            .events
            .iter()
            .map(|(e, t)| format!("{e}@{}", ecrv_core::rational::rat_str(t)))
            .collect();
        oracle_events.sort();
        assert_eq!(closure_events, oracle_events, "event sets differ at dt={dt}");

        for timeline in [&tl, &ck] {
            let discrepancies = cross_check(timeline, &trace).unwrap();
            assert!(
                discrepancies.is_empty(),
                "dt={dt}: {} discrepancies, first: {}",
                discrepancies.len(),
                discrepancies[0]
            );
        }
    }
}

#[test]
fn pca_n1_agrees_at_all_resolutions() {
    check_agreement(&corpus("pca_bolus.ec"), &corpus("n1.nrt"), &[rat(1), rat_frac(1, 2), rat_frac(1, 4)]);
}

#[test]
fn sunny_day_narratives_agree() {
    for nrt in ["sunny_day_1.nrt", "sunny_day_2.nrt", "sunny_day_3.nrt"] {
        check_agreement(&corpus("pca_bolus.ec"), &corpus(nrt), &[rat_frac(1, 2)]);
    }
}

#[test]
fn oracle_inserts_exact_crossing() {
    let model = parse_domain(&corpus("pca_bolus.ec")).unwrap();
    let narrative = parse_narrative(&corpus("n1.nrt")).unwrap();
    // coarse grid that would step over t = 7 without exact insertion
    let trace = simulate(&model, &narrative, &rat(3), 1000).unwrap();
    assert!(trace.rows.iter().any(|r| r.time == rat(7)), "crossing instant not sampled");
    assert!(trace.events.iter().any(|(e, t)| e.name == "patient_bolus_completed" && *t == rat(7)));
    let at7 = trace.rows.iter().find(|r| r.time == rat(7)).unwrap();
    assert_eq!(at7.values["patient_bolus_drug_delivered"], Some(rat(20)));
    assert_eq!(at7.values["total_drug_delivered"], Some(rat(25)));
}

#[test]
fn mutated_clipping_is_caught() {
    // deliberately broken variant: stopping uses a *release* so no snapshot
    // is taken; the oracle must flag value disagreements after the stop
    let good = corpus("pca_bolus.ec");
    let bad = good.replace(
        "terminates(patient_bolus_delivery_stopped",
        "releases(patient_bolus_delivery_stopped",
    );
    let model = Arc::new(parse_domain(&bad).unwrap());
    let narrative = parse_narrative(&corpus("n1.nrt")).unwrap();
    let tl = trigger_closure(&model, &narrative, EngineOpts::default()).unwrap();

    // oracle simulates the *original* semantics
    let good_model = parse_domain(&good).unwrap();
    let trace = simulate(&good_model, &narrative, &rat(1), 1000).unwrap();
    let discrepancies = cross_check(&tl, &trace).unwrap();
    assert!(
        !discrepancies.is_empty(),
        "a semantics mutation must produce visible discrepancies"
    );
    assert!(discrepancies.iter().any(|d| d.time > rat(7)));
}
