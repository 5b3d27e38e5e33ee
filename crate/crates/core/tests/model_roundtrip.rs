//! Parser fidelity and round-trip checks on the bundled corpus.

use ecrv_core::diag::has_errors;
use ecrv_core::model::{
    parse_domain, stratification_check, validate_model, ClauseKind, FluentKind,
};

/// The bolus excerpt exactly as it circulates in the system documentation.
pub const BOLUS_LISTING: &str = "\
fluent(patient_bolus_delivery_enabled).
event(patient_bolus_delivery_started).    event(patient_bolus_delivery_stopped).
initiates(patient_bolus_delivery_started, patient_bolus_delivery_enabled, T).
terminates(patient_bolus_delivery_stopped, patient_bolus_delivery_enabled, T).

fluent(total_drug_delivered(X)).
trajectory(patient_bolus_delivery_enabled, T1, total_drug_delivered(Total), T2) :-
  basal_and_patient_bolus_flow_rate(FlowRate),
  holdsAt(total_drug_delivered(StartTotal), T1),
  Total #= StartTotal + ((T2 - T1) * FlowRate).

event(patient_bolus_completed).
happens(patient_bolus_completed, T2) :-  initiallyP(vtbi(VTBI)),
  holdsAt(patient_bolus_drug_delivered(VTBI), T2).
happens(patient_bolus_delivery_stopped, T) :- happens(patient_bolus_completed, T).

fluent(patient_bolus_drug_delivered(X)).
trajectory(patient_bolus_delivery_enabled, T1, patient_bolus_drug_delivered(X), T2) :-
  patient_bolus_only_flow_rate(FlowRate),
  X #= (T2 - T1) * FlowRate.
";

fn corpus(name: &str) -> String {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus");
    std::fs::read_to_string(format!("{dir}/{name}")).unwrap()
}

#[test]
fn bolus_listing_parses_with_expected_shape() {
    let m = parse_domain(BOLUS_LISTING).unwrap();
    assert_eq!(m.fluents.len(), 4, "three declared fluents plus the vtbi setting");
    assert_eq!(m.events.len(), 3);
    let count = |f: fn(&ClauseKind) -> bool| m.clauses_of(f).count();
    assert_eq!(count(|k| matches!(k, ClauseKind::Initiates { .. })), 1);
    assert_eq!(count(|k| matches!(k, ClauseKind::Terminates { .. })), 1);
    assert_eq!(count(|k| matches!(k, ClauseKind::Trajectory { .. })), 2);
    assert_eq!(count(|k| matches!(k, ClauseKind::Trigger { .. })), 2);

    let vtbi = &m.fluents["vtbi"];
    assert!(vtbi.implicit);
    assert_eq!(vtbi.kind, FluentKind::Functional);
    assert_eq!(m.fluents["total_drug_delivered"].kind, FluentKind::Functional);
    assert_eq!(m.fluents["patient_bolus_delivery_enabled"].kind, FluentKind::Boolean);
}

#[test]
fn bolus_listing_is_well_formed_and_stratified() {
    let m = parse_domain(BOLUS_LISTING).unwrap();
    let diags = validate_model(&m);
    assert!(!has_errors(&diags), "unexpected diagnostics: {diags:?}");
    stratification_check(&m).unwrap();
}

#[test]
fn corpus_models_round_trip() {
    for name in ["pca_bolus.ec", "toggle.ec"] {
        let text = corpus(name);
        let m1 = parse_domain(&text).unwrap();
        let printed = m1.to_string();
        let m2 = parse_domain(&printed).unwrap();
        assert_eq!(
            m1.clauses.len(),
            m2.clauses.len(),
            "{name}: clause count changed over round-trip"
        );
        // spans differ after reprinting, so compare the canonical rendering
        assert_eq!(printed, m2.to_string(), "{name}: reprint not stable");
        assert_eq!(m1.fluents, m2.fluents);
        assert_eq!(m1.events, m2.events);
        let diags = validate_model(&m1);
        assert!(!has_errors(&diags), "{name}: {diags:?}");
        stratification_check(&m1).unwrap();
    }
}

#[test]
fn listing_round_trips_clause_by_clause() {
    let m1 = parse_domain(BOLUS_LISTING).unwrap();
    let m2 = parse_domain(&m1.to_string()).unwrap();
    for (c1, c2) in m1.clauses.iter().zip(m2.clauses.iter()) {
        assert_eq!(c1.to_string(), c2.to_string());
    }
}

#[test]
fn rational_literals_survive_round_trip() {
    let src = "rate(1/3).\nlimit(2.5).\nbig(7/2).";
    let m1 = parse_domain(src).unwrap();
    let printed = m1.to_string();
    assert!(printed.contains("1/3"), "printed: {printed}");
    assert!(!printed.contains("0.333"), "printed: {printed}");
    let m2 = parse_domain(&printed).unwrap();
    assert_eq!(printed, m2.to_string());
}
