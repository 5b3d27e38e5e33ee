//! Scenario consistency and safety-property checks on the bundled corpus.

use ecrv_core::engine::EngineOpts;
use ecrv_core::model::{parse_domain, parse_narrative, DomainModel, Narrative};
use ecrv_core::rational::rat;
use ecrv_core::validate::{
    check_property, check_scenario, staged_run, sweep, PropertySpec, Scenario, Verdict,
};
use std::collections::BTreeSet;
use std::sync::Arc;

fn corpus(name: &str) -> String {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus");
    std::fs::read_to_string(format!("{dir}/{name}")).unwrap()
}

fn pca() -> Arc<DomainModel> {
    Arc::new(parse_domain(&corpus("pca_bolus.ec")).unwrap())
}

fn n1() -> Narrative {
    parse_narrative(&corpus("n1.nrt")).unwrap()
}

#[test]
fn sunny_day_scenario_is_consistent() {
    let scenario = Scenario::from_file("sunny_day", &corpus("sunny_day.scn")).unwrap();
    let report = check_scenario(&pca(), &scenario, EngineOpts::default());
    assert_eq!(report.verdict, Verdict::Consistent, "{}", report.render_text());
    assert!(report.postconditions.iter().all(|p| p.holds));
}

#[test]
fn seeded_bad_scenario_names_failing_conjunct_and_actual_value() {
    let scenario = Scenario::from_file("seeded_bad", &corpus("seeded_bad.scn")).unwrap();
    let report = check_scenario(&pca(), &scenario, EngineOpts::default());
    assert_eq!(report.verdict, Verdict::Inconsistent);
    let failing = report.postconditions.iter().find(|p| !p.holds).unwrap();
    let exp = failing.explanation.as_deref().unwrap();
    assert!(exp.contains("total_drug_delivered(24)"), "{exp}");
    assert!(exp.contains("actual value 25"), "{exp}");
}

#[test]
fn initially_holding_fluent_at_zero_is_consistent() {
    let model = Arc::new(parse_domain("fluent(ready). initiallyP(ready).").unwrap());
    let scenario =
        Scenario::from_file("t0", "horizon(5).\nexpect(ready, at(0)).").unwrap();
    let report = check_scenario(&model, &scenario, EngineOpts::default());
    assert_eq!(report.verdict, Verdict::Consistent, "{}", report.render_text());
}

#[test]
fn postcondition_order_does_not_change_verdict() {
    let fwd = "happens(patient_bolus_delivery_started, 2).\nhorizon(10).\n\
               expect(total_drug_delivered(25), at(8)).\nexpect(patient_bolus_delivery_enabled, at(4)).";
    let rev = "happens(patient_bolus_delivery_started, 2).\nhorizon(10).\n\
               expect(patient_bolus_delivery_enabled, at(4)).\nexpect(total_drug_delivered(25), at(8)).";
    let a = check_scenario(&pca(), &Scenario::from_file("a", fwd).unwrap(), EngineOpts::default());
    let b = check_scenario(&pca(), &Scenario::from_file("b", rev).unwrap(), EngineOpts::default());
    assert_eq!(a.verdict, b.verdict);
    assert_eq!(a.verdict, Verdict::Consistent);
}

#[test]
fn overdose_nine_two_is_violated_with_earliest_witness() {
    let property = PropertySpec::Overdose {
        fluent: "total_drug_delivered".into(),
        max_volume: rat(9),
        window: rat(2),
    };
    let report = check_property(&pca(), &n1(), &property, EngineOpts::default());
    assert_eq!(report.verdict, Verdict::Violation, "{}", report.render_text());
    let w = report.witness.unwrap();
    assert_eq!(w.times.get("T1").map(String::as_str), Some("2"));
    assert_eq!(w.times.get("T2").map(String::as_str), Some("4"));
    assert_eq!(w.values.get("delivered").map(String::as_str), Some("10"));
}

#[test]
fn overdose_ten_two_passes_at_the_boundary() {
    let property = PropertySpec::Overdose {
        fluent: "total_drug_delivered".into(),
        max_volume: rat(10),
        window: rat(2),
    };
    let report = check_property(&pca(), &n1(), &property, EngineOpts::default());
    assert_eq!(report.verdict, Verdict::Pass, "{}", report.render_text());
}

#[test]
fn overdose_witness_reverifies_as_scenario_postcondition() {
    let property = PropertySpec::Overdose {
        fluent: "total_drug_delivered".into(),
        max_volume: rat(9),
        window: rat(2),
    };
    let report = check_property(&pca(), &n1(), &property, EngineOpts::default());
    let w = report.witness.unwrap();
    let (t1, t2) = (w.times["T1"].clone(), w.times["T2"].clone());
    let scn = format!(
        "happens(patient_bolus_delivery_started, 2).\nhorizon(10).\n\
         expect(holdsAt(total_drug_delivered(V1), {t1}), holdsAt(total_drug_delivered(V2), {t2}), V2 - V1 #> 9, at(0))."
    );
    let scenario = Scenario::from_file("witness", &scn).unwrap();
    let verdict = check_scenario(&pca(), &scenario, EngineOpts::default()).verdict;
    assert_eq!(verdict, Verdict::Consistent);
}

#[test]
fn response_time_inclusive_deadline() {
    let on_time = PropertySpec::ResponseTime {
        trigger: "patient_bolus_delivery_started".into(),
        response: "patient_bolus_delivery_stopped".into(),
        deadline: rat(5),
    };
    let report = check_property(&pca(), &n1(), &on_time, EngineOpts::default());
    assert_eq!(report.verdict, Verdict::Pass, "stop at 7 = start 2 + 5 is inside");

    let too_tight = PropertySpec::ResponseTime {
        trigger: "patient_bolus_delivery_started".into(),
        response: "patient_bolus_delivery_stopped".into(),
        deadline: rat(4),
    };
    let report = check_property(&pca(), &n1(), &too_tight, EngineOpts::default());
    assert_eq!(report.verdict, Verdict::Violation);
    assert!(report.witness.unwrap().description.contains("patient_bolus_delivery_started at 2"));
}

#[test]
fn sweep_counts_match_individual_verdicts() {
    let property = PropertySpec::Overdose {
        fluent: "total_drug_delivered".into(),
        max_volume: rat(9),
        window: rat(2),
    };
    let narratives: Vec<(String, Narrative)> = ["sunny_day_1.nrt", "sunny_day_2.nrt", "sunny_day_3.nrt"]
        .iter()
        .map(|n| (n.to_string(), parse_narrative(&corpus(n)).unwrap()))
        .collect();
    let summary = sweep(&pca(), &narratives, &property, EngineOpts::default()).unwrap();
    assert_eq!(summary.violations, 3);
    assert_eq!(summary.passes, 0);
    assert_eq!(summary.errors, 0);
    let individual: Vec<Verdict> = narratives
        .iter()
        .map(|(_, n)| check_property(&pca(), n, &property, EngineOpts::default()).verdict)
        .collect();
    assert_eq!(individual.iter().filter(|v| **v == Verdict::Violation).count(), summary.violations);
}

#[test]
fn sweep_isolates_bad_narratives() {
    let property = PropertySpec::Overdose {
        fluent: "total_drug_delivered".into(),
        max_volume: rat(9),
        window: rat(2),
    };
    let model = Arc::new(parse_domain(&corpus("toggle.ec")).unwrap());
    // toggle narrative produces a zeno error; pair with a quiet one
    let good = parse_narrative("horizon(1).").unwrap();
    let zeno = parse_narrative(&corpus("toggle.nrt")).unwrap();
    let narratives =
        vec![("zeno".to_string(), zeno), ("quiet".to_string(), good)];
    let opts = EngineOpts { zeno_bound: 20, ..Default::default() };
    let summary = sweep(&model, &narratives, &property, opts).unwrap();
    assert_eq!(summary.errors, 2, "zeno narrative errors; quiet one has no value curve");
    assert_eq!(summary.reports.len(), 2);
    assert!(summary.reports[0].explanation.as_deref().unwrap().contains("zeno"));
}

#[test]
fn sweep_requires_narratives() {
    let property = PropertySpec::ResponseTime {
        trigger: "a".into(),
        response: "b".into(),
        deadline: rat(1),
    };
    assert!(sweep(&pca(), &[], &property, EngineOpts::default()).is_err());
}

#[test]
fn staged_run_matches_single_pass_closure() {
    let model = pca();
    let completion_rule = model
        .clauses_of(|k| matches!(k, ecrv_core::model::ClauseKind::Trigger { .. }))
        .map(|(i, _)| i)
        .collect::<Vec<_>>();
    assert_eq!(completion_rule.len(), 2);
    let stages = vec![
        BTreeSet::from([completion_rule[0]]),
        BTreeSet::from([completion_rule[1]]),
    ];
    let (tl, warnings) = staged_run(&model, &n1(), &stages, EngineOpts::default()).unwrap();
    assert!(warnings.is_empty(), "{warnings:?}");
    let single = ecrv_core::engine::trigger_closure(&model, &n1(), EngineOpts::default()).unwrap();
    assert_eq!(tl.event_pairs(), single.event_pairs());
}

#[test]
fn staged_run_single_stage_is_identity() {
    let model = pca();
    let all: BTreeSet<usize> = model
        .clauses_of(|k| matches!(k, ecrv_core::model::ClauseKind::Trigger { .. }))
        .map(|(i, _)| i)
        .collect();
    let (tl, warnings) = staged_run(&model, &n1(), &[all], EngineOpts::default()).unwrap();
    assert!(warnings.is_empty());
    let single = ecrv_core::engine::trigger_closure(&model, &n1(), EngineOpts::default()).unwrap();
    assert_eq!(tl.event_pairs(), single.event_pairs());
}

#[test]
fn staged_run_reports_order_sensitivity() {
    let src = "event(a). event(b). event(c).\n\
               happens(b, T) :- happens(a, T1), T #= T1 + 5.\n\
               happens(c, T) :- happens(a, T1), T #= T1 + 1.";
    let model = Arc::new(parse_domain(src).unwrap());
    let triggers: Vec<usize> = model
        .clauses_of(|k| matches!(k, ecrv_core::model::ClauseKind::Trigger { .. }))
        .map(|(i, _)| i)
        .collect();
    let narrative = parse_narrative("happens(a, 1). horizon(10).").unwrap();
    let stages = vec![BTreeSet::from([triggers[0]]), BTreeSet::from([triggers[1]])];
    let (_, warnings) = staged_run(&model, &narrative, &stages, EngineOpts::default()).unwrap();
    assert_eq!(warnings.len(), 1);
    assert_eq!(warnings[0].event, "c");
    assert_eq!(warnings[0].time, "2");
    assert_eq!(warnings[0].earlier_time, "6");
}

#[test]
fn staged_run_rejects_non_partitions() {
    let model = pca();
    let stages = vec![BTreeSet::from([0usize])];
    assert!(staged_run(&model, &n1(), &stages, EngineOpts::default()).is_err());
}

#[test]
fn property_parsing() {
    let p = PropertySpec::parse("overdose(total_drug_delivered, 9, 2)").unwrap();
    assert_eq!(p.name(), "overdose(total_drug_delivered, 9, 2)");
    let r = PropertySpec::parse("response_time(a, b, 5)").unwrap();
    assert_eq!(r.name(), "response_time(a, b, 5)");
    assert!(PropertySpec::parse("overdose(f, -1, 2)").is_err());
    assert!(PropertySpec::parse("elephant(1)").is_err());
}
