//! Abduction: event hypotheses with symbolic times, parameter regions,
//! incremental refinement, and instantiation soundness.

use ecrv_core::abduce::{
    abduce_events, abduce_parameters, refine, verify_instantiation, AbduceError, AbduceOpts,
    AbducibleSpec, ParametricGoal,
};
use ecrv_core::clpq::{LinConstraint, LinExpr, Store};
use ecrv_core::model::{parse_domain, parse_goal, parse_narrative, Atom, DomainModel, Narrative};
use ecrv_core::rational::{parse_rat, rat, Rat};
use std::collections::BTreeMap;
use std::sync::Arc;

fn corpus(name: &str) -> String {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus");
    std::fs::read_to_string(format!("{dir}/{name}")).unwrap()
}

fn pca() -> Arc<DomainModel> {
    Arc::new(parse_domain(&corpus("pca_bolus.ec")).unwrap())
}

fn empty_narrative() -> Narrative {
    parse_narrative("horizon(10).").unwrap()
}

fn started_spec() -> AbducibleSpec {
    AbducibleSpec {
        template: Atom::new("patient_bolus_delivery_started", Vec::new()),
        window: (rat(0), rat(10)),
        max_count: 1,
    }
}

fn region_store(cons: &[LinConstraint]) -> Store {
    Store::new().assert_all(cons)
}

fn entails_both_ways(region: &[LinConstraint], reference: &[LinConstraint]) -> bool {
    let r = region_store(region);
    let q = region_store(reference);
    reference.iter().all(|c| r.entails(c)) && region.iter().all(|c| q.entails(c))
}

fn ts_between(lo: i64, hi: i64) -> Vec<LinConstraint> {
    vec![
        LinConstraint::le(LinExpr::constant(rat(lo)), LinExpr::var("Ts")),
        LinConstraint::le(LinExpr::var("Ts"), LinExpr::constant(rat(hi))),
    ]
}

#[test]
fn bolus_start_is_abduced_with_symbolic_time() {
    let goal = parse_goal("happens(patient_bolus_completed, T), T #=< 9").unwrap();
    let solutions = abduce_events(
        &pca(),
        &empty_narrative(),
        &goal,
        &[started_spec()],
        AbduceOpts::default(),
    )
    .unwrap();
    assert_eq!(solutions.len(), 1);
    let sol = &solutions[0];
    assert_eq!(sol.hypotheses.len(), 1);
    assert_eq!(sol.hypotheses[0].event, "patient_bolus_delivery_started");
    assert_eq!(sol.hypotheses[0].time, "Ts", "time stays symbolic");
    assert!(
        entails_both_ways(&sol.region_cons, &ts_between(0, 4)),
        "region {:?} should be exactly 0 <= Ts <= 4",
        sol.region
    );
}

#[test]
fn provable_goal_yields_empty_hypothesis_first() {
    let goal = parse_goal("happens(patient_bolus_completed, T)").unwrap();
    let n1 = parse_narrative(&corpus("n1.nrt")).unwrap();
    let solutions =
        abduce_events(&pca(), &n1, &goal, &[started_spec()], AbduceOpts::default()).unwrap();
    assert!(!solutions.is_empty());
    assert!(solutions[0].hypotheses.is_empty(), "minimal solution first");
    // minimality: no other solution may be a strict superset of the empty set
    assert!(solutions.iter().all(|s| s.hypotheses.is_empty()));
}

#[test]
fn unsatisfiable_goal_exhausts_search() {
    let goal = parse_goal("holdsAt(total_drug_delivered(99), 0)").unwrap();
    let err = abduce_events(
        &pca(),
        &empty_narrative(),
        &goal,
        &[started_spec()],
        AbduceOpts::default(),
    )
    .unwrap_err();
    assert!(matches!(err, AbduceError::SearchExhausted));
}

#[test]
fn hypotheses_stay_inside_windows_and_counts() {
    let goal = parse_goal("happens(patient_bolus_completed, T), T #=< 9").unwrap();
    let spec = AbducibleSpec {
        template: Atom::new("patient_bolus_delivery_started", Vec::new()),
        window: (rat(1), rat(3)),
        max_count: 2,
    };
    let solutions =
        abduce_events(&pca(), &empty_narrative(), &goal, &[spec], AbduceOpts::default()).unwrap();
    for sol in &solutions {
        assert!(sol.hypotheses.len() <= 2);
        let store = region_store(&sol.region_cons);
        for h in &sol.hypotheses {
            if let Some(t) = parse_rat(&h.time) {
                assert!(t >= rat(1) && t <= rat(3));
            } else {
                let v = LinExpr::var(h.time.clone());
                assert!(store.entails(&LinConstraint::le(LinExpr::constant(rat(1)), v.clone())));
                assert!(store.entails(&LinConstraint::le(v, LinExpr::constant(rat(3)))));
            }
        }
    }
}

#[test]
fn refine_narrows_the_shared_store() {
    let goal = parse_goal("happens(patient_bolus_completed, T), T #=< 9").unwrap();
    let solutions = abduce_events(
        &pca(),
        &empty_narrative(),
        &goal,
        &[started_spec()],
        AbduceOpts::default(),
    )
    .unwrap();
    let sol = &solutions[0];

    let narrowed = refine(sol, &parse_goal("Ts #>= 3").unwrap()).unwrap();
    assert!(
        entails_both_ways(&narrowed.region_cons, &ts_between(3, 4)),
        "region {:?}",
        narrowed.region
    );

    let err = refine(&narrowed, &parse_goal("Ts #>= 5").unwrap()).unwrap_err();
    assert!(matches!(err, AbduceError::Unsat));
}

#[test]
fn refine_reusing_the_abduced_time_keeps_one_store() {
    let goal = parse_goal("happens(patient_bolus_completed, T), T #=< 9").unwrap();
    let solutions = abduce_events(
        &pca(),
        &empty_narrative(),
        &goal,
        &[started_spec()],
        AbduceOpts::default(),
    )
    .unwrap();
    let sol = &solutions[0];
    // a second derivation path through the same abduced time: the snapshot
    // value six time units after the start; consistent for all Ts in [0, 4]
    let extra = parse_goal("holdsAt(total_drug_delivered(25), Ts + 6)").unwrap();
    let refined = refine(sol, &extra).unwrap();
    assert!(
        entails_both_ways(&refined.region_cons, &ts_between(0, 4)),
        "region {:?}",
        refined.region
    );
    // and both uses are governed by the same store: narrowing one narrows all
    let narrowed = refine(&refined, &parse_goal("Ts #>= 2").unwrap()).unwrap();
    assert!(entails_both_ways(&narrowed.region_cons, &ts_between(2, 4)));
}

#[test]
fn twenty_instantiations_reprove_the_goal() {
    let goal = parse_goal("happens(patient_bolus_completed, T), T #=< 9").unwrap();
    let solutions = abduce_events(
        &pca(),
        &empty_narrative(),
        &goal,
        &[started_spec()],
        AbduceOpts::default(),
    )
    .unwrap();
    let sol = &solutions[0];
    let store = region_store(&sol.region_cons);
    // deterministic pseudo-random rationals inside [0, 4]
    let mut checked = 0;
    let mut seed: u64 = 0x9e3779b97f4a7c15;
    while checked < 20 {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let num = (seed >> 33) % 401; // 0..=400
        let point_val = Rat::new((num as i64).into(), 100.into()); // 0..=4 step 1/100
        let mut point = BTreeMap::new();
        point.insert("Ts".to_string(), point_val.clone());
        let inside = sol
            .region_cons
            .iter()
            .all(|c| c.satisfied_by(&point).unwrap_or(false));
        if !inside {
            continue;
        }
        assert!(store.is_sat());
        let proved = verify_instantiation(sol, &goal, &point).unwrap();
        assert!(proved, "instantiation Ts = {point_val} failed to re-prove the goal");
        checked += 1;
    }
}

#[test]
fn overdose_parameter_region_with_window_two() {
    let goal = ParametricGoal::Overdose {
        fluent: "total_drug_delivered".into(),
        max_var: "M".into(),
        window_var: "W".into(),
        fixed: vec![("W".into(), rat(2))],
    };
    let n1 = parse_narrative(&corpus("n1.nrt")).unwrap();
    let regions = abduce_parameters(&pca(), &n1, &goal, Default::default()).unwrap();
    assert!(!regions.is_empty());
    let reference = vec![
        LinConstraint::le(LinExpr::constant(rat(0)), LinExpr::var("M")),
        LinConstraint::lt(LinExpr::var("M"), LinExpr::constant(rat(10))),
    ];
    assert!(
        regions.iter().any(|r| entails_both_ways(&r.region_cons, &reference)),
        "no region equals 0 <= M < 10: {:?}",
        regions.iter().map(|r| &r.region).collect::<Vec<_>>()
    );
    // every returned region must lie inside the reference
    for r in &regions {
        let store = region_store(&r.region_cons);
        assert!(store.entails(&reference[1]), "region {:?} exceeds M < 10", r.region);
    }
}

#[test]
fn overdose_parameter_region_with_window_six() {
    let goal = ParametricGoal::Overdose {
        fluent: "total_drug_delivered".into(),
        max_var: "M".into(),
        window_var: "W".into(),
        fixed: vec![("W".into(), rat(6))],
    };
    let n1 = parse_narrative(&corpus("n1.nrt")).unwrap();
    let regions = abduce_parameters(&pca(), &n1, &goal, Default::default()).unwrap();
    let reference = vec![
        LinConstraint::le(LinExpr::constant(rat(0)), LinExpr::var("M")),
        LinConstraint::lt(LinExpr::var("M"), LinExpr::constant(rat(25))),
    ];
    assert!(
        regions.iter().any(|r| entails_both_ways(&r.region_cons, &reference)),
        "no region equals 0 <= M < 25: {:?}",
        regions.iter().map(|r| &r.region).collect::<Vec<_>>()
    );
}

#[test]
fn impossible_fixed_parameters_yield_no_regions() {
    let goal = ParametricGoal::Overdose {
        fluent: "total_drug_delivered".into(),
        max_var: "M".into(),
        window_var: "W".into(),
        fixed: vec![("M".into(), rat(25)), ("W".into(), rat(2))],
    };
    let n1 = parse_narrative(&corpus("n1.nrt")).unwrap();
    let regions = abduce_parameters(&pca(), &n1, &goal, Default::default()).unwrap();
    assert!(regions.is_empty());
}

#[test]
fn bad_windows_and_counts_are_rejected() {
    let goal = parse_goal("happens(patient_bolus_completed, T)").unwrap();
    let bad_window = AbducibleSpec {
        template: Atom::new("patient_bolus_delivery_started", Vec::new()),
        window: (rat(5), rat(1)),
        max_count: 1,
    };
    assert!(matches!(
        abduce_events(&pca(), &empty_narrative(), &goal, &[bad_window], AbduceOpts::default()),
        Err(AbduceError::BadWindow { .. })
    ));
    let bad_count = AbducibleSpec {
        template: Atom::new("patient_bolus_delivery_started", Vec::new()),
        window: (rat(0), rat(1)),
        max_count: 0,
    };
    assert!(matches!(
        abduce_events(&pca(), &empty_narrative(), &goal, &[bad_count], AbduceOpts::default()),
        Err(AbduceError::BadCount)
    ));
}
