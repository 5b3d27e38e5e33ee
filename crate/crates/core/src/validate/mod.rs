//! Requirements validation: scenario consistency checks and safety-property
//! checks over narratives, with machine-readable reports.

mod overdose;

pub use overdose::{max_window_delta, segments, violation_regions, Segment, WindowDelta};

use crate::diag::{has_errors, Diagnostic};
use crate::engine::{
    trigger_closure, trigger_closure_restricted, ClosedTimeline, EngineError, EngineOpts,
    ProofNode, RunStats,
};
use crate::model::{
    parse_scenario, validate_model, ClauseKind, DomainModel, FluentKind, Literal, Narrative,
    NarrativeError, ScenarioFile, Term, TimingKind,
};
use crate::rational::{rat_str, Rat};
use num_traits::Signed;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    Pass,
    Violation,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct PostResult {
    pub label: String,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proof: Option<ProofNode>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub description: String,
    pub times: BTreeMap<String, String>,
    pub values: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proof: Option<ProofNode>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub subject: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub postconditions: Vec<PostResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<RunStats>,
}

impl Report {
    fn error(subject: impl Into<String>, explanation: String) -> Report {
        Report {
            subject: subject.into(),
            verdict: Verdict::Error,
            postconditions: Vec::new(),
            witness: None,
            explanation: Some(explanation),
            diagnostics: Vec::new(),
            stats: None,
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("{}: {:?}", self.subject, self.verdict).to_lowercase();
        if let Some(e) = &self.explanation {
            out.push_str(&format!("\n  {e}"));
        }
        for p in &self.postconditions {
            out.push_str(&format!(
                "\n  [{}] {}",
                if p.holds { "ok" } else { "failed" },
                p.label
            ));
            if let Some(e) = &p.explanation {
                out.push_str(&format!(" ({e})"));
            }
        }
        if let Some(w) = &self.witness {
            out.push_str(&format!("\n  witness: {}", w.description));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    At,
    By,
}

#[derive(Debug, Clone)]
pub struct Postcondition {
    pub goal: Vec<Literal>,
    pub timing: Timing,
    pub time: Rat,
    pub label: String,
}

/// A use-case / exception-case scenario: a narrative plus postconditions.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub narrative: Narrative,
    pub postconditions: Vec<Postcondition>,
    pub provenance: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Narrative(#[from] NarrativeError),
    #[error("postcondition time {time} lies beyond the horizon {horizon}")]
    BeyondHorizon { time: String, horizon: String },
    #[error("expect timing must be a nonnegative rational constant")]
    BadTiming,
}

impl Scenario {
    pub fn from_file(name: impl Into<String>, text: &str) -> Result<Scenario, ScenarioError> {
        let ScenarioFile { narrative, expectations, provenance } = parse_scenario(text)?;
        let mut postconditions = Vec::new();
        for e in expectations {
            let Some(t) = e.time.const_eval() else {
                return Err(ScenarioError::BadTiming);
            };
            if t.is_negative() {
                return Err(ScenarioError::BadTiming);
            }
            if t > narrative.horizon {
                return Err(ScenarioError::BeyondHorizon {
                    time: rat_str(&t),
                    horizon: rat_str(&narrative.horizon),
                });
            }
            let timing = match e.timing {
                TimingKind::At => Timing::At,
                TimingKind::By => Timing::By,
            };
            let goal_text: Vec<String> = e.goal.iter().map(|l| l.to_string()).collect();
            let label = format!(
                "expect({}, {}({}))",
                goal_text.join(", "),
                if timing == Timing::At { "at" } else { "by" },
                rat_str(&t)
            );
            postconditions.push(Postcondition { goal: e.goal, timing, time: t, label });
        }
        Ok(Scenario { name: name.into(), narrative, postconditions, provenance })
    }
}

/// Resolves bare predicate atoms in a postcondition goal against the model
/// signature and attaches the timing.
fn resolve_goal(
    model: &DomainModel,
    post: &Postcondition,
    fresh: &str,
) -> Result<Vec<Literal>, EngineError> {
    let time_term = match post.timing {
        Timing::At => Term::Num(post.time.clone()),
        Timing::By => Term::Var(fresh.to_string()),
    };
    let mut out = Vec::new();
    if post.timing == Timing::By {
        out.push(Literal::Constr {
            rel: crate::clpq::SurfaceRel::Ge,
            lhs: time_term.clone(),
            rhs: Term::Num(Rat::from_integer(0.into())),
            span: Default::default(),
        });
        out.push(Literal::Constr {
            rel: crate::clpq::SurfaceRel::Le,
            lhs: time_term.clone(),
            rhs: Term::Num(post.time.clone()),
            span: Default::default(),
        });
    }
    for lit in &post.goal {
        match lit {
            Literal::Pred { atom, span } => {
                if model.fluents.contains_key(&atom.name) {
                    out.push(Literal::Holds {
                        fluent: atom.clone(),
                        time: time_term.clone(),
                        span: *span,
                    });
                } else if model.events.contains_key(&atom.name) {
                    out.push(Literal::Happens {
                        event: atom.clone(),
                        time: time_term.clone(),
                        span: *span,
                    });
                } else {
                    out.push(lit.clone());
                }
            }
            other => out.push(other.clone()),
        }
    }
    Ok(out)
}

/// Builds the closed, checkpointed timeline for a narrative.
fn build_timeline(
    model: &Arc<DomainModel>,
    narrative: &Narrative,
    opts: EngineOpts,
) -> Result<ClosedTimeline, EngineError> {
    let diags = validate_model(model);
    if has_errors(&diags) {
        return Err(EngineError::InvalidModel(
            diags.iter().filter(|d| d.severity == crate::diag::Severity::Error).count(),
        ));
    }
    crate::model::stratification_check(model)?;
    trigger_closure(model, narrative, opts)?.checkpoint()
}

/// Scenario consistency: every postcondition must hold on the closed
/// timeline. The report names the failing conjunct and, for value goals,
/// the actual value found.
pub fn check_scenario(model: &Arc<DomainModel>, scenario: &Scenario, opts: EngineOpts) -> Report {
    let tl = match build_timeline(model, &scenario.narrative, opts) {
        Ok(tl) => tl,
        Err(e) => return Report::error(scenario.name.clone(), e.to_string()),
    };
    let cache = tl.fresh_cache();
    let mut results = Vec::new();
    let mut all_hold = true;
    let mut stats_total = RunStats::default();
    for (i, post) in scenario.postconditions.iter().enumerate() {
        let fresh = format!("!By{i}");
        let goal = match resolve_goal(model, post, &fresh) {
            Ok(g) => g,
            Err(e) => return Report::error(scenario.name.clone(), e.to_string()),
        };
        match tl.query_with(&goal, cache.as_ref()) {
            Ok((answers, stats)) => {
                stats_total.expansions += stats.expansions;
                stats_total.checkpoint_reads += stats.checkpoint_reads;
                stats_total.cache = stats.cache;
                if let Some(first) = answers.into_iter().next() {
                    results.push(PostResult {
                        label: post.label.clone(),
                        holds: true,
                        explanation: None,
                        proof: Some(first.proof),
                    });
                } else {
                    all_hold = false;
                    let explanation = explain_failure(&tl, &goal, cache.as_ref());
                    results.push(PostResult {
                        label: post.label.clone(),
                        holds: false,
                        explanation: Some(explanation),
                        proof: None,
                    });
                }
            }
            Err(e) => return Report::error(scenario.name.clone(), e.to_string()),
        }
    }
    Report {
        subject: scenario.name.clone(),
        verdict: if all_hold { Verdict::Consistent } else { Verdict::Inconsistent },
        postconditions: results,
        witness: None,
        explanation: None,
        diagnostics: tl.diagnostics.clone(),
        stats: Some(stats_total),
    }
}

/// Finds the failing conjunct (the first literal whose addition makes the
/// prefix unsatisfiable) and reports the actual value for value goals.
fn explain_failure(
    tl: &ClosedTimeline,
    goal: &[Literal],
    cache: Option<&crate::engine::SharedCache>,
) -> String {
    for n in 1..=goal.len() {
        let prefix = &goal[..n];
        match tl.query_with(prefix, cache) {
            Ok((answers, _)) if answers.is_empty() => {
                let failing = &goal[n - 1];
                let mut msg = format!("failing conjunct: {failing}");
                if let Literal::Holds { fluent, time, .. } = failing {
                    if matches!(tl.model.fluent_kind(&fluent.name), Some(FluentKind::Functional)) {
                        if let Some(t) = time.const_eval() {
                            match tl.value_at(&fluent.name, &t) {
                                Ok((actual, _)) => {
                                    msg.push_str(&format!("; actual value {}", rat_str(&actual)));
                                }
                                Err(e) => msg.push_str(&format!("; {e}")),
                            }
                        }
                    }
                }
                return msg;
            }
            Ok(_) => continue,
            Err(e) => return e.to_string(),
        }
    }
    "goal unsatisfied".to_string()
}

/// Safety property kinds.
#[derive(Debug, Clone)]
pub enum PropertySpec {
    /// Violated when more than `max_volume` is delivered within any window
    /// of width at most `window` (closed window, strict threshold).
    Overdose { fluent: String, max_volume: Rat, window: Rat },
    /// Violated when some trigger occurrence has no response within the
    /// deadline (inclusive).
    ResponseTime { trigger: String, response: String, deadline: Rat },
    /// Violated when the goal is provable.
    RawGoal { name: String, goal: Vec<Literal> },
}

impl PropertySpec {
    pub fn name(&self) -> String {
        match self {
            PropertySpec::Overdose { fluent, max_volume, window } => {
                format!("overdose({fluent}, {}, {})", rat_str(max_volume), rat_str(window))
            }
            PropertySpec::ResponseTime { trigger, response, deadline } => {
                format!("response_time({trigger}, {response}, {})", rat_str(deadline))
            }
            PropertySpec::RawGoal { name, .. } => name.clone(),
        }
    }

    /// Parses `overdose(<fluent>, <max>, <window>)` or
    /// `response_time(<trigger>, <response>, <deadline>)`.
    pub fn parse(text: &str) -> Result<PropertySpec, String> {
        let lits = crate::model::parse_goal(text).map_err(|e| e.to_string())?;
        let [Literal::Pred { atom, .. }] = lits.as_slice() else {
            return Err("expected a single property atom".to_string());
        };
        let num = |t: &Term| -> Result<Rat, String> {
            t.const_eval().ok_or_else(|| format!("expected a rational constant, got {t}"))
        };
        let sym = |t: &Term| -> Result<String, String> {
            match t {
                Term::Sym(s) => Ok(s.clone()),
                other => Err(format!("expected a name, got {other}")),
            }
        };
        match (atom.name.as_str(), atom.args.as_slice()) {
            ("overdose", [f, m, w]) => {
                let spec = PropertySpec::Overdose {
                    fluent: sym(f)?,
                    max_volume: num(m)?,
                    window: num(w)?,
                };
                spec.check_params()?;
                Ok(spec)
            }
            ("response_time", [a, b, d]) => {
                let spec = PropertySpec::ResponseTime {
                    trigger: sym(a)?,
                    response: sym(b)?,
                    deadline: num(d)?,
                };
                spec.check_params()?;
                Ok(spec)
            }
            _ => Err(format!(
                "unknown property `{}`; expected overdose/3 or response_time/3",
                atom.name
            )),
        }
    }

    fn check_params(&self) -> Result<(), String> {
        let bad = match self {
            PropertySpec::Overdose { max_volume, window, .. } => {
                max_volume.is_negative() || window.is_negative()
            }
            PropertySpec::ResponseTime { deadline, .. } => deadline.is_negative(),
            PropertySpec::RawGoal { .. } => false,
        };
        if bad {
            Err("property parameters must be nonnegative".to_string())
        } else {
            Ok(())
        }
    }
}

/// Decides a property on one narrative, exactly.
pub fn check_property(
    model: &Arc<DomainModel>,
    narrative: &Narrative,
    property: &PropertySpec,
    opts: EngineOpts,
) -> Report {
    let subject = property.name();
    if let Err(e) = property.check_params() {
        return Report::error(subject, e);
    }
    let tl = match build_timeline(model, narrative, opts) {
        Ok(tl) => tl,
        Err(e) => return Report::error(subject, e.to_string()),
    };
    match property {
        PropertySpec::Overdose { fluent, max_volume, window } => {
            check_overdose(&tl, &subject, fluent, max_volume, window)
        }
        PropertySpec::ResponseTime { trigger, response, deadline } => {
            let mut witness = None;
            for t in tl.occurrences_of(trigger) {
                let deadline_end = t.clone() + deadline;
                let responded = tl
                    .occurrences_of(response)
                    .iter()
                    .any(|tr| tr >= &t && tr <= &deadline_end);
                if !responded {
                    witness = Some(Witness {
                        description: format!(
                            "{trigger} at {} has no {response} by {}",
                            rat_str(&t),
                            rat_str(&deadline_end)
                        ),
                        times: BTreeMap::from([(trigger.clone(), rat_str(&t))]),
                        values: BTreeMap::new(),
                        proof: None,
                    });
                    break;
                }
            }
            Report {
                subject,
                verdict: if witness.is_some() { Verdict::Violation } else { Verdict::Pass },
                postconditions: Vec::new(),
                witness,
                explanation: None,
                diagnostics: tl.diagnostics.clone(),
                stats: None,
            }
        }
        PropertySpec::RawGoal { goal, .. } => match tl.query(goal) {
            Ok(answers) => {
                let witness = answers.into_iter().next().map(|a| Witness {
                    description: a.render_text(false),
                    times: a.bindings.clone(),
                    values: BTreeMap::new(),
                    proof: Some(a.proof),
                });
                Report {
                    subject,
                    verdict: if witness.is_some() { Verdict::Violation } else { Verdict::Pass },
                    postconditions: Vec::new(),
                    witness,
                    explanation: None,
                    diagnostics: tl.diagnostics.clone(),
                    stats: None,
                }
            }
            Err(e) => Report::error(subject, e.to_string()),
        },
    }
}

fn check_overdose(
    tl: &ClosedTimeline,
    subject: &str,
    fluent: &str,
    max_volume: &Rat,
    window: &Rat,
) -> Report {
    let Some(cks) = &tl.checkpoints else {
        return Report::error(subject, "timeline has no checkpoints".to_string());
    };
    if tl.model.fluent_kind(fluent) != Some(FluentKind::Functional) {
        return Report::error(
            subject,
            EngineError::NoValue { fluent: fluent.to_string(), time: "any".into() }.to_string(),
        );
    }
    let Some(segs) = segments(cks, fluent, &tl.horizon) else {
        return Report::error(
            subject,
            EngineError::NoValue { fluent: fluent.to_string(), time: "any".into() }.to_string(),
        );
    };
    let Some(delta) = max_window_delta(&segs, window) else {
        return Report::error(subject, "empty value curve".to_string());
    };
    if &delta.sup > max_volume {
        // verify and, if the supremum sits on a closure artifact, nudge the
        // witness into the open part of the curve
        let witness = concrete_overdose_witness(tl, fluent, max_volume, window, &delta);
        match witness {
            Some(w) => Report {
                subject: subject.to_string(),
                verdict: Verdict::Violation,
                postconditions: Vec::new(),
                witness: Some(w),
                explanation: None,
                diagnostics: tl.diagnostics.clone(),
                stats: None,
            },
            None => Report::error(
                subject,
                "window analysis found a violation but no witness re-verified".to_string(),
            ),
        }
    } else {
        Report {
            subject: subject.to_string(),
            verdict: Verdict::Pass,
            postconditions: Vec::new(),
            witness: None,
            explanation: Some(format!(
                "maximal delivery within a width-{} window is {}",
                rat_str(window),
                rat_str(&delta.sup)
            )),
            diagnostics: tl.diagnostics.clone(),
            stats: None,
        }
    }
}

fn concrete_overdose_witness(
    tl: &ClosedTimeline,
    fluent: &str,
    max_volume: &Rat,
    window: &Rat,
    delta: &WindowDelta,
) -> Option<Witness> {
    let slack = delta.sup.clone() - max_volume;
    let mut shifts = vec![Rat::from_integer(0.into())];
    let quarter = slack / Rat::from_integer(4.into());
    if quarter.is_positive() {
        shifts.push(quarter.clone());
        shifts.push(quarter / Rat::from_integer(4.into()));
    }
    for eps in shifts {
        for (t1, t2) in [
            (delta.t1.clone() + eps.clone(), delta.t2.clone() + eps.clone()),
            (delta.t1.clone() + eps.clone(), delta.t2.clone()),
            (delta.t1.clone(), delta.t2.clone() - eps.clone()),
        ] {
            if t1 > t2 || t2.clone() - t1.clone() > window.clone() || t2 > tl.horizon {
                continue;
            }
            let (Ok((v1, _)), Ok((v2, proof))) =
                (tl.value_at(fluent, &t1), tl.value_at(fluent, &t2))
            else {
                continue;
            };
            let diff = v2.clone() - v1.clone();
            if &diff > max_volume {
                return Some(Witness {
                    description: format!(
                        "{} delivered in [{}, {}]: {} - {} = {} > {}",
                        fluent,
                        rat_str(&t1),
                        rat_str(&t2),
                        rat_str(&v2),
                        rat_str(&v1),
                        rat_str(&diff),
                        rat_str(max_volume)
                    ),
                    times: BTreeMap::from([
                        ("T1".to_string(), rat_str(&t1)),
                        ("T2".to_string(), rat_str(&t2)),
                    ]),
                    values: BTreeMap::from([
                        ("V1".to_string(), rat_str(&v1)),
                        ("V2".to_string(), rat_str(&v2)),
                        ("delivered".to_string(), rat_str(&diff)),
                    ]),
                    proof: Some(proof),
                });
            }
        }
    }
    None
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryReport {
    pub reports: Vec<Report>,
    pub passes: usize,
    pub violations: usize,
    pub errors: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("sweep needs at least one narrative")]
    MissingInput,
}

/// Checks one property over several narratives; per-narrative errors are
/// isolated and reported in their slot.
pub fn sweep(
    model: &Arc<DomainModel>,
    narratives: &[(String, Narrative)],
    property: &PropertySpec,
    opts: EngineOpts,
) -> Result<SummaryReport, SweepError> {
    if narratives.is_empty() {
        return Err(SweepError::MissingInput);
    }
    let mut reports = Vec::new();
    for (name, narrative) in narratives {
        let mut report = check_property(model, narrative, property, opts);
        report.subject = format!("{name}: {}", report.subject);
        reports.push(report);
    }
    let passes = reports.iter().filter(|r| r.verdict == Verdict::Pass).count();
    let violations = reports.iter().filter(|r| r.verdict == Verdict::Violation).count();
    let errors = reports.iter().filter(|r| r.verdict == Verdict::Error).count();
    Ok(SummaryReport { reports, passes, violations, errors })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageWarning {
    pub stage: usize,
    pub event: String,
    pub time: String,
    pub earlier_stage: usize,
    pub earlier_time: String,
}

#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error("stages must partition the trigger rules; rule #{0} is {1}")]
    NotAPartition(usize, &'static str),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Runs the trigger closure stage by stage, materializing each stage's
/// triggered events as plain facts for the next stage. Order sensitivity
/// (a later stage firing before an already-materialized fact) is reported,
/// not hidden.
pub fn staged_run(
    model: &Arc<DomainModel>,
    narrative: &Narrative,
    stages: &[BTreeSet<usize>],
    opts: EngineOpts,
) -> Result<(ClosedTimeline, Vec<StageWarning>), StageError> {
    let trigger_rules: BTreeSet<usize> = model
        .clauses
        .iter()
        .enumerate()
        .filter(|(_, c)| matches!(&c.kind, ClauseKind::Trigger { body, .. } if !body.is_empty()))
        .map(|(i, _)| i)
        .collect();
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    for stage in stages {
        for idx in stage {
            if !trigger_rules.contains(idx) {
                return Err(StageError::NotAPartition(*idx, "not a trigger rule"));
            }
            if !seen.insert(*idx) {
                return Err(StageError::NotAPartition(*idx, "assigned to two stages"));
            }
        }
    }
    if seen != trigger_rules {
        let missing = trigger_rules.difference(&seen).next().copied().unwrap_or(0);
        return Err(StageError::NotAPartition(missing, "missing from all stages"));
    }

    let mut warnings = Vec::new();
    let mut current = narrative.clone();
    // max materialized time per completed stage
    let mut stage_max: Vec<Option<Rat>> = Vec::new();
    let mut final_tl: Option<ClosedTimeline> = None;
    for (s, stage) in stages.iter().enumerate() {
        let tl = trigger_closure_restricted(model, &current, opts, Some(stage))?;
        let mut max_here: Option<Rat> = None;
        for (event, time, source) in &tl.events {
            if matches!(source, crate::engine::OccSource::Triggered { .. }) {
                for (earlier_stage, earlier_max) in stage_max.iter().enumerate() {
                    if let Some(em) = earlier_max {
                        if time < em {
                            warnings.push(StageWarning {
                                stage: s,
                                event: event.to_string(),
                                time: rat_str(time),
                                earlier_stage,
                                earlier_time: rat_str(em),
                            });
                        }
                    }
                }
                if max_here.as_ref().map_or(true, |m| time > m) {
                    max_here = Some(time.clone());
                }
            }
        }
        stage_max.push(max_here);
        // materialize everything as plain facts for the next stage
        current = Narrative {
            occurrences: tl
                .event_pairs()
                .into_iter()
                .map(|(event, time)| crate::model::Occurrence { event, time })
                .collect(),
            horizon: narrative.horizon.clone(),
        };
        final_tl = Some(tl);
    }
    let tl = match final_tl {
        Some(tl) => tl,
        None => trigger_closure_restricted(model, narrative, opts, Some(&BTreeSet::new()))?,
    };
    Ok((tl.checkpoint()?, warnings))
}
