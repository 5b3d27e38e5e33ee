//! Discrete-time forward simulator, used as an independent cross-validation
//! oracle for the engine.
//!
//! The simulator shares the parser and the exact rational arithmetic but
//! none of the engine's axiom-evaluation code: it walks a sampling grid
//! forward, carrying explicit fluent state and advancing trajectories
//! analytically between points. Event times and trajectory-threshold
//! crossing times are inserted into the grid exactly, so boundary instants
//! are sampled without rounding.
//!
//! Scope: linear models of the bundled corpus shape. Rule bodies may use
//! user-predicate facts and rules, initiallyP, holdsAt at the current
//! instant, happens over past occurrences, and linear constraints.

use crate::engine::EngineError;
use crate::model::{Atom, ClauseKind, DomainModel, FluentKind, GroundAtom, GroundTerm, Literal, Narrative, Term};
use crate::rational::{rat_str, Rat};
use num_traits::{Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq)]
enum OVal {
    Num(Rat),
    Sym(String),
}

impl std::fmt::Display for OVal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OVal::Num(r) => write!(f, "{}", rat_str(r)),
            OVal::Sym(s) => write!(f, "{s}"),
        }
    }
}

type OBind = BTreeMap<String, OVal>;

/// Value regime of a functional fluent during simulation.
#[derive(Debug, Clone, PartialEq)]
enum ORegime {
    None,
    Const(Rat),
    /// value(t) = base + rate * (t - anchor)
    Line { anchor: Rat, base: Rat, rate: Rat },
}

impl ORegime {
    fn value_at(&self, t: &Rat) -> Option<Rat> {
        match self {
            ORegime::None => None,
            ORegime::Const(v) => Some(v.clone()),
            ORegime::Line { anchor, base, rate } => Some(base + rate.clone() * (t - anchor)),
        }
    }
}

#[derive(Debug, Clone, Default)]
struct OState {
    truths: BTreeSet<String>,
    regimes: BTreeMap<String, ORegime>,
    last_settings: BTreeMap<String, Rat>,
}

/// One sampled row: fluent truths and functional values at a grid point,
/// as given by the axioms (i.e. before events at that instant act).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time: Rat,
    pub truths: BTreeMap<String, bool>,
    pub values: BTreeMap<String, Option<Rat>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrace {
    pub dt: Rat,
    pub rows: Vec<TraceRow>,
    pub events: Vec<(GroundAtom, Rat)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub time: Rat,
    pub fluent: String,
    pub engine: String,
    pub oracle: String,
}

impl std::fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "t={}: {}: engine={} oracle={}",
            rat_str(&self.time),
            self.fluent,
            self.engine,
            self.oracle
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("dt must be positive")]
    NonPositiveStep,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("oracle cannot evaluate literal `{0}`")]
    Unsupported(String),
}

pub fn simulate(
    model: &DomainModel,
    narrative: &Narrative,
    dt: &Rat,
    zeno_bound: usize,
) -> Result<SampledTrace, OracleError> {
    if !dt.is_positive() {
        return Err(OracleError::NonPositiveStep);
    }
    let horizon = narrative.horizon.clone();

    // sampling grid: multiples of dt, all narrative event times, the horizon
    let mut grid: BTreeSet<Rat> = BTreeSet::new();
    let mut t = Rat::zero();
    while t <= horizon {
        grid.insert(t.clone());
        t += dt.clone();
    }
    grid.insert(horizon.clone());
    for occ in &narrative.occurrences {
        grid.insert(occ.time.clone());
    }

    let mut pending: BTreeMap<Rat, Vec<GroundAtom>> = BTreeMap::new();
    for occ in &narrative.occurrences {
        pending.entry(occ.time.clone()).or_default().push(occ.event.clone());
    }

    // initial state
    let mut state = OState::default();
    for fact in model.initially_facts() {
        let Some(ground) = fact.to_ground() else { continue };
        match model.fluent_kind(&fact.name) {
            Some(FluentKind::Functional) => {
                if let Some(GroundTerm::Num(v)) = ground.args.first() {
                    state.regimes.insert(fact.name.clone(), ORegime::Const(v.clone()));
                    state.last_settings.insert(fact.name.clone(), v.clone());
                }
            }
            _ => {
                state.truths.insert(ground.to_string());
            }
        }
    }

    let mut rows: Vec<TraceRow> = Vec::new();
    let mut fired: Vec<(GroundAtom, Rat)> = Vec::new();
    let mut fired_set: BTreeSet<(String, Rat)> = BTreeSet::new();
    for occ in &narrative.occurrences {
        fired.push((occ.event.clone(), occ.time.clone()));
        fired_set.insert((occ.event.to_string(), occ.time.clone()));
    }
    let mut triggered_count = 0usize;

    while let Some(t) = grid.iter().next().cloned() {
        grid.remove(&t);
        if t > horizon {
            break;
        }

        // record the row before events at t act
        rows.push(record_row(model, &state, &t));

        // same-instant cascade: narrative events at t plus triggers that
        // become true at t, applied until no new event fires
        let mut to_apply: Vec<GroundAtom> = pending.remove(&t).unwrap_or_default();
        loop {
            // apply effects of the batch against the pre-application state
            if !to_apply.is_empty() {
                let pre = state.clone();
                apply_events(model, &mut state, &pre, &to_apply, &t, &fired)?;
            }
            // evaluate triggers against the post-application state at t;
            // a trigger fires when its body *becomes* true: at time zero, or
            // when some conjunct is pointlike at this instant (an occurrence
            // at t, a moving trajectory hitting a threshold, or an equality
            // pinning the trigger time). Level conditions on left-open truth
            // sets have no first instant and never fire.
            let mut new_events = Vec::new();
            for clause in &model.clauses {
                let ClauseKind::Trigger { event, time, body } = &clause.kind else { continue };
                if body.is_empty() {
                    continue;
                }
                let mut bind = OBind::new();
                let tvar = match time {
                    Term::Var(v) => {
                        bind.insert(v.clone(), OVal::Num(t.clone()));
                        Some(v.clone())
                    }
                    _ => None,
                };
                for b in eval_body(model, &state, &t, &fired, body, bind)? {
                    if !t.is_zero() && !body_has_edge(model, &state, &t, tvar.as_deref(), body, &b) {
                        continue;
                    }
                    let Some(ev) = ground_event(event, &b) else { continue };
                    let key = (ev.to_string(), t.clone());
                    if !fired_set.contains(&key) {
                        new_events.push(ev);
                    }
                }
            }
            new_events.sort_by_key(|e| e.to_string());
            new_events.dedup();
            if new_events.is_empty() {
                break;
            }
            for ev in new_events.drain(..) {
                triggered_count += 1;
                if triggered_count > zeno_bound {
                    return Err(OracleError::Engine(EngineError::Zeno {
                        bound: zeno_bound,
                        last: fired
                            .iter()
                            .rev()
                            .take(5)
                            .map(|(e, t)| format!("{e}@{}", rat_str(t)))
                            .collect(),
                    }));
                }
                fired_set.insert((ev.to_string(), t.clone()));
                fired.push((ev.clone(), t.clone()));
                to_apply.push(ev);
            }
            let drained = std::mem::take(&mut to_apply);
            let pre = state.clone();
            apply_events(model, &mut state, &pre, &drained, &t, &fired)?;
        }

        // re-record the row? No: the row reflects the axioms at t, which see
        // only strictly earlier events. Triggered events at t change the
        // state for later samples only.

        // future candidates: threshold crossings under the new regimes and
        // constraint-determined times from the occurrence list
        for cand in future_candidates(model, &state, &t, &horizon, &fired)? {
            if cand > t && cand <= horizon {
                grid.insert(cand);
            }
        }
    }

    Ok(SampledTrace { dt: dt.clone(), rows, events: fired })
}

fn record_row(model: &DomainModel, state: &OState, t: &Rat) -> TraceRow {
    let mut truths = BTreeMap::new();
    let mut values = BTreeMap::new();
    for (name, sig) in &model.fluents {
        match sig.kind {
            FluentKind::Boolean => {
                // arity-0 booleans are recorded under their bare name;
                // parameterized instances appear as rendered atoms
                if sig.arity == 0 {
                    truths.insert(name.clone(), state.truths.contains(name));
                }
            }
            FluentKind::Functional => {
                let v = state.regimes.get(name).map(|r| r.value_at(t)).unwrap_or(None);
                values.insert(name.clone(), v);
            }
        }
    }
    for key in &state.truths {
        if key.contains('(') {
            truths.insert(key.clone(), true);
        }
    }
    TraceRow { time: t.clone(), truths, values }
}

/// Applies a batch of simultaneous events: effect rules are matched against
/// the pre-application state, then boolean changes, trajectory anchoring and
/// termination snapshots are applied.
fn apply_events(
    model: &DomainModel,
    state: &mut OState,
    pre: &OState,
    batch: &[GroundAtom],
    t: &Rat,
    fired: &[(GroundAtom, Rat)],
) -> Result<(), OracleError> {
    let mut initiated: BTreeSet<String> = BTreeSet::new();
    let mut stopped: BTreeSet<String> = BTreeSet::new();
    let mut released_gov: BTreeSet<String> = BTreeSet::new();
    let mut func_settings: Vec<(String, Rat)> = Vec::new();
    let mut func_released: BTreeSet<String> = BTreeSet::new();

    for ev in batch {
        for clause in &model.clauses {
            let (event, fluent, time, body, kind) = match &clause.kind {
                ClauseKind::Initiates { event, fluent, time, body } => (event, fluent, time, body, 0u8),
                ClauseKind::Terminates { event, fluent, time, body } => (event, fluent, time, body, 1),
                ClauseKind::Releases { event, fluent, time, body } => (event, fluent, time, body, 2),
                _ => continue,
            };
            if event.name != ev.name || event.args.len() != ev.args.len() {
                continue;
            }
            let mut bind = OBind::new();
            let mut ok = true;
            for (pat, val) in event.args.iter().zip(&ev.args) {
                if !match_term(pat, &OVal::from_ground(val), &mut bind) {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            if let Term::Var(v) = time {
                bind.insert(v.clone(), OVal::Num(t.clone()));
            }
            for b in eval_body(model, pre, t, fired, body, bind.clone())? {
                let functional =
                    matches!(model.fluent_kind(&fluent.name), Some(FluentKind::Functional));
                if functional {
                    match kind {
                        0 => {
                            if let Some(OVal::Num(v)) = fluent.args.first().map(|a| eval_term(a, &b))
                                .and_then(|r| r.ok())
                            {
                                func_settings.push((fluent.name.clone(), v));
                            }
                        }
                        _ => {
                            func_released.insert(fluent.name.clone());
                        }
                    }
                } else {
                    let key = render_instance(fluent, &b);
                    match kind {
                        0 => {
                            initiated.insert(key);
                        }
                        1 => {
                            stopped.insert(key);
                        }
                        2 => {
                            stopped.insert(key.clone());
                            released_gov.insert(key);
                        }
                        _ => {}
                    }
                }
            }
        }
    }

    let was: BTreeSet<String> = pre.truths.clone();
    for key in &stopped {
        state.truths.remove(key);
    }
    for key in &initiated {
        state.truths.insert(key.clone());
    }

    // trajectory anchoring and snapshots
    for clause in &model.clauses {
        let ClauseKind::Trajectory { state: gov, fluent, .. } = &clause.kind else { continue };
        let gkey = gov.name.clone();
        let fname = fluent.name.clone();
        let true_after = state.truths.contains(&gkey);
        let was_true = was.contains(&gkey);
        if true_after && (initiated.contains(&gkey) || !was_true) {
            if let Some((base, rate)) = trajectory_line(model, pre, t, fired, clause)? {
                state
                    .regimes
                    .insert(fname.clone(), ORegime::Line { anchor: t.clone(), base, rate });
            }
        } else if !true_after && was_true && stopped.contains(&gkey) {
            let frozen = pre.regimes.get(&fname).and_then(|r| r.value_at(t));
            if released_gov.contains(&gkey) {
                // release: no snapshot, fall back to the last discrete setting
                let fb = state.last_settings.get(&fname).cloned();
                state.regimes.insert(
                    fname.clone(),
                    fb.map(ORegime::Const).unwrap_or(ORegime::None),
                );
            } else if let Some(v) = frozen {
                state.last_settings.insert(fname.clone(), v.clone());
                state.regimes.insert(fname.clone(), ORegime::Const(v));
            }
        }
    }

    for (name, v) in func_settings {
        state.last_settings.insert(name.clone(), v.clone());
        let under_traj = matches!(state.regimes.get(&name), Some(ORegime::Line { .. }));
        if !under_traj {
            state.regimes.insert(name, ORegime::Const(v));
        }
    }
    for name in func_released {
        state.regimes.insert(name.clone(), ORegime::None);
        state.last_settings.remove(&name);
    }
    Ok(())
}

/// Extracts the (base, rate) of a trajectory at anchor time `t` by
/// evaluating its body with the end time left symbolic: the value must be
/// affine in the elapsed time for linear models.
fn trajectory_line(
    model: &DomainModel,
    pre: &OState,
    t: &Rat,
    fired: &[(GroundAtom, Rat)],
    clause: &crate::model::Clause,
) -> Result<Option<(Rat, Rat)>, OracleError> {
    let ClauseKind::Trajectory { t1, fluent, t2, body, .. } = &clause.kind else {
        return Ok(None);
    };
    // evaluate the body twice with two probe end times and interpolate;
    // exact because the value is affine in t2
    let probe = |end: Rat| -> Result<Option<Rat>, OracleError> {
        let mut bind = OBind::new();
        if let Term::Var(v) = t1 {
            bind.insert(v.clone(), OVal::Num(t.clone()));
        }
        if let Term::Var(v) = t2 {
            bind.insert(v.clone(), OVal::Num(end));
        }
        for b in eval_body(model, pre, t, fired, body, bind)? {
            if let Ok(OVal::Num(v)) = eval_term(&fluent.args[0], &b) {
                return Ok(Some(v));
            }
        }
        Ok(None)
    };
    let one = Rat::from_integer(1.into());
    let v0 = probe(t.clone())?;
    let v1 = probe(t.clone() + one)?;
    Ok(match (v0, v1) {
        (Some(v0), Some(v1)) => {
            let rate = v1 - v0.clone();
            Some((v0, rate))
        }
        _ => None,
    })
}

/// Candidate future instants at which a trigger body can become true:
/// functional-threshold crossings under the current regimes, and times
/// determined by linear constraints over existing occurrence times.
fn future_candidates(
    model: &DomainModel,
    state: &OState,
    now: &Rat,
    horizon: &Rat,
    fired: &[(GroundAtom, Rat)],
) -> Result<Vec<Rat>, OracleError> {
    let mut out = Vec::new();
    for clause in &model.clauses {
        let ClauseKind::Trigger { time, body, .. } = &clause.kind else { continue };
        let Term::Var(tvar) = time else { continue };
        // bind everything that does not involve the trigger time
        let mut binds = vec![OBind::new()];
        for lit in body {
            if lit.vars().contains(tvar) {
                continue;
            }
            let mut next = Vec::new();
            for b in binds {
                next.extend(eval_literal_set(model, state, now, fired, lit, b)?);
            }
            binds = next;
        }
        for b in binds {
            for lit in body {
                if !lit.vars().contains(tvar) {
                    continue;
                }
                match lit {
                    Literal::Holds { fluent, time: tterm, .. } => {
                        if !matches!(tterm, Term::Var(v) if v == tvar) {
                            continue;
                        }
                        let Some(FluentKind::Functional) = model.fluent_kind(&fluent.name) else {
                            continue;
                        };
                        let Some(ORegime::Line { anchor, base, rate }) =
                            state.regimes.get(&fluent.name)
                        else {
                            continue;
                        };
                        if rate.is_zero() {
                            continue;
                        }
                        // threshold: the fluent argument must be a known number
                        let Ok(OVal::Num(target)) = eval_term(&fluent.args[0], &b) else {
                            continue;
                        };
                        let cross = anchor.clone() + (target - base.clone()) / rate.clone();
                        if &cross > now && &cross <= horizon {
                            out.push(cross);
                        }
                    }
                    Literal::Constr { .. } => {
                        // solve the constraint for the trigger time; only
                        // equalities pin a candidate instant
                        if let Some(t) = solve_constraint_for(lit, tvar, &b) {
                            if &t > now && &t <= horizon {
                                out.push(t);
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(out)
}

// Solves `lhs #= rhs` for `tvar` given bindings; linear occurrences only.
fn solve_constraint_for(lit: &Literal, tvar: &str, bind: &OBind) -> Option<Rat> {
    let Literal::Constr { rel, lhs, rhs, .. } = lit else { return None };
    if *rel != crate::clpq::SurfaceRel::Eq {
        return None;
    }
    // affine evaluation: f(t) = a*t + b via two probes
    let eval_at = |t: Rat| -> Option<(Rat, Rat)> {
        let mut b2 = bind.clone();
        b2.insert(tvar.to_string(), OVal::Num(t));
        let l = match eval_term(lhs, &b2) {
            Ok(OVal::Num(v)) => v,
            _ => return None,
        };
        let r = match eval_term(rhs, &b2) {
            Ok(OVal::Num(v)) => v,
            _ => return None,
        };
        Some((l, r))
    };
    let zero = Rat::zero();
    let one = Rat::from_integer(1.into());
    let (l0, r0) = eval_at(zero.clone())?;
    let (l1, r1) = eval_at(one)?;
    let f0 = l0 - r0;
    let f1 = l1 - r1;
    let slope = f1 - f0.clone();
    if slope.is_zero() {
        return None;
    }
    Some(-f0 / slope)
}

/// True when some satisfied conjunct can only hold at isolated instants,
/// making `t` the first instant of the body's truth component.
fn body_has_edge(
    model: &DomainModel,
    state: &OState,
    t: &Rat,
    tvar: Option<&str>,
    body: &[Literal],
    bind: &OBind,
) -> bool {
    for lit in body {
        match lit {
            Literal::Happens { time, .. } => {
                if let Ok(Some(te)) = eval_term_num(time, bind) {
                    if &te == t {
                        return true;
                    }
                }
            }
            Literal::Holds { fluent, time, .. } => {
                let at_now = matches!(eval_term_num(time, bind), Ok(Some(ref te)) if te == t);
                if !at_now {
                    continue;
                }
                if let Some(FluentKind::Functional) = model.fluent_kind(&fluent.name) {
                    if let Some(ORegime::Line { rate, .. }) = state.regimes.get(&fluent.name) {
                        if !rate.is_zero() {
                            return true;
                        }
                    }
                }
            }
            Literal::Constr { rel, .. } => {
                if *rel == crate::clpq::SurfaceRel::Eq {
                    if let Some(tv) = tvar {
                        if lit.vars().iter().any(|v| v == tv) {
                            return true;
                        }
                    }
                }
            }
            _ => {}
        }
    }
    false
}

fn eval_literal_set(
    model: &DomainModel,
    state: &OState,
    now: &Rat,
    fired: &[(GroundAtom, Rat)],
    lit: &Literal,
    bind: OBind,
) -> Result<Vec<OBind>, OracleError> {
    eval_body(model, state, now, fired, std::slice::from_ref(lit), bind)
}

/// Conjunctive body evaluation against the simulator state at instant `now`.
fn eval_body(
    model: &DomainModel,
    state: &OState,
    now: &Rat,
    fired: &[(GroundAtom, Rat)],
    body: &[Literal],
    bind: OBind,
) -> Result<Vec<OBind>, OracleError> {
    let mut binds = vec![bind];
    for lit in body {
        let mut next = Vec::new();
        for b in binds {
            match lit {
                Literal::Initially { fluent, .. } => {
                    for fact in model.initially_facts() {
                        if fact.name != fluent.name || fact.args.len() != fluent.args.len() {
                            continue;
                        }
                        let mut b2 = b.clone();
                        let vals: Vec<OVal> = fact
                            .args
                            .iter()
                            .map(|a| eval_term(a, &OBind::new()))
                            .collect::<Result<_, _>>()?;
                        if fluent
                            .args
                            .iter()
                            .zip(&vals)
                            .all(|(pat, v)| match_term(pat, v, &mut b2))
                        {
                            next.push(b2);
                        }
                    }
                }
                Literal::Happens { event, time, .. } => {
                    for (ev, te) in fired {
                        if ev.name != event.name || ev.args.len() != event.args.len() {
                            continue;
                        }
                        let mut b2 = b.clone();
                        let mut ok = true;
                        for (pat, val) in event.args.iter().zip(&ev.args) {
                            if !match_term(pat, &OVal::from_ground(val), &mut b2) {
                                ok = false;
                                break;
                            }
                        }
                        if ok && match_term(time, &OVal::Num(te.clone()), &mut b2) {
                            next.push(b2);
                        }
                    }
                }
                Literal::Holds { fluent, time, .. } => {
                    // only the current instant is observable
                    let mut b2 = b.clone();
                    let t_ok = match_term(time, &OVal::Num(now.clone()), &mut b2);
                    if !t_ok {
                        continue;
                    }
                    match model.fluent_kind(&fluent.name) {
                        Some(FluentKind::Functional) => {
                            let Some(v) =
                                state.regimes.get(&fluent.name).and_then(|r| r.value_at(now))
                            else {
                                continue;
                            };
                            if match_term(&fluent.args[0], &OVal::Num(v), &mut b2) {
                                next.push(b2);
                            }
                        }
                        _ => {
                            let key = render_instance(fluent, &b2);
                            if state.truths.contains(&key) {
                                next.push(b2);
                            }
                        }
                    }
                }
                Literal::Constr { rel, lhs, rhs, .. } => {
                    let l = eval_term_num(lhs, &b)?;
                    let r = eval_term_num(rhs, &b)?;
                    match (l, r) {
                        (Some(l), Some(r)) => {
                            use crate::clpq::SurfaceRel::*;
                            let holds = match rel {
                                Eq => l == r,
                                Ne => l != r,
                                Lt => l < r,
                                Le => l <= r,
                                Gt => l > r,
                                Ge => l >= r,
                            };
                            if holds {
                                next.push(b);
                            }
                        }
                        // defining equality: bind a single unbound variable
                        (l, r) if *rel == crate::clpq::SurfaceRel::Eq => {
                            let mut b2 = b.clone();
                            let bound = match (l, r) {
                                (Some(lv), None) => try_bind_equation(rhs, lv, &mut b2),
                                (None, Some(rv)) => try_bind_equation(lhs, rv, &mut b2),
                                _ => false,
                            };
                            if bound {
                                next.push(b2);
                            }
                        }
                        _ => {}
                    }
                }
                Literal::Pred { atom, .. } => {
                    for (_, head, cbody) in model.user_clauses(&atom.name, atom.arity()) {
                        // rule-local namespace; unbound call arguments are
                        // filled in from the head after the body solves
                        let mut local = OBind::new();
                        let mut deferred: Vec<(&Term, String)> = Vec::new();
                        let mut ok = true;
                        for (pat, arg) in head.args.iter().zip(&atom.args) {
                            match arg {
                                Term::Var(av) if !b.contains_key(av) => {
                                    deferred.push((pat, av.clone()));
                                }
                                _ => match eval_term(arg, &b) {
                                    Ok(v) => {
                                        if !match_term(pat, &v, &mut local) {
                                            ok = false;
                                            break;
                                        }
                                    }
                                    Err(_) => {
                                        ok = false;
                                        break;
                                    }
                                },
                            }
                        }
                        if !ok {
                            continue;
                        }
                        for sol in eval_body(model, state, now, fired, cbody, local.clone())? {
                            let mut b3 = b.clone();
                            let mut ok2 = true;
                            for (pat, av) in &deferred {
                                match eval_term(pat, &sol) {
                                    Ok(v) => {
                                        b3.insert(av.clone(), v);
                                    }
                                    Err(_) => {
                                        ok2 = false;
                                        break;
                                    }
                                }
                            }
                            if ok2 {
                                next.push(b3);
                            }
                        }
                    }
                }
                Literal::NegPred { atom, .. } => {
                    let sols = eval_body(
                        model,
                        state,
                        now,
                        fired,
                        std::slice::from_ref(&Literal::Pred { atom: atom.clone(), span: atom.span }),
                        b.clone(),
                    )?;
                    if sols.is_empty() {
                        next.push(b);
                    }
                }
            }
        }
        binds = next;
    }
    Ok(binds)
}

/// Binds the single unbound variable in a linear defining equation,
/// `value = f(X)` with everything else known.
fn try_bind_equation(term: &Term, value: Rat, bind: &mut OBind) -> bool {
    let free: Vec<String> =
        term.vars().into_iter().filter(|v| !bind.contains_key(v)).collect();
    if free.len() != 1 {
        return false;
    }
    let var = &free[0];
    // affine in the free var: probe at 0 and 1
    let probe = |x: Rat, bind: &OBind| -> Option<Rat> {
        let mut b2 = bind.clone();
        b2.insert(var.clone(), OVal::Num(x));
        match eval_term(term, &b2) {
            Ok(OVal::Num(v)) => Some(v),
            _ => None,
        }
    };
    let zero = Rat::zero();
    let one = Rat::from_integer(1.into());
    let (Some(f0), Some(f1)) = (probe(zero, bind), probe(one, bind)) else {
        return false;
    };
    let slope = f1 - f0.clone();
    if slope.is_zero() {
        return false;
    }
    let x = (value - f0) / slope;
    bind.insert(var.clone(), OVal::Num(x));
    true
}

fn eval_term(t: &Term, bind: &OBind) -> Result<OVal, OracleError> {
    match t {
        Term::Num(r) => Ok(OVal::Num(r.clone())),
        Term::Sym(s) => Ok(OVal::Sym(s.clone())),
        Term::Var(v) => bind
            .get(v)
            .cloned()
            .ok_or_else(|| OracleError::Unsupported(format!("unbound variable {v}"))),
        other => match eval_term_num(other, bind)? {
            Some(v) => Ok(OVal::Num(v)),
            None => Err(OracleError::Unsupported(format!("non-numeric term {other}"))),
        },
    }
}

fn eval_term_num(t: &Term, bind: &OBind) -> Result<Option<Rat>, OracleError> {
    Ok(match t {
        Term::Num(r) => Some(r.clone()),
        Term::Sym(_) => None,
        Term::Var(v) => match bind.get(v) {
            Some(OVal::Num(r)) => Some(r.clone()),
            _ => None,
        },
        Term::Add(a, b) => bin(eval_term_num(a, bind)?, eval_term_num(b, bind)?, |x, y| x + y),
        Term::Sub(a, b) => bin(eval_term_num(a, bind)?, eval_term_num(b, bind)?, |x, y| x - y),
        Term::Mul(a, b) => bin(eval_term_num(a, bind)?, eval_term_num(b, bind)?, |x, y| x * y),
        Term::Div(a, b) => {
            let d = eval_term_num(b, bind)?;
            match (&eval_term_num(a, bind)?, &d) {
                (Some(x), Some(y)) if !y.is_zero() => Some(x / y),
                _ => None,
            }
        }
        Term::Neg(a) => eval_term_num(a, bind)?.map(|x| -x),
    })
}

fn bin(a: Option<Rat>, b: Option<Rat>, f: impl Fn(Rat, Rat) -> Rat) -> Option<Rat> {
    match (a, b) {
        (Some(a), Some(b)) => Some(f(a, b)),
        _ => None,
    }
}

fn match_term(pat: &Term, val: &OVal, bind: &mut OBind) -> bool {
    match pat {
        Term::Var(v) => match bind.get(v) {
            Some(existing) => existing == val,
            None => {
                bind.insert(v.clone(), val.clone());
                true
            }
        },
        Term::Sym(s) => matches!(val, OVal::Sym(x) if x == s),
        other => match (eval_term_num(other, bind), val) {
            (Ok(Some(x)), OVal::Num(y)) => &x == y,
            _ => false,
        },
    }
}

impl OVal {
    fn from_ground(g: &GroundTerm) -> OVal {
        match g {
            GroundTerm::Num(r) => OVal::Num(r.clone()),
            GroundTerm::Sym(s) => OVal::Sym(s.clone()),
        }
    }
}

fn render_instance(atom: &Atom, bind: &OBind) -> String {
    if atom.args.is_empty() {
        return atom.name.clone();
    }
    let args: Vec<String> = atom
        .args
        .iter()
        .map(|a| eval_term(a, bind).map(|v| v.to_string()).unwrap_or_else(|_| a.to_string()))
        .collect();
    format!("{}({})", atom.name, args.join(", "))
}

fn ground_event(event: &Atom, bind: &OBind) -> Option<GroundAtom> {
    let mut args = Vec::new();
    for a in &event.args {
        match eval_term(a, bind) {
            Ok(OVal::Num(r)) => args.push(GroundTerm::Num(r)),
            Ok(OVal::Sym(s)) => args.push(GroundTerm::Sym(s)),
            Err(_) => return None,
        }
    }
    Some(GroundAtom { name: event.name.clone(), args })
}

/// Compares the engine's holds_at/value_at against the trace at every grid
/// point. An empty result means agreement.
pub fn cross_check(
    timeline: &crate::engine::ClosedTimeline,
    trace: &SampledTrace,
) -> Result<Vec<Discrepancy>, EngineError> {
    let mut out = Vec::new();
    let cache = crate::engine::Cache::shared();
    for row in &trace.rows {
        for (fluent, oracle_truth) in &row.truths {
            if fluent.contains('(') {
                continue; // parameterized instances are engine-internal keys
            }
            let (engine_truth, _) = timeline.holds_at_with(fluent, &row.time, Some(&cache))?;
            if engine_truth != *oracle_truth {
                out.push(Discrepancy {
                    time: row.time.clone(),
                    fluent: fluent.clone(),
                    engine: engine_truth.to_string(),
                    oracle: oracle_truth.to_string(),
                });
            }
        }
        for (fluent, oracle_value) in &row.values {
            let engine_value = match timeline.value_at_with(fluent, &row.time, Some(&cache)) {
                Ok((v, _)) => Some(v),
                Err(EngineError::NoValue { .. }) => None,
                Err(e) => return Err(e),
            };
            if &engine_value != oracle_value {
                out.push(Discrepancy {
                    time: row.time.clone(),
                    fluent: fluent.clone(),
                    engine: engine_value
                        .map(|v| rat_str(&v))
                        .unwrap_or_else(|| "none".to_string()),
                    oracle: oracle_value
                        .as_ref()
                        .map(rat_str)
                        .unwrap_or_else(|| "none".to_string()),
                });
            }
        }
    }
    Ok(out)
}

/// CSV dump: `time,fluent,value` with booleans as true/false.
pub fn trace_csv(trace: &SampledTrace) -> String {
    let mut out = String::from("time,fluent,value\n");
    for row in &trace.rows {
        for (fluent, truth) in &row.truths {
            out.push_str(&format!("{},{},{}\n", rat_str(&row.time), fluent, truth));
        }
        for (fluent, value) in &row.values {
            let v = value.as_ref().map(rat_str).unwrap_or_else(|| "none".to_string());
            out.push_str(&format!("{},{},{}\n", rat_str(&row.time), fluent, v));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_domain, parse_narrative};
    use crate::rational::{rat, rat_frac};

    const MINI: &str = "\
fluent(g). fluent(f(X)). event(start). event(stop).\n\
initiates(start, g, T).\n\
terminates(stop, g, T).\n\
rate(3).\n\
trajectory(g, T1, f(X), T2) :- rate(R), X #= (T2 - T1) * R.\n\
initiallyP(f(0)).\n";

    #[test]
    fn forward_simulation_tracks_trajectory() {
        let model = parse_domain(MINI).unwrap();
        let n = parse_narrative("happens(start, 1). happens(stop, 3). horizon(5).").unwrap();
        let trace = simulate(&model, &n, &rat(1), 1000).unwrap();
        let at = |t: i64| -> Option<Rat> {
            trace.rows.iter().find(|r| r.time == rat(t)).unwrap().values["f"].clone()
        };
        assert_eq!(at(0), Some(rat(0)));
        assert_eq!(at(1), Some(rat(0)));
        assert_eq!(at(2), Some(rat(3)));
        assert_eq!(at(3), Some(rat(6))); // still on the trajectory at the stop instant
        assert_eq!(at(4), Some(rat(6))); // snapshot holds after
    }

    #[test]
    fn zero_step_rejected() {
        let model = parse_domain(MINI).unwrap();
        let n = parse_narrative("horizon(1).").unwrap();
        assert!(matches!(
            simulate(&model, &n, &Rat::from_integer(0.into()), 10),
            Err(OracleError::NonPositiveStep)
        ));
    }

    #[test]
    fn empty_model_trace_is_all_false() {
        let model = parse_domain("fluent(f).").unwrap();
        let n = parse_narrative("horizon(2).").unwrap();
        let trace = simulate(&model, &n, &rat(1), 10).unwrap();
        assert!(trace.rows.iter().all(|r| !r.truths["f"]));
    }

    #[test]
    fn grid_refinement_is_stable() {
        let model = parse_domain(MINI).unwrap();
        let n = parse_narrative("happens(start, 1). happens(stop, 3). horizon(5).").unwrap();
        let coarse = simulate(&model, &n, &rat(1), 1000).unwrap();
        let fine = simulate(&model, &n, &rat_frac(1, 2), 1000).unwrap();
        for row in &coarse.rows {
            let frow = fine.rows.iter().find(|r| r.time == row.time).unwrap();
            assert_eq!(row, frow, "refinement changed t={}", row.time);
        }
    }
}
