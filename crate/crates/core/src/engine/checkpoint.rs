//! Per-boundary fluent checkpoints.
//!
//! The timeline is segmented at event times. For each boundary the truth of
//! every boolean fluent and the value regime of every functional fluent just
//! after that instant is stored, so a later read touches only the latest
//! boundary at or before the queried time plus the segment-local trajectory,
//! never the full history.

use super::errors::EngineError;
use super::eval::{EvalCtx, Evaluator, SymOccurrence, Val};
use crate::clpq::LinExpr;
use crate::diag::Diagnostic;
use crate::model::{Atom, ClauseKind, DomainModel, Term};
use crate::rational::{rat_str, Rat};
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};

/// The time variable of a stored trajectory expression.
pub const TRAJ_VAR: &str = "!t";

#[derive(Debug, Clone, PartialEq)]
pub enum Regime {
    Undefined,
    Inertial(Rat),
    Trajectory { rule_idx: usize, anchor: Rat, expr: LinExpr },
}

#[derive(Debug, Clone, Default)]
pub struct BoundaryState {
    pub truths: BTreeMap<String, bool>,
    pub regimes: BTreeMap<String, Regime>,
    pub last_settings: BTreeMap<String, Rat>,
}

#[derive(Debug, Clone, Default)]
pub struct Checkpoints {
    pub boundaries: Vec<Rat>,
    /// states[i] describes the open segment just after boundaries[i]
    pub states: Vec<BoundaryState>,
    pub initial_truths: BTreeMap<String, bool>,
    pub initial_values: BTreeMap<String, Rat>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Checkpoints {
    /// Index of the boundary governing time `t` (the last boundary strictly
    /// before `t`); t = 0 is handled by the initial state.
    fn segment_index(&self, t: &Rat) -> Option<usize> {
        let n = self.boundaries.partition_point(|b| b < t);
        n.checked_sub(1)
    }

    pub fn boundary_for(&self, t: &Rat) -> (Rat, usize) {
        match self.segment_index(t) {
            Some(i) => (self.boundaries[i].clone(), i),
            None => (Rat::zero(), 0),
        }
    }

    pub fn holds_bool(&self, key: &str, t: &Rat) -> bool {
        if t.is_zero() {
            return self.initial_truths.get(key).copied().unwrap_or(false);
        }
        match self.segment_index(t) {
            Some(i) => self.states[i].truths.get(key).copied().unwrap_or(false),
            None => self.initial_truths.get(key).copied().unwrap_or(false),
        }
    }

    /// Values of a functional fluent at `t` (empty = no value).
    pub fn value_at(&self, name: &str, t: &Rat) -> Vec<Rat> {
        if t.is_zero() {
            return self.initial_values.get(name).cloned().into_iter().collect();
        }
        let Some(i) = self.segment_index(t) else {
            return self.initial_values.get(name).cloned().into_iter().collect();
        };
        match self.states[i].regimes.get(name) {
            None | Some(Regime::Undefined) => Vec::new(),
            Some(Regime::Inertial(v)) => vec![v.clone()],
            Some(Regime::Trajectory { expr, .. }) => {
                let v = expr.substitute(TRAJ_VAR, &LinExpr::constant(t.clone()));
                match v.as_const() {
                    Some(c) => vec![c.clone()],
                    None => Vec::new(),
                }
            }
        }
    }

    /// Piecewise description of a functional fluent over (0, horizon]:
    /// (segment start, segment regime) per boundary, plus the value at 0.
    pub fn segments_of(&self, name: &str) -> (Option<Rat>, Vec<(Rat, Regime)>) {
        let at_zero = self.initial_values.get(name).cloned();
        let segs = self
            .boundaries
            .iter()
            .zip(&self.states)
            .map(|(b, st)| {
                (b.clone(), st.regimes.get(name).cloned().unwrap_or(Regime::Undefined))
            })
            .collect();
        (at_zero, segs)
    }
}

/// Builds checkpoints by sweeping the boundaries chronologically. Effect
/// and trajectory bodies are evaluated with the partially built checkpoints
/// available, so each boundary costs segment-local work only.
pub fn build_checkpoints(
    model: &DomainModel,
    events: &[SymOccurrence],
    horizon: &Rat,
) -> Result<Checkpoints, EngineError> {
    let mut cks = Checkpoints::default();

    // initial state from initiallyP facts
    for fact in model.initially_facts() {
        let Some(ground) = fact.to_ground() else { continue };
        match model.fluent_kind(&fact.name) {
            Some(crate::model::FluentKind::Functional) => {
                if let Some(crate::model::GroundTerm::Num(v)) = ground.args.first() {
                    cks.initial_values.insert(fact.name.clone(), v.clone());
                }
            }
            _ => {
                cks.initial_truths.insert(ground.to_string(), true);
            }
        }
    }

    let mut times: BTreeSet<Rat> = BTreeSet::new();
    times.insert(Rat::zero());
    for occ in events {
        if let Some(t) = occ.time.as_const() {
            times.insert(t.clone());
        }
    }

    // running state: starts as the initial state converted to regimes
    let mut state = BoundaryState::default();
    state.truths = cks.initial_truths.clone();
    for (name, v) in &cks.initial_values {
        state.regimes.insert(name.clone(), Regime::Inertial(v.clone()));
        state.last_settings.insert(name.clone(), v.clone());
    }

    for b in times {
        let pre_state = state.clone();
        let occs_here: Vec<&SymOccurrence> =
            events.iter().filter(|o| o.time.as_const() == Some(&b)).collect();

        // evaluate effects against the world just before the boundary; the
        // partially built checkpoints answer ground reads at earlier segments
        let partial = cks.clone();
        let mut ctx = EvalCtx::new(model, events.to_vec(), LinExpr::constant(horizon.clone()));
        ctx.build_proofs = false;
        ctx.checkpoints = Some(&partial);

        let mut initiated: BTreeSet<String> = BTreeSet::new();
        let mut stopped: BTreeSet<String> = BTreeSet::new(); // terminated or released
        let mut func_settings: Vec<(String, Rat)> = Vec::new();
        let mut func_released: BTreeSet<String> = BTreeSet::new();
        let mut bool_released: BTreeSet<String> = BTreeSet::new();

        for occ in &occs_here {
            for clause in model.clauses.iter() {
                let (event, fluent, time, body, kind) = match &clause.kind {
                    ClauseKind::Initiates { event, fluent, time, body } => {
                        (event, fluent, time, body, 0u8)
                    }
                    ClauseKind::Terminates { event, fluent, time, body } => {
                        (event, fluent, time, body, 1)
                    }
                    ClauseKind::Releases { event, fluent, time, body } => {
                        (event, fluent, time, body, 2)
                    }
                    _ => continue,
                };
                if event.name != occ.name {
                    continue;
                }
                let derivs = eval_effect_body(
                    &ctx, event, fluent, time, body, occ, &b,
                )?;
                for (fl_name, fl_vals) in derivs {
                    let functional = matches!(
                        model.fluent_kind(&fl_name),
                        Some(crate::model::FluentKind::Functional)
                    );
                    if functional {
                        match kind {
                            0 => {
                                if let Some(Val::Num(e)) = fl_vals.first() {
                                    if let Some(v) = e.as_const() {
                                        func_settings.push((fl_name.clone(), v.clone()));
                                    }
                                }
                            }
                            1 | 2 => {
                                func_released.insert(fl_name.clone());
                            }
                            _ => {}
                        }
                    } else {
                        let key = if fl_vals.is_empty() {
                            fl_name.clone()
                        } else {
                            let args: Vec<String> =
                                fl_vals.iter().map(|v| v.to_string()).collect();
                            format!("{}({})", fl_name, args.join(", "))
                        };
                        match kind {
                            0 => {
                                initiated.insert(key);
                            }
                            1 => {
                                stopped.insert(key);
                            }
                            2 => {
                                stopped.insert(key.clone());
                                bool_released.insert(key);
                            }
                            _ => {}
                        }
                    }
                }
            }
        }

        // simultaneity conflicts are reported, never silently ordered
        for key in initiated.intersection(&stopped) {
            cks.diagnostics.push(Diagnostic::error(
                format!(
                    "simultaneous initiation and termination of {key} at t = {}",
                    rat_str(&b)
                ),
                0,
                0,
            ));
        }

        let was_true: BTreeMap<String, bool> = pre_state.truths.clone();
        for key in &stopped {
            state.truths.insert(key.clone(), false);
        }
        for key in &initiated {
            state.truths.insert(key.clone(), true);
        }

        // trajectory bookkeeping
        for (idx, clause) in model.clauses.iter().enumerate() {
            let ClauseKind::Trajectory { state: gov, fluent, .. } = &clause.kind else { continue };
            let gov_key = gov.name.clone();
            let fname = fluent.name.clone();
            let true_after = state.truths.get(&gov_key).copied().unwrap_or(false);
            let was = was_true.get(&gov_key).copied().unwrap_or(false);
            let re_initiated = initiated.contains(&gov_key);
            let currently_this = matches!(
                state.regimes.get(&fname),
                Some(Regime::Trajectory { rule_idx, .. }) if *rule_idx == idx
            );

            if true_after && (re_initiated || !was) {
                // (re-)anchor the trajectory at this boundary
                match trajectory_expr(&ctx, idx, &b)? {
                    Some(expr) => {
                        state
                            .regimes
                            .insert(fname.clone(), Regime::Trajectory { rule_idx: idx, anchor: b.clone(), expr });
                    }
                    None => {
                        // body did not hold at the anchor: no trajectory
                        if currently_this {
                            state.regimes.insert(
                                fname.clone(),
                                fallback_regime(&state, &fname),
                            );
                        }
                    }
                }
            } else if !true_after && currently_this {
                if stopped.contains(&gov_key) && !bool_released.contains(&gov_key) {
                    // termination snapshot: freeze the trajectory value
                    if let Some(Regime::Trajectory { expr, .. }) = pre_state.regimes.get(&fname) {
                        let v = expr.substitute(TRAJ_VAR, &LinExpr::constant(b.clone()));
                        if let Some(v) = v.as_const() {
                            state.last_settings.insert(fname.clone(), v.clone());
                            state.regimes.insert(fname.clone(), Regime::Inertial(v.clone()));
                        }
                    }
                } else {
                    // released: no snapshot, fall back to the last setting
                    state.regimes.insert(fname.clone(), fallback_regime(&state, &fname));
                }
            }
        }

        // explicit functional settings
        let mut seen: BTreeMap<String, Rat> = BTreeMap::new();
        for (name, v) in &func_settings {
            if let Some(prev) = seen.get(name) {
                if prev != v {
                    cks.diagnostics.push(Diagnostic::error(
                        format!(
                            "conflicting values {} and {} set for {name} at t = {}",
                            rat_str(prev),
                            rat_str(v),
                            rat_str(&b)
                        ),
                        0,
                        0,
                    ));
                }
                continue;
            }
            seen.insert(name.clone(), v.clone());
            state.last_settings.insert(name.clone(), v.clone());
            let under_trajectory =
                matches!(state.regimes.get(name), Some(Regime::Trajectory { .. }));
            if !under_trajectory {
                state.regimes.insert(name.clone(), Regime::Inertial(v.clone()));
            }
        }
        for name in &func_released {
            state.regimes.insert(name.clone(), Regime::Undefined);
            state.last_settings.remove(name);
        }

        cks.boundaries.push(b.clone());
        cks.states.push(state.clone());
    }

    Ok(cks)
}

fn fallback_regime(state: &BoundaryState, fname: &str) -> Regime {
    match state.last_settings.get(fname) {
        Some(v) => Regime::Inertial(v.clone()),
        None => Regime::Undefined,
    }
}

/// Matches one effect rule against one occurrence at boundary `b` and,
/// when its body holds, yields the ground fluent instances affected.
fn eval_effect_body(
    ctx: &EvalCtx,
    event: &Atom,
    fluent: &Atom,
    time: &Term,
    body: &[crate::model::Literal],
    occ: &SymOccurrence,
    b: &Rat,
) -> Result<Vec<(String, Vec<Val>)>, EngineError> {
    use super::eval::{linearize, resolve_val};
    use crate::clpq::{LinConstraint, Store};

    // rename rule-locals to keep occurrences of the same rule independent
    let suffix_id = ctx.fresh_id();
    let event = rename_for(event, suffix_id);
    let fluent = rename_for(fluent, suffix_id);
    let time = rename_term_for(time, suffix_id);
    let body: Vec<crate::model::Literal> =
        body.iter().map(|l| rename_lit_for(l, suffix_id)).collect();

    let subst = super::eval::Subst::new();
    let store = Store::new();
    let Some((s1, st1)) = unify_event_args(&event, occ, &subst, &store)? else {
        return Ok(Vec::new());
    };
    let te = linearize(&time, &s1)?;
    let st2 = st1.assert_cons(&LinConstraint::eq(te, LinExpr::constant(b.clone())));
    if st2.is_unsat() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for d in Evaluator::eval_body(ctx, &body, &s1, &st2, 0)? {
        let mut vals = Vec::new();
        for a in &fluent.args {
            let v = resolve_val(a, &d.subst)?;
            let v = match &v {
                Val::Num(e) => match d.store.fixed(e) {
                    Some(c) => Val::num_const(c),
                    None => v.clone(),
                },
                _ => v.clone(),
            };
            vals.push(v);
        }
        out.push((fluent.name.clone(), vals));
    }
    Ok(out)
}

fn unify_event_args(
    event: &Atom,
    occ: &SymOccurrence,
    subst: &super::eval::Subst,
    store: &crate::clpq::Store,
) -> Result<Option<(super::eval::Subst, crate::clpq::Store)>, EngineError> {
    if event.args.len() != occ.args.len() {
        return Ok(None);
    }
    let mut s = subst.clone();
    let mut st = store.clone();
    for (t, v) in event.args.iter().zip(&occ.args) {
        match super::eval::unify_public(t, v, &s, &st)? {
            Some((s2, st2)) => {
                s = s2;
                st = st2;
            }
            None => return Ok(None),
        }
    }
    Ok(Some((s, st)))
}

fn rename_for(a: &Atom, id: u64) -> Atom {
    Atom {
        name: a.name.clone(),
        args: a.args.iter().map(|t| rename_term_for(t, id)).collect(),
        span: a.span,
    }
}

fn rename_term_for(t: &Term, id: u64) -> Term {
    match t {
        Term::Var(v) => Term::Var(format!("{v}#{id}")),
        Term::Num(_) | Term::Sym(_) => t.clone(),
        Term::Add(a, b) => {
            Term::Add(Box::new(rename_term_for(a, id)), Box::new(rename_term_for(b, id)))
        }
        Term::Sub(a, b) => {
            Term::Sub(Box::new(rename_term_for(a, id)), Box::new(rename_term_for(b, id)))
        }
        Term::Mul(a, b) => {
            Term::Mul(Box::new(rename_term_for(a, id)), Box::new(rename_term_for(b, id)))
        }
        Term::Div(a, b) => {
            Term::Div(Box::new(rename_term_for(a, id)), Box::new(rename_term_for(b, id)))
        }
        Term::Neg(a) => Term::Neg(Box::new(rename_term_for(a, id))),
    }
}

fn rename_lit_for(l: &crate::model::Literal, id: u64) -> crate::model::Literal {
    use crate::model::Literal as L;
    match l {
        L::Holds { fluent, time, span } => {
            L::Holds { fluent: rename_for(fluent, id), time: rename_term_for(time, id), span: *span }
        }
        L::Happens { event, time, span } => {
            L::Happens { event: rename_for(event, id), time: rename_term_for(time, id), span: *span }
        }
        L::Initially { fluent, span } => L::Initially { fluent: rename_for(fluent, id), span: *span },
        L::Constr { rel, lhs, rhs, span } => L::Constr {
            rel: *rel,
            lhs: rename_term_for(lhs, id),
            rhs: rename_term_for(rhs, id),
            span: *span,
        },
        L::Pred { atom, span } => L::Pred { atom: rename_for(atom, id), span: *span },
        L::NegPred { atom, span } => L::NegPred { atom: rename_for(atom, id), span: *span },
    }
}

/// Evaluates a trajectory body anchored at `b` with the query time symbolic,
/// returning the value as a linear expression in [`TRAJ_VAR`].
fn trajectory_expr(ctx: &EvalCtx, traj_idx: usize, b: &Rat) -> Result<Option<LinExpr>, EngineError> {
    use crate::clpq::Store;
    let ClauseKind::Trajectory { t1, fluent, t2, body, .. } = &ctx.model.clauses[traj_idx].kind
    else {
        return Ok(None);
    };
    let id = ctx.fresh_id();
    let t1 = rename_term_for(t1, id);
    let t2 = rename_term_for(t2, id);
    let fluent = rename_for(fluent, id);
    let body: Vec<crate::model::Literal> = body.iter().map(|l| rename_lit_for(l, id)).collect();

    let subst = super::eval::Subst::new();
    let store = Store::new();
    let t1e = super::eval::linearize(&t1, &subst)?;
    let t2e = super::eval::linearize(&t2, &subst)?;
    let store = store
        .assert_cons(&crate::clpq::LinConstraint::eq(t1e, LinExpr::constant(b.clone())))
        .assert_cons(&crate::clpq::LinConstraint::eq(t2e, LinExpr::var(TRAJ_VAR)));
    if store.is_unsat() {
        return Ok(None);
    }
    let derivs = Evaluator::eval_body(ctx, &body, &subst, &store, 0)?;
    let Some(d) = derivs.first() else { return Ok(None) };
    let val = super::eval::resolve_val(&fluent.args[0], &d.subst)?;
    let Val::Num(e) = val else { return Ok(None) };
    if let Some(c) = e.as_const() {
        return Ok(Some(LinExpr::constant(c.clone())));
    }
    // solve the store for the value variable in terms of the time variable
    let mut keep: BTreeSet<String> = e.vars();
    keep.insert(TRAJ_VAR.to_string());
    let projected = d.store.project(&keep);
    for c in &projected {
        if c.rel == crate::clpq::Rel::Eq {
            // rewrite e using this equality if it eliminates non-time vars
            for v in e.vars() {
                if v == TRAJ_VAR {
                    continue;
                }
                if let Some(repl) = c.expr.solve_for(&v) {
                    let e2 = e.substitute(&v, &repl);
                    if e2.vars().iter().all(|x| x == TRAJ_VAR) {
                        return Ok(Some(e2));
                    }
                }
            }
        }
    }
    if e.vars().iter().all(|x| x == TRAJ_VAR) {
        Ok(Some(e))
    } else {
        Ok(None)
    }
}
