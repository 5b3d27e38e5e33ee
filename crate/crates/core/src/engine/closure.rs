//! Chronological trigger-closure: repeatedly fire the earliest new
//! trigger-rule instance until a fixpoint or the zeno bound.
//!
//! A trigger fires at the earliest instant of a derivation's admissible
//! region when that instant is attained (a closed left endpoint or an
//! isolated point). Left-open regions have no first instant and do not
//! fire. Each rule body is evaluated against the timeline just before the
//! new event is added, so a trigger never sees its own effect.
//!
//! Rules whose bodies read no fluent state ("event-driven": happens plus
//! static predicates and constraints) keep their fired candidates valid
//! forever, so they are evaluated incrementally against newly added
//! occurrences only. State-reading rules are re-evaluated in full each
//! round.

use super::errors::EngineError;
use super::eval::{EvalCtx, Evaluator, OccSource, Subst, SymOccurrence, Val};
use super::timeline::{narrative_occurrences, ClosedTimeline, EngineOpts};
use crate::clpq::{LinConstraint, LinExpr, Store};
use crate::model::{ClauseKind, DomainModel, GroundAtom, Literal, Narrative};
use crate::rational::{rat_str, Rat};
use std::collections::BTreeSet;
use std::sync::Arc;

pub fn trigger_closure(
    model: &Arc<DomainModel>,
    narrative: &Narrative,
    opts: EngineOpts,
) -> Result<ClosedTimeline, EngineError> {
    trigger_closure_restricted(model, narrative, opts, None)
}

/// True when every literal of the body is insensitive to fluent state:
/// occurrences, static facts and arithmetic only.
fn is_event_driven(body: &[Literal]) -> bool {
    body.iter().all(|lit| {
        matches!(
            lit,
            Literal::Happens { .. }
                | Literal::Constr { .. }
                | Literal::Pred { .. }
                | Literal::NegPred { .. }
                | Literal::Initially { .. }
        )
    })
}

/// Closure over a subset of the trigger rules (all when `allowed` is None).
/// Staged validation runs pass explicit subsets.
pub fn trigger_closure_restricted(
    model: &Arc<DomainModel>,
    narrative: &Narrative,
    opts: EngineOpts,
    allowed: Option<&BTreeSet<usize>>,
) -> Result<ClosedTimeline, EngineError> {
    let mut events = narrative_occurrences(narrative);
    let horizon = narrative.horizon.clone();
    let mut seen: BTreeSet<(GroundAtom, Rat)> =
        events.iter().map(|(e, t, _)| (e.clone(), t.clone())).collect();

    let rule_is_active = |idx: usize| allowed.map_or(true, |a| a.contains(&idx));
    let event_driven: Vec<usize> = model
        .clauses
        .iter()
        .enumerate()
        .filter(|(idx, c)| {
            rule_is_active(*idx)
                && matches!(&c.kind, ClauseKind::Trigger { body, .. }
                    if !body.is_empty() && is_event_driven(body))
        })
        .map(|(idx, _)| idx)
        .collect();
    let state_dependent: Vec<usize> = model
        .clauses
        .iter()
        .enumerate()
        .filter(|(idx, c)| {
            rule_is_active(*idx)
                && matches!(&c.kind, ClauseKind::Trigger { body, .. }
                    if !body.is_empty() && !is_event_driven(body))
        })
        .map(|(idx, _)| idx)
        .collect();

    // persistent candidate pool for event-driven rules; fired or known
    // candidates are removed rather than re-filtered each round
    let mut pool: BTreeSet<(Rat, usize, GroundAtom)> = BTreeSet::new();
    for c in rule_candidates(model, &events, &horizon, &opts, &event_driven)? {
        if !seen.contains(&(c.2.clone(), c.0.clone())) {
            pool.insert(c);
        }
    }

    let mut added = 0usize;
    let mut last_added: Vec<String> = Vec::new();

    loop {
        let pooled = loop {
            match pool.first().cloned() {
                Some(c) if seen.contains(&(c.2.clone(), c.0.clone())) => {
                    pool.remove(&c);
                }
                other => break other,
            }
        };
        let fresh_state = if state_dependent.is_empty() {
            None
        } else {
            rule_candidates(model, &events, &horizon, &opts, &state_dependent)?
                .into_iter()
                .find(|c| !seen.contains(&(c.2.clone(), c.0.clone())))
        };
        let chosen = match (pooled, fresh_state) {
            (None, None) => break,
            (Some(p), None) => {
                pool.remove(&p);
                p
            }
            (None, Some(s)) => s,
            (Some(p), Some(s)) => {
                if p <= s {
                    pool.remove(&p);
                    p
                } else {
                    s
                }
            }
        };
        let (t, rule, event) = chosen;
        added += 1;
        if added > opts.zeno_bound {
            last_added.push(format!("{event}@{}", rat_str(&t)));
            let tail = last_added.len().saturating_sub(5);
            return Err(EngineError::Zeno {
                bound: opts.zeno_bound,
                last: last_added[tail..].to_vec(),
            });
        }
        seen.insert((event.clone(), t.clone()));
        if last_added.len() >= 8 {
            last_added.remove(0);
        }
        last_added.push(format!("{event}@{}", rat_str(&t)));
        let pos = events.partition_point(|(_, te, _)| te <= &t);
        let new_occ = (event, t, OccSource::Triggered { rule });
        events.insert(pos, new_occ.clone());
        // incremental candidates from the freshly added occurrence
        if !event_driven.is_empty() {
            let delta = std::slice::from_ref(&new_occ);
            for c in rule_candidates(model, delta, &horizon, &opts, &event_driven)? {
                if !seen.contains(&(c.2.clone(), c.0.clone())) {
                    pool.insert(c);
                }
            }
        }
    }

    Ok(ClosedTimeline {
        model: Arc::clone(model),
        events,
        horizon,
        checkpoints: None,
        diagnostics: Vec::new(),
        opts,
    })
}

/// Firing candidates of the given trigger rules, with happens-literal
/// enumeration restricted to `visible` occurrences (pass the full event list
/// for a complete evaluation, or just the newly added occurrence for the
/// incremental event-driven path).
fn rule_candidates(
    model: &Arc<DomainModel>,
    visible: &[(GroundAtom, Rat, OccSource)],
    horizon: &Rat,
    opts: &EngineOpts,
    rules: &[usize],
) -> Result<Vec<(Rat, usize, GroundAtom)>, EngineError> {
    if rules.is_empty() {
        return Ok(Vec::new());
    }
    let occurrences: Vec<SymOccurrence> = visible
        .iter()
        .map(|(event, time, source)| SymOccurrence {
            name: event.name.clone(),
            args: event.args.iter().map(Val::from_ground).collect(),
            time: LinExpr::constant(time.clone()),
            source: *source,
        })
        .collect();
    let mut ctx = EvalCtx::new(model, occurrences, LinExpr::constant(horizon.clone()));
    ctx.depth_bound = opts.depth_bound;
    ctx.build_proofs = false;

    let mut candidates: Vec<(Rat, usize, GroundAtom)> = Vec::new();
    for &idx in rules {
        let ClauseKind::Trigger { event, time, body } = &model.clauses[idx].kind else {
            continue;
        };
        let tvar = ctx.fresh_var("!T");
        let tvar_expr = LinExpr::var(tvar.clone());
        let subst = Subst::new();
        let store = Store::new()
            .assert_cons(&LinConstraint::le(LinExpr::zero(), tvar_expr.clone()))
            .assert_cons(&LinConstraint::le(tvar_expr.clone(), LinExpr::constant(horizon.clone())));
        let id = ctx.fresh_id();
        let head_event = super::eval::rename_atom_public(event, id);
        let head_time = super::eval::rename_term_public(time, id);
        let body: Vec<Literal> =
            body.iter().map(|l| super::eval::rename_literal_public(l, id)).collect();

        let Some((s1, st1)) =
            super::eval::unify_public(&head_time, &Val::Num(tvar_expr.clone()), &subst, &store)?
        else {
            continue;
        };
        for d in Evaluator::eval_body(&ctx, &body, &s1, &st1, 0)? {
            // fast path: the derivation pins the firing instant
            let (t_star, pinned) = match d.store.fixed(&tvar_expr) {
                Some(t) => (t, d.store.clone()),
                None => {
                    let mut keep = BTreeSet::new();
                    keep.insert(tvar.clone());
                    let region = d.store.project(&keep);
                    let region_store = Store::new().assert_all(&region);
                    if region_store.is_unsat() {
                        continue;
                    }
                    let bounds = region_store.bounds(&tvar_expr);
                    let Some(lo) = bounds.lo else { continue };
                    if lo.strict {
                        // left-open region: no first instant to fire at
                        continue;
                    }
                    let t_star = lo.value;
                    let pinned = d.store.assert_cons(&LinConstraint::eq(
                        tvar_expr.clone(),
                        LinExpr::constant(t_star.clone()),
                    ));
                    if pinned.is_unsat() {
                        continue;
                    }
                    (t_star, pinned)
                }
            };
            let mut args = Vec::new();
            let mut ok = true;
            for a in &head_event.args {
                let v = super::eval::resolve_val(a, &d.subst)?;
                let g = match v {
                    Val::Sym(s) => crate::model::GroundTerm::Sym(s),
                    Val::Num(e) => match e.as_const().cloned().or_else(|| pinned.fixed(&e)) {
                        Some(c) => crate::model::GroundTerm::Num(c),
                        None => {
                            ok = false;
                            break;
                        }
                    },
                };
                args.push(g);
            }
            if !ok {
                return Err(EngineError::UnboundTriggerArgs {
                    rule: model.rule_label(idx),
                    time: rat_str(&t_star),
                });
            }
            candidates.push((t_star, idx, GroundAtom { name: head_event.name.clone(), args }));
        }
    }
    candidates.sort();
    candidates.dedup();
    Ok(candidates)
}
