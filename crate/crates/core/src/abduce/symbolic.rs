//! Trigger closure over occurrences with symbolic times.
//!
//! Hypothesized events carry time variables constrained by a shared store.
//! The chronological fixpoint generalizes by case analysis: whenever the
//! order of two instants, the attainment of a firing instant, or the guard
//! of a conditional firing is not decided by the store, the branch splits
//! and each case continues with the deciding constraint asserted.

use crate::clpq::{LinConstraint, LinExpr, Rel, Store};
use crate::engine::{
    EngineError, EngineOpts, EvalCtx, Evaluator, OccSource, Subst, SymOccurrence, Val,
};
use crate::model::{ClauseKind, DomainModel, Literal};
use crate::rational::Rat;
use num_traits::Zero;
use std::collections::BTreeSet;

#[derive(Debug, Clone)]
pub struct Branch {
    pub events: Vec<SymOccurrence>,
    pub store: Store,
    pub added: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum SymbolicError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("case-split limit of {0} branches exceeded during symbolic closure")]
    BranchLimit(usize),
}

struct Candidate {
    rule: usize,
    time: LinExpr,
    event_name: String,
    event_args: Vec<Val>,
    /// Constraints (over outer variables) under which this firing exists.
    guard: Vec<LinConstraint>,
}

/// Runs the trigger fixpoint on every branch. Returned branches are closed:
/// no trigger rule has a new attainable firing instant under their stores.
pub fn symbolic_closure(
    model: &DomainModel,
    start: Branch,
    horizon: &Rat,
    opts: EngineOpts,
    branch_cap: usize,
) -> Result<Vec<Branch>, SymbolicError> {
    let mut open = vec![start];
    let mut closed = Vec::new();
    while let Some(branch) = open.pop() {
        if open.len() + closed.len() > branch_cap {
            return Err(SymbolicError::BranchLimit(branch_cap));
        }
        if branch.store.is_unsat() {
            continue;
        }
        let candidates = collect_candidates(model, &branch, horizon, opts)?;
        let fresh: Vec<Candidate> = candidates
            .into_iter()
            .filter(|c| !is_duplicate(&branch, c))
            .collect();
        if fresh.is_empty() {
            closed.push(branch);
            continue;
        }
        if branch.added + 1 > opts.zeno_bound {
            return Err(SymbolicError::Engine(EngineError::Zeno {
                bound: opts.zeno_bound,
                last: branch.events.iter().rev().take(5).map(|o| o.render()).collect(),
            }));
        }
        // fire the earliest candidate; undetermined orders split the branch
        for (store, candidate) in earliest_splits(&branch.store, fresh) {
            let mut store = store;
            for g in &candidate.guard {
                store = store.assert_cons(g);
            }
            if store.is_unsat() {
                continue;
            }
            // equality with an existing same-name occurrence may still be
            // possible without being entailed: split into the distinct case
            // (fire) and the coincident case (skip as a duplicate)
            let mut distinct_store = store.clone();
            let mut skip_stores: Vec<Store> = Vec::new();
            for occ in &branch.events {
                if occ.name != candidate.event_name {
                    continue;
                }
                let eq = LinConstraint::eq(candidate.time.clone(), occ.time.clone());
                if distinct_store.entails(&eq) {
                    // always coincident: handled by is_duplicate above
                    continue;
                }
                let coincident = distinct_store.assert_cons(&eq);
                if coincident.is_sat() && args_equal(&candidate.event_args, &occ.args) {
                    skip_stores.push(coincident);
                    for neg in eq.negated() {
                        let d = distinct_store.assert_cons(&neg);
                        if d.is_sat() {
                            distinct_store = d;
                            break;
                        }
                    }
                }
            }
            for s in skip_stores {
                closed_or_open(&mut open, Branch { events: branch.events.clone(), store: s, added: branch.added });
            }
            if distinct_store.is_unsat() {
                continue;
            }
            let mut events = branch.events.clone();
            events.push(SymOccurrence {
                name: candidate.event_name.clone(),
                args: candidate.event_args.clone(),
                time: candidate.time.clone(),
                source: OccSource::Triggered { rule: candidate.rule },
            });
            open.push(Branch { events, store: distinct_store, added: branch.added + 1 });
        }
    }
    Ok(closed)
}

fn closed_or_open(open: &mut Vec<Branch>, branch: Branch) {
    // a coincident-case branch re-enters the loop; its candidate will be
    // recognized as a duplicate next round
    open.push(branch);
}

fn args_equal(a: &[Val], b: &[Val]) -> bool {
    a == b
}

fn is_duplicate(branch: &Branch, c: &Candidate) -> bool {
    branch.events.iter().any(|occ| {
        occ.name == c.event_name
            && args_equal(&occ.args, &c.event_args)
            && branch.store.entails(&LinConstraint::eq(c.time.clone(), occ.time.clone()))
    })
}

/// All firing candidates of all trigger rules under a branch.
fn collect_candidates(
    model: &DomainModel,
    branch: &Branch,
    horizon: &Rat,
    opts: EngineOpts,
) -> Result<Vec<Candidate>, SymbolicError> {
    let mut ctx = EvalCtx::new(model, branch.events.clone(), LinExpr::constant(horizon.clone()));
    ctx.depth_bound = opts.depth_bound;
    ctx.build_proofs = false;

    let outer: BTreeSet<String> = branch.store.vars();
    let mut out = Vec::new();
    for (idx, clause) in model.clauses.iter().enumerate() {
        let ClauseKind::Trigger { event, time, body } = &clause.kind else { continue };
        if body.is_empty() {
            continue;
        }
        let tvar = ctx.fresh_var("!T");
        let tvar_expr = LinExpr::var(tvar.clone());
        let id = ctx.fresh_id();
        let head_event = crate::engine::rename_atom_public(event, id);
        let head_time = crate::engine::rename_term_public(time, id);
        let body: Vec<Literal> =
            body.iter().map(|l| crate::engine::rename_literal_public(l, id)).collect();

        let store0 = branch
            .store
            .assert_cons(&LinConstraint::le(LinExpr::zero(), tvar_expr.clone()))
            .assert_cons(&LinConstraint::le(tvar_expr.clone(), LinExpr::constant(horizon.clone())));
        let Some((s1, st1)) =
            crate::engine::unify_public(&head_time, &Val::Num(tvar_expr.clone()), &Subst::new(), &store0)
                .map_err(SymbolicError::Engine)?
        else {
            continue;
        };
        for d in Evaluator::eval_body(&ctx, &body, &s1, &st1, 0).map_err(SymbolicError::Engine)? {
            let mut keep = outer.clone();
            keep.insert(tvar.clone());
            let region = d.store.project(&keep);
            let region_store = Store::new().assert_all(&region);
            if region_store.is_unsat() {
                continue;
            }
            let Some(time_expr) = minimal_instant(&region, &tvar) else {
                continue;
            };
            // guard: the region with the firing time substituted in
            let guard: Vec<LinConstraint> = region
                .iter()
                .map(|c| c.substitute(&tvar, &time_expr))
                .filter(|c| c.const_truth() != Some(true))
                .collect();
            let mut args = Vec::new();
            for a in &head_event.args {
                let v = crate::engine::resolve_val(a, &d.subst).map_err(SymbolicError::Engine)?;
                let v = match v {
                    Val::Num(e) => Val::Num(e.substitute(&tvar, &time_expr)),
                    other => other,
                };
                args.push(v);
            }
            out.push(Candidate {
                rule: idx,
                time: time_expr,
                event_name: head_event.name.clone(),
                event_args: args,
                guard,
            });
        }
    }
    Ok(out)
}

/// The first instant of a convex region over `tvar`, as an expression over
/// the remaining variables. None when the region is left-open (no first
/// instant) or when the minimum is not syntactically determined.
fn minimal_instant(region: &[LinConstraint], tvar: &str) -> Option<LinExpr> {
    // an equality pins the instant directly
    for c in region {
        if c.rel == Rel::Eq && !c.expr.coeff(tvar).is_zero() {
            return c.expr.solve_for(tvar);
        }
    }
    // otherwise the dominant non-strict lower bound is the minimum; with
    // several bounds the dominance must be entailed by the region itself
    let mut lower: Vec<(LinExpr, bool)> = Vec::new();
    for c in region {
        let a = c.expr.coeff(tvar);
        if a.is_zero() {
            continue;
        }
        use num_traits::Signed;
        if a.is_negative() {
            // a*t + rest <= 0 with a < 0  =>  t >= -rest/a
            let mut rest = c.expr.clone();
            rest.coeffs.remove(tvar);
            let bound = rest.scale(&(-Rat::from_integer(1.into()) / a));
            lower.push((bound, c.rel == Rel::Lt));
        }
    }
    if lower.is_empty() {
        return None;
    }
    let region_store = Store::new().assert_all(region);
    let mut best: Option<(LinExpr, bool)> = None;
    for (bound, strict) in lower {
        match &best {
            None => best = Some((bound, strict)),
            Some((b, _)) => {
                let ge = LinConstraint::le(b.clone(), bound.clone());
                let le = LinConstraint::le(bound.clone(), b.clone());
                if region_store.entails(&ge) {
                    best = Some((bound, strict));
                } else if region_store.entails(&le) {
                    // keep current best
                } else {
                    // dominance undecided: give up on this derivation rather
                    // than guess; the caller's case splits refine the store
                    return None;
                }
            }
        }
    }
    match best {
        Some((bound, false)) => Some(bound),
        _ => None,
    }
}

/// Orders the candidates chronologically. When the store does not decide
/// which fires first, the branch splits: candidate i is the earliest in its
/// branch, strictly earlier than candidates 0..i and at most equal to the
/// rest, which keeps the branches disjoint and covers every ordering.
fn earliest_splits(store: &Store, mut candidates: Vec<Candidate>) -> Vec<(Store, Candidate)> {
    candidates.sort_by_key(|c| (c.rule, c.time.to_string(), c.event_name.clone()));
    let times: Vec<LinExpr> = candidates.iter().map(|c| c.time.clone()).collect();
    candidates
        .into_iter()
        .enumerate()
        .filter_map(|(i, c)| {
            let mut s = store.clone();
            for (j, tj) in times.iter().enumerate() {
                if i == j {
                    continue;
                }
                let cons = if j < i {
                    LinConstraint::lt(c.time.clone(), tj.clone())
                } else {
                    LinConstraint::le(c.time.clone(), tj.clone())
                };
                s = s.assert_cons(&cons);
                if s.is_unsat() {
                    return None;
                }
            }
            Some((s, c))
        })
        .collect()
}
