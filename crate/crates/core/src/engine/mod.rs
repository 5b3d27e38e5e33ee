//! Goal-directed evaluation of the Event Calculus over a closed timeline.

mod answer;
mod cache;
mod checkpoint;
mod closure;
mod errors;
mod eval;
mod proof;
mod timeline;

pub use answer::Answer;
pub use cache::{Cache, CacheStats, EvalStats, SharedCache};
pub use checkpoint::{Checkpoints, Regime, TRAJ_VAR};
pub use closure::{trigger_closure, trigger_closure_restricted};
pub use errors::EngineError;
pub use eval::{
    linearize, rename_atom_public, rename_literal_public, rename_term_public, resolve_val,
    unify_public, Derivation, EvalCtx, Evaluator, OccSource, Subst, SymOccurrence, Val,
};
pub use proof::{replay, rules, Detail, ProofNode, ReplayError};
pub use timeline::{ClosedTimeline, EngineOpts, RunStats};

use crate::clpq::LinExpr;
use crate::model::{Atom, Literal, Term};
use crate::rational::{rat_str, Rat};
use std::collections::BTreeSet;

impl ClosedTimeline {
    /// Truth of a boolean-state fluent at `t`, with a proof. On a
    /// checkpointed timeline this is a segment lookup; otherwise the holdsAt
    /// axioms are evaluated recursively.
    pub fn holds_at(&self, fluent: &str, t: &Rat) -> Result<(bool, ProofNode), EngineError> {
        let cache = self.fresh_cache();
        self.holds_at_with(fluent, t, cache.as_ref())
    }

    pub fn holds_at_with(
        &self,
        fluent: &str,
        t: &Rat,
        cache: Option<&SharedCache>,
    ) -> Result<(bool, ProofNode), EngineError> {
        let ctx = self.eval_ctx(cache.cloned());
        let atom = Atom::new(fluent, Vec::new());
        let derivs = Evaluator::eval_literal(
            &ctx,
            &Literal::Holds {
                fluent: atom.clone(),
                time: Term::Num(t.clone()),
                span: Default::default(),
            },
            &Subst::new(),
            &crate::clpq::Store::new(),
            0,
        )?;
        match derivs.into_iter().next() {
            Some(d) => Ok((true, d.proof)),
            None => Ok((
                false,
                ProofNode::leaf(
                    format!("not holdsAt({fluent}, {})", rat_str(t)),
                    rules::NAF,
                    Detail::None,
                ),
            )),
        }
    }

    /// Value of a functional fluent at `t`. Distinct derived values are a
    /// model error (MultiValue); no applicable derivation is NoValue.
    pub fn value_at(&self, fluent: &str, t: &Rat) -> Result<(Rat, ProofNode), EngineError> {
        let cache = self.fresh_cache();
        self.value_at_with(fluent, t, cache.as_ref())
    }

    pub fn value_at_with(
        &self,
        fluent: &str,
        t: &Rat,
        cache: Option<&SharedCache>,
    ) -> Result<(Rat, ProofNode), EngineError> {
        let ctx = self.eval_ctx(cache.cloned());
        let var = ctx.fresh_var("V");
        let atom = Atom::new(fluent, vec![Term::Var(var.clone())]);
        let derivs = Evaluator::eval_literal(
            &ctx,
            &Literal::Holds { fluent: atom, time: Term::Num(t.clone()), span: Default::default() },
            &Subst::new(),
            &crate::clpq::Store::new(),
            0,
        )?;
        let mut values: Vec<(Rat, ProofNode)> = Vec::new();
        for d in derivs {
            let v = match d.subst.get(&var) {
                Some(Val::Num(e)) => match e.as_const() {
                    Some(c) => Some(c.clone()),
                    None => d.store.fixed(e),
                },
                Some(Val::Sym(_)) => None,
                None => d.store.fixed(&LinExpr::var(var.clone())),
            };
            let Some(v) = v else { continue };
            if !values.iter().any(|(existing, _)| existing == &v) {
                values.push((v, d.proof));
            }
        }
        match values.len() {
            0 => Err(EngineError::NoValue { fluent: fluent.to_string(), time: rat_str(t) }),
            1 => Ok(values.pop().expect("one value")),
            _ => Err(EngineError::MultiValue {
                fluent: fluent.to_string(),
                time: rat_str(t),
                values: values.iter().map(|(v, _)| rat_str(v)).collect(),
            }),
        }
    }

    /// Sound and complete enumeration of answers to a conjunctive goal.
    /// Time variables may come back constrained rather than bound.
    pub fn query(&self, goal: &[Literal]) -> Result<Vec<Answer>, EngineError> {
        let cache = self.fresh_cache();
        let (answers, _) = self.query_with(goal, cache.as_ref())?;
        Ok(answers)
    }

    /// As `query`, but reports run statistics and reuses the given cache.
    pub fn query_with(
        &self,
        goal: &[Literal],
        cache: Option<&SharedCache>,
    ) -> Result<(Vec<Answer>, RunStats), EngineError> {
        self.check_goal_names(goal)?;
        let ctx = self.eval_ctx(cache.cloned());
        let derivs =
            Evaluator::eval_body(&ctx, goal, &Subst::new(), &crate::clpq::Store::new(), 0)?;
        let mut query_vars: Vec<String> = Vec::new();
        for lit in goal {
            for v in lit.vars() {
                if !query_vars.contains(&v) {
                    query_vars.push(v);
                }
            }
        }
        let mut answers = Vec::new();
        for d in derivs {
            answers.push(extract_answer(&query_vars, &d));
        }
        let stats = RunStats::collect(*ctx.stats.borrow(), cache);
        Ok((answers, stats))
    }

    /// Tabled evaluation: identical answers to `query`, plus cache counters.
    pub fn solve_with_cache(
        &self,
        goal: &[Literal],
        cache: &SharedCache,
    ) -> Result<(Vec<Answer>, RunStats), EngineError> {
        self.query_with(goal, Some(cache))
    }

    fn check_goal_names(&self, goal: &[Literal]) -> Result<(), EngineError> {
        for lit in goal {
            match lit {
                Literal::Holds { fluent, .. } => {
                    if self.model.fluent_kind(&fluent.name).is_none() {
                        return Err(EngineError::UnknownName(fluent.name.clone()));
                    }
                }
                Literal::Happens { event, .. } => {
                    if !self.model.events.contains_key(&event.name) {
                        return Err(EngineError::UnknownName(event.name.clone()));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Replays the proof of an answer against this timeline.
    pub fn replay_proof(&self, proof: &ProofNode) -> Result<(), ReplayError> {
        replay(proof, &self.model, &self.event_pairs())
    }
}

pub(crate) fn extract_answer(query_vars: &[String], d: &Derivation) -> Answer {
    let mut bindings = std::collections::BTreeMap::new();
    let mut residual_vars: BTreeSet<String> = BTreeSet::new();
    let mut store = d.store.clone();
    for v in query_vars {
        match d.subst.get(v) {
            Some(Val::Sym(s)) => {
                bindings.insert(v.clone(), s.clone());
            }
            Some(Val::Num(e)) => {
                if let Some(c) = e.as_const() {
                    bindings.insert(v.clone(), rat_str(c));
                } else if let Some(c) = store.fixed(e) {
                    bindings.insert(v.clone(), rat_str(&c));
                } else {
                    // link the variable into the store; projection then
                    // eliminates any rule-local names from the residual
                    store = store.assert_cons(&crate::clpq::LinConstraint::eq(
                        LinExpr::var(v.clone()),
                        e.clone(),
                    ));
                    residual_vars.insert(v.clone());
                }
            }
            None => {
                if let Some(c) = store.fixed(&LinExpr::var(v.clone())) {
                    bindings.insert(v.clone(), rat_str(&c));
                } else if store.vars().contains(v) {
                    residual_vars.insert(v.clone());
                }
            }
        }
    }
    let residual_cons = store.project(&residual_vars);
    let residual = residual_cons.iter().map(|c| c.to_string()).collect();
    Answer { bindings, residual, proof: d.proof.clone(), residual_cons }
}
