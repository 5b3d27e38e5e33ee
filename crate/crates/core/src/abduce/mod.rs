//! Abductive reasoning: hypothesize event occurrences in bounded windows
//! and solve for property parameters, returning non-ground constrained
//! answers over one shared store.
//!
//! Search is iterative deepening on the hypothesis count with chronological
//! placement canonicalized inside each count, so minimal explanations come
//! first. Abduced times stay symbolic; each hypothesis set is closed under
//! the trigger rules before the goal is attempted.

mod symbolic;

pub use symbolic::{Branch, SymbolicError};

use crate::clpq::{LinConstraint, LinExpr, Store};
use crate::engine::{
    trigger_closure, Answer, EngineError, EngineOpts, EvalCtx, Evaluator,
    OccSource, ProofNode, Subst, SymOccurrence, Val,
};
use crate::model::{Atom, DomainModel, Literal, Narrative, Term};
use crate::rational::{rat_str, Rat};
use crate::validate::{check_property, segments, violation_regions, PropertySpec, Verdict};
use num_traits::Signed;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

/// An abducible event template with a bounded placement window.
/// Windows are never unbounded: abduction over continuous time diverges
/// without them.
#[derive(Debug, Clone)]
pub struct AbducibleSpec {
    pub template: Atom,
    pub window: (Rat, Rat),
    pub max_count: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum AbduceError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error("search exhausted: no hypothesis set within the count bounds proves the goal")]
    SearchExhausted,
    #[error("abducible window [{lo}, {hi}] is empty or negative")]
    BadWindow { lo: String, hi: String },
    #[error("max_count must be at least 1")]
    BadCount,
    #[error("refinement contradicts the abduced constraints")]
    Unsat,
}

#[derive(Debug, Clone, Serialize)]
pub struct Hypothesis {
    pub event: String,
    pub time: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AbducedSolution {
    pub hypotheses: Vec<Hypothesis>,
    /// Residual region over the hypothesis time variables and goal
    /// variables, in DSL constraint syntax.
    pub region: Vec<String>,
    pub proof: ProofNode,
    #[serde(skip)]
    pub region_cons: Vec<LinConstraint>,
    #[serde(skip)]
    pub context: SolutionContext,
}

/// Everything needed to re-enter the solution: the symbolic timeline and the
/// single shared store that governs all hypothesized values.
#[derive(Debug, Clone)]
pub struct SolutionContext {
    pub model: Arc<DomainModel>,
    pub events: Vec<SymOccurrence>,
    pub horizon: Rat,
    pub store: Store,
    pub hyp_vars: Vec<String>,
    pub goal_vars: Vec<String>,
    pub opts: EngineOpts,
}

#[derive(Debug, Clone, Copy)]
pub struct AbduceOpts {
    pub engine: EngineOpts,
    pub branch_cap: usize,
    pub max_solutions: usize,
}

impl Default for AbduceOpts {
    fn default() -> Self {
        AbduceOpts { engine: EngineOpts::default(), branch_cap: 64, max_solutions: 16 }
    }
}

/// Hypothesizes occurrences from `specs` so that `goal` becomes provable
/// over the closed timeline. Solutions come minimal-first (by hypothesis
/// count, then by subset: no solution's hypothesis set strictly contains an
/// earlier one's).
pub fn abduce_events(
    model: &Arc<DomainModel>,
    narrative: &Narrative,
    goal: &[Literal],
    specs: &[AbducibleSpec],
    opts: AbduceOpts,
) -> Result<Vec<AbducedSolution>, AbduceError> {
    for spec in specs {
        if spec.window.0 > spec.window.1 || spec.window.0.is_negative() {
            return Err(AbduceError::BadWindow {
                lo: rat_str(&spec.window.0),
                hi: rat_str(&spec.window.1),
            });
        }
        if spec.max_count == 0 {
            return Err(AbduceError::BadCount);
        }
    }
    let total_max: usize = specs.iter().map(|s| s.max_count).sum();
    let mut solutions: Vec<AbducedSolution> = Vec::new();
    let mut successful_sets: Vec<BTreeMap<usize, usize>> = Vec::new();

    for count in 0..=total_max {
        if solutions.len() >= opts.max_solutions {
            break;
        }
        for multiset in multisets(specs, count) {
            if successful_sets.iter().any(|s| multiset_contains(&multiset, s)) {
                continue; // strict superset of an earlier success
            }
            let found =
                try_hypothesis_set(model, narrative, goal, specs, &multiset, &opts)?;
            if !found.is_empty() {
                successful_sets.push(multiset.clone());
                solutions.extend(found);
                if solutions.len() >= opts.max_solutions {
                    break;
                }
            }
        }
    }

    if solutions.is_empty() {
        Err(AbduceError::SearchExhausted)
    } else {
        Ok(solutions)
    }
}

/// Multisets over spec indices with the given total count, respecting each
/// spec's max_count, in lexicographic order.
fn multisets(specs: &[AbducibleSpec], count: usize) -> Vec<BTreeMap<usize, usize>> {
    fn go(
        specs: &[AbducibleSpec],
        idx: usize,
        remaining: usize,
        current: &mut BTreeMap<usize, usize>,
        out: &mut Vec<BTreeMap<usize, usize>>,
    ) {
        if remaining == 0 {
            out.push(current.clone());
            return;
        }
        if idx >= specs.len() {
            return;
        }
        let cap = specs[idx].max_count.min(remaining);
        for take in (0..=cap).rev() {
            if take > 0 {
                current.insert(idx, take);
            }
            go(specs, idx + 1, remaining - take, current, out);
            current.remove(&idx);
        }
    }
    let mut out = Vec::new();
    go(specs, 0, count, &mut BTreeMap::new(), &mut out);
    out
}

fn multiset_contains(bigger: &BTreeMap<usize, usize>, smaller: &BTreeMap<usize, usize>) -> bool {
    let strictly_bigger =
        bigger.values().sum::<usize>() > smaller.values().sum::<usize>();
    strictly_bigger
        && smaller.iter().all(|(k, v)| bigger.get(k).copied().unwrap_or(0) >= *v)
}

fn hyp_var_names(total: usize) -> Vec<String> {
    if total == 1 {
        vec!["Ts".to_string()]
    } else {
        (1..=total).map(|i| format!("Ts{i}")).collect()
    }
}

fn try_hypothesis_set(
    model: &Arc<DomainModel>,
    narrative: &Narrative,
    goal: &[Literal],
    specs: &[AbducibleSpec],
    multiset: &BTreeMap<usize, usize>,
    opts: &AbduceOpts,
) -> Result<Vec<AbducedSolution>, AbduceError> {
    let total: usize = multiset.values().sum();

    // hypothesis-free case: plain ground closure
    if total == 0 {
        let tl = trigger_closure(model, narrative, opts.engine)?.checkpoint()?;
        let answers = tl.query(goal)?;
        let mut out = Vec::new();
        if let Some(ans) = answers.into_iter().next() {
            out.push(solution_from_ground(model, narrative, goal, ans, opts.engine));
        }
        return Ok(out);
    }

    let names = hyp_var_names(total);
    let mut events: Vec<SymOccurrence> = narrative
        .occurrences
        .iter()
        .map(|o| SymOccurrence {
            name: o.event.name.clone(),
            args: o.event.args.iter().map(Val::from_ground).collect(),
            time: LinExpr::constant(o.time.clone()),
            source: OccSource::Narrative,
        })
        .collect();
    let mut store = Store::new();
    let mut hyp_vars = Vec::new();
    let mut hyp_render: Vec<(String, String)> = Vec::new();
    let mut k = 0usize;
    for (&spec_idx, &n) in multiset {
        let spec = &specs[spec_idx];
        let mut prev: Option<LinExpr> = None;
        for _ in 0..n {
            let var = names[k].clone();
            k += 1;
            let te = LinExpr::var(var.clone());
            store = store
                .assert_cons(&LinConstraint::le(LinExpr::constant(spec.window.0.clone()), te.clone()))
                .assert_cons(&LinConstraint::le(te.clone(), LinExpr::constant(spec.window.1.clone())))
                .assert_cons(&LinConstraint::le(
                    te.clone(),
                    LinExpr::constant(narrative.horizon.clone()),
                ));
            // identical templates are ordered to break permutation symmetry
            if let Some(p) = prev {
                store = store.assert_cons(&LinConstraint::le(p, te.clone()));
            }
            prev = Some(te.clone());
            let args: Vec<Val> = spec
                .template
                .args
                .iter()
                .map(|t| match t {
                    Term::Sym(s) => Val::Sym(s.clone()),
                    Term::Var(v) => Val::Num(LinExpr::var(format!("{v}!{k}"))),
                    other => Val::Num(LinExpr::constant(
                        other.const_eval().unwrap_or_else(|| Rat::from_integer(0.into())),
                    )),
                })
                .collect();
            events.push(SymOccurrence {
                name: spec.template.name.clone(),
                args,
                time: te,
                source: OccSource::Hypothesis { spec: spec_idx },
            });
            hyp_vars.push(var.clone());
            hyp_render.push((spec.template.name.clone(), var));
        }
    }
    if store.is_unsat() {
        return Ok(Vec::new());
    }

    let start = Branch { events, store, added: 0 };
    let branches =
        symbolic::symbolic_closure(model, start, &narrative.horizon, opts.engine, opts.branch_cap)?;

    let mut out = Vec::new();
    for branch in branches {
        let mut ctx = EvalCtx::new(model, branch.events.clone(), LinExpr::constant(narrative.horizon.clone()));
        ctx.depth_bound = opts.engine.depth_bound;
        let derivs = Evaluator::eval_body(&ctx, goal, &Subst::new(), &branch.store, 0)?;
        let mut goal_vars: Vec<String> = Vec::new();
        for lit in goal {
            for v in lit.vars() {
                if !goal_vars.contains(&v) {
                    goal_vars.push(v);
                }
            }
        }
        for d in derivs.into_iter().take(1) {
            let mut keep: BTreeSet<String> = hyp_vars.iter().cloned().collect();
            keep.extend(goal_vars.iter().cloned());
            let region_cons = d.store.project(&keep);
            let hypotheses = hyp_render
                .iter()
                .map(|(event, var)| {
                    let time = d
                        .store
                        .fixed(&LinExpr::var(var.clone()))
                        .map(|v| rat_str(&v))
                        .unwrap_or_else(|| var.clone());
                    Hypothesis { event: event.clone(), time }
                })
                .collect();
            out.push(AbducedSolution {
                hypotheses,
                region: region_cons.iter().map(|c| c.to_string()).collect(),
                proof: d.proof.clone(),
                region_cons: region_cons.clone(),
                context: SolutionContext {
                    model: Arc::clone(model),
                    events: branch.events.clone(),
                    horizon: narrative.horizon.clone(),
                    store: d.store.clone(),
                    hyp_vars: hyp_vars.clone(),
                    goal_vars: goal_vars.clone(),
                    opts: opts.engine,
                },
            });
        }
    }
    Ok(out)
}

fn solution_from_ground(
    model: &Arc<DomainModel>,
    narrative: &Narrative,
    goal: &[Literal],
    ans: Answer,
    opts: EngineOpts,
) -> AbducedSolution {
    let mut goal_vars: Vec<String> = Vec::new();
    for lit in goal {
        for v in lit.vars() {
            if !goal_vars.contains(&v) {
                goal_vars.push(v);
            }
        }
    }
    AbducedSolution {
        hypotheses: Vec::new(),
        region: ans.residual.clone(),
        proof: ans.proof.clone(),
        region_cons: ans.residual_cons.clone(),
        context: SolutionContext {
            model: Arc::clone(model),
            events: narrative
                .occurrences
                .iter()
                .map(|o| SymOccurrence {
                    name: o.event.name.clone(),
                    args: o.event.args.iter().map(Val::from_ground).collect(),
                    time: LinExpr::constant(o.time.clone()),
                    source: OccSource::Narrative,
                })
                .collect(),
            horizon: narrative.horizon.clone(),
            store: Store::new().assert_all(&ans.residual_cons),
            hyp_vars: Vec::new(),
            goal_vars,
            opts,
        },
    }
}

/// Extends the solution's shared store with an extra goal. All earlier and
/// new uses of the abduced values stay mutually consistent because the same
/// store is extended, never forked per use; with several derivations the
/// chronologically first is taken.
pub fn refine(
    solution: &AbducedSolution,
    extra_goal: &[Literal],
) -> Result<AbducedSolution, AbduceError> {
    let ctx_data = &solution.context;
    let mut ctx = EvalCtx::new(
        &ctx_data.model,
        ctx_data.events.clone(),
        LinExpr::constant(ctx_data.horizon.clone()),
    );
    ctx.depth_bound = ctx_data.opts.depth_bound;
    let derivs = Evaluator::eval_body(&ctx, extra_goal, &Subst::new(), &ctx_data.store, 0)?;
    let Some(d) = derivs.into_iter().next() else {
        return Err(AbduceError::Unsat);
    };
    let mut keep: BTreeSet<String> = ctx_data.hyp_vars.iter().cloned().collect();
    keep.extend(ctx_data.goal_vars.iter().cloned());
    for lit in extra_goal {
        keep.extend(lit.vars());
    }
    let region_cons = d.store.project(&keep);
    let mut refined = solution.clone();
    refined.region = region_cons.iter().map(|c| c.to_string()).collect();
    refined.region_cons = region_cons;
    refined.proof = ProofNode::node(
        "refined",
        crate::engine::rules::QUERY,
        vec![solution.proof.clone(), d.proof],
    );
    refined.context.store = d.store;
    refined.context.goal_vars = keep.into_iter().collect();
    Ok(refined)
}

/// A goal with designated parameter variables, for `abduce_parameters`.
#[derive(Debug, Clone)]
pub enum ParametricGoal {
    /// The window-delta property with symbolic volume/window parameters.
    Overdose {
        fluent: String,
        max_var: String,
        window_var: String,
        fixed: Vec<(String, Rat)>,
    },
    /// A plain goal whose parameters occur only in constraint literals.
    Goal { literals: Vec<Literal>, params: Vec<String> },
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamRegion {
    /// Satisfiable region over the parameters: every rational point inside
    /// yields a concrete violation/witness.
    pub region: Vec<String>,
    pub witness: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proof: Option<ProofNode>,
    #[serde(skip)]
    pub region_cons: Vec<LinConstraint>,
}

/// Solves for the parameter regions that make the goal provable on the
/// (concrete) narrative. Disjunctive regions come back as separate answers.
pub fn abduce_parameters(
    model: &Arc<DomainModel>,
    narrative: &Narrative,
    goal: &ParametricGoal,
    opts: EngineOpts,
) -> Result<Vec<ParamRegion>, AbduceError> {
    match goal {
        ParametricGoal::Overdose { fluent, max_var, window_var, fixed } => {
            let tl = trigger_closure(model, narrative, opts)?.checkpoint()?;
            let Some(cks) = &tl.checkpoints else {
                return Err(AbduceError::Engine(EngineError::Unsupported(
                    "checkpoints missing".into(),
                )));
            };
            let Some(segs) = segments(cks, fluent, &tl.horizon) else {
                return Err(AbduceError::Engine(EngineError::NoValue {
                    fluent: fluent.clone(),
                    time: "any".into(),
                }));
            };
            let regions = violation_regions(&segs, max_var, window_var, fixed);
            let mut out = Vec::new();
            for region_cons in regions {
                let store = Store::new().assert_all(&region_cons);
                if store.is_unsat() {
                    continue;
                }
                // witness: instantiate the parameters at an interior point
                // and re-check the concrete property
                let Some(point) = store.sample_point() else { continue };
                let m = point.get(max_var).cloned().unwrap_or_else(|| {
                    fixed
                        .iter()
                        .find(|(n, _)| n == max_var)
                        .map(|(_, v)| v.clone())
                        .unwrap_or_else(|| Rat::from_integer(0.into()))
                });
                let w = point.get(window_var).cloned().unwrap_or_else(|| {
                    fixed
                        .iter()
                        .find(|(n, _)| n == window_var)
                        .map(|(_, v)| v.clone())
                        .unwrap_or_else(|| Rat::from_integer(0.into()))
                });
                let property = PropertySpec::Overdose {
                    fluent: fluent.clone(),
                    max_volume: m.clone(),
                    window: w.clone(),
                };
                let report = check_property(model, narrative, &property, opts);
                if report.verdict != Verdict::Violation {
                    continue;
                }
                let witness = report
                    .witness
                    .as_ref()
                    .map(|w| w.description.clone())
                    .unwrap_or_default();
                out.push(ParamRegion {
                    region: region_cons.iter().map(|c| c.to_string()).collect(),
                    witness: format!(
                        "at {max_var} = {}, {window_var} = {}: {witness}",
                        rat_str(&m),
                        rat_str(&w)
                    ),
                    proof: report.witness.and_then(|w| w.proof),
                    region_cons,
                })
            }
            Ok(out)
        }
        ParametricGoal::Goal { literals, params } => {
            let tl = trigger_closure(model, narrative, opts)?.checkpoint()?;
            let answers = tl.query(literals)?;
            let keep: BTreeSet<String> = params.iter().cloned().collect();
            let mut out: Vec<ParamRegion> = Vec::new();
            for ans in answers {
                let store = Store::new().assert_all(&ans.residual_cons);
                let mut full = store;
                for (var, value) in &ans.bindings {
                    if let Some(r) = crate::rational::parse_rat(value) {
                        full = full.assert_cons(&LinConstraint::eq(
                            LinExpr::var(var.clone()),
                            LinExpr::constant(r),
                        ));
                    }
                }
                let region_cons = full.project(&keep);
                if Store::new().assert_all(&region_cons).is_unsat() {
                    continue;
                }
                if out.iter().any(|r| r.region_cons == region_cons) {
                    continue;
                }
                out.push(ParamRegion {
                    region: region_cons.iter().map(|c| c.to_string()).collect(),
                    witness: ans.render_text(false),
                    proof: Some(ans.proof),
                    region_cons,
                });
            }
            Ok(out)
        }
    }
}

/// Instantiates a solution at a rational point of its region and re-proves
/// the goal through the plain ground engine. Used by soundness tests and
/// the CLI's verification mode.
pub fn verify_instantiation(
    solution: &AbducedSolution,
    goal: &[Literal],
    point: &BTreeMap<String, Rat>,
) -> Result<bool, AbduceError> {
    let ctx = &solution.context;
    let mut occurrences = Vec::new();
    for occ in &ctx.events {
        if matches!(occ.source, OccSource::Triggered { .. }) {
            continue; // re-derived by the closure
        }
        let time = occ.time.eval(point).ok_or(AbduceError::Unsat)?;
        let mut args = Vec::new();
        for a in &occ.args {
            match a {
                Val::Sym(s) => args.push(crate::model::GroundTerm::Sym(s.clone())),
                Val::Num(e) => {
                    args.push(crate::model::GroundTerm::Num(e.eval(point).ok_or(AbduceError::Unsat)?))
                }
            }
        }
        occurrences.push(crate::model::Occurrence {
            event: crate::model::GroundAtom { name: occ.name.clone(), args },
            time,
        });
    }
    occurrences.sort_by(|a, b| a.time.cmp(&b.time));
    let narrative = Narrative { occurrences, horizon: ctx.horizon.clone() };
    let tl = trigger_closure(&ctx.model, &narrative, ctx.opts)?.checkpoint()?;
    // substitute the sampled values for goal variables fixed by the point
    let goal: Vec<Literal> = goal.iter().map(|l| subst_literal(l, point)).collect();
    Ok(!tl.query(&goal)?.is_empty())
}

fn subst_literal(lit: &Literal, point: &BTreeMap<String, Rat>) -> Literal {
    fn subst_term(t: &Term, point: &BTreeMap<String, Rat>) -> Term {
        match t {
            Term::Var(v) => match point.get(v) {
                Some(r) => Term::Num(r.clone()),
                None => t.clone(),
            },
            Term::Num(_) | Term::Sym(_) => t.clone(),
            Term::Add(a, b) => Term::Add(
                Box::new(subst_term(a, point)),
                Box::new(subst_term(b, point)),
            ),
            Term::Sub(a, b) => Term::Sub(
                Box::new(subst_term(a, point)),
                Box::new(subst_term(b, point)),
            ),
            Term::Mul(a, b) => Term::Mul(
                Box::new(subst_term(a, point)),
                Box::new(subst_term(b, point)),
            ),
            Term::Div(a, b) => Term::Div(
                Box::new(subst_term(a, point)),
                Box::new(subst_term(b, point)),
            ),
            Term::Neg(a) => Term::Neg(Box::new(subst_term(a, point))),
        }
    }
    fn subst_atom(a: &Atom, point: &BTreeMap<String, Rat>) -> Atom {
        Atom {
            name: a.name.clone(),
            args: a.args.iter().map(|t| subst_term(t, point)).collect(),
            span: a.span,
        }
    }
    match lit {
        Literal::Holds { fluent, time, span } => Literal::Holds {
            fluent: subst_atom(fluent, point),
            time: subst_term(time, point),
            span: *span,
        },
        Literal::Happens { event, time, span } => Literal::Happens {
            event: subst_atom(event, point),
            time: subst_term(time, point),
            span: *span,
        },
        Literal::Initially { fluent, span } => {
            Literal::Initially { fluent: subst_atom(fluent, point), span: *span }
        }
        Literal::Constr { rel, lhs, rhs, span } => Literal::Constr {
            rel: *rel,
            lhs: subst_term(lhs, point),
            rhs: subst_term(rhs, point),
            span: *span,
        },
        Literal::Pred { atom, span } => {
            Literal::Pred { atom: subst_atom(atom, point), span: *span }
        }
        Literal::NegPred { atom, span } => {
            Literal::NegPred { atom: subst_atom(atom, point), span: *span }
        }
    }
}
