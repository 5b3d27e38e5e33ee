//! The goal evaluator: a top-down, constraint-producing implementation of
//! the Event Calculus axioms over a (possibly symbolic) set of event
//! occurrences.
//!
//! Axioms, in the open-interval reading:
//!   holdsAt(f, T)  <-  initiallyP(f), not stoppedIn(0, f, T)
//!   holdsAt(f, T)  <-  happens(E, T1), initiates(E, f, T1), T1 < T,
//!                      not stoppedIn(T1, f, T)
//!   stoppedIn(T1, f, T2) <- happens(E, Tc), T1 < Tc < T2,
//!                           (terminates(E, f, Tc) | releases(E, f, Tc))
//!
//! A fluent is false at its initiation instant and still true at its
//! termination instant. Functional fluents take their value from the
//! trajectory of the most recent un-clipped initiation of the governing
//! state fluent; otherwise the latest discrete setting applies (initiallyP,
//! an explicit initiates, or the snapshot taken when a governing fluent is
//! terminated mid-trajectory).
//!
//! Negated conditions ("not stopped", "most recent", "no later setting")
//! are evaluated constructively: candidate regions are projected onto the
//! outer variables and their disjoint complements are asserted into the
//! store. Time points are `LinExpr`s throughout, so the same code serves
//! ground narratives and abduced symbolic occurrences.

use super::cache::{CacheKey, CacheSlot, EvalStats, SharedCache};
use super::checkpoint::Checkpoints;
use super::errors::EngineError;
use super::proof::{rules, Detail, ProofNode};
use crate::clpq::{complement, LinConstraint, LinExpr, Store, SurfaceRel};
use crate::model::{Atom, ClauseKind, DomainModel, FluentKind, GroundTerm, Literal, Term};
use crate::rational::{rat_str, Rat};
use num_traits::Zero;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A resolved argument value: either a symbolic constant or a linear
/// numeric expression (constant when ground).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Val {
    Sym(String),
    Num(LinExpr),
}

impl Val {
    pub fn num_const(r: Rat) -> Val {
        Val::Num(LinExpr::constant(r))
    }

    pub fn as_const(&self) -> Option<Rat> {
        match self {
            Val::Num(e) => e.as_const().cloned(),
            Val::Sym(_) => None,
        }
    }

    pub fn from_ground(g: &GroundTerm) -> Val {
        match g {
            GroundTerm::Num(r) => Val::num_const(r.clone()),
            GroundTerm::Sym(s) => Val::Sym(s.clone()),
        }
    }

    pub fn to_ground(&self) -> Option<GroundTerm> {
        match self {
            Val::Sym(s) => Some(GroundTerm::Sym(s.clone())),
            Val::Num(e) => e.as_const().map(|r| GroundTerm::Num(r.clone())),
        }
    }
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Sym(s) => write!(f, "{s}"),
            Val::Num(e) => write!(f, "{e}"),
        }
    }
}

/// Variable bindings. A variable is either bound here (to a symbol or a
/// numeric expression) or lives as a free variable in the constraint store.
pub type Subst = BTreeMap<String, Val>;

/// An event occurrence whose time may be a symbolic expression.
#[derive(Debug, Clone, PartialEq)]
pub struct SymOccurrence {
    pub name: String,
    pub args: Vec<Val>,
    pub time: LinExpr,
    pub source: OccSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OccSource {
    Narrative,
    Triggered { rule: usize },
    Hypothesis { spec: usize },
}

impl SymOccurrence {
    pub fn render(&self) -> String {
        let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
        if args.is_empty() {
            format!("{}@{}", self.name, self.time)
        } else {
            format!("{}({})@{}", self.name, args.join(", "), self.time)
        }
    }

    fn proof_leaf(&self) -> ProofNode {
        let rule = match self.source {
            OccSource::Narrative => rules::NARRATIVE,
            OccSource::Triggered { .. } => rules::TRIGGERED,
            OccSource::Hypothesis { .. } => rules::HYPOTHESIS,
        };
        let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
        let shown = if args.is_empty() {
            self.name.clone()
        } else {
            format!("{}({})", self.name, args.join(", "))
        };
        ProofNode::leaf(
            format!("happens({shown}, {})", self.time),
            rule,
            Detail::Occurrence { event: shown.clone(), time: self.time.to_string() },
        )
    }
}

/// One way a goal can succeed: symbolic bindings, a satisfiable store, and
/// the proof of this derivation.
#[derive(Debug, Clone)]
pub struct Derivation {
    pub subst: Subst,
    pub store: Store,
    pub proof: ProofNode,
}

pub struct EvalCtx<'a> {
    pub model: &'a DomainModel,
    pub events: Vec<SymOccurrence>,
    pub horizon: LinExpr,
    pub checkpoints: Option<&'a Checkpoints>,
    pub depth_bound: usize,
    pub build_proofs: bool,
    pub cache: Option<SharedCache>,
    pub stats: RefCell<EvalStats>,
    rename_counter: RefCell<u64>,
}

impl<'a> EvalCtx<'a> {
    pub fn new(model: &'a DomainModel, events: Vec<SymOccurrence>, horizon: LinExpr) -> Self {
        EvalCtx {
            model,
            events,
            horizon,
            checkpoints: None,
            depth_bound: 10_000,
            build_proofs: true,
            cache: None,
            stats: RefCell::new(EvalStats::default()),
            rename_counter: RefCell::new(0),
        }
    }

    pub fn fresh_id(&self) -> u64 {
        let mut c = self.rename_counter.borrow_mut();
        *c += 1;
        *c
    }

    pub fn fresh_var(&self, stem: &str) -> String {
        format!("{stem}#{}", self.fresh_id())
    }

    fn bump(&self, depth: usize) -> Result<(), EngineError> {
        self.stats.borrow_mut().expansions += 1;
        if depth > self.depth_bound {
            return Err(EngineError::DepthExceeded { bound: self.depth_bound });
        }
        Ok(())
    }

    fn proof(&self, node: ProofNode) -> ProofNode {
        if self.build_proofs {
            node
        } else {
            ProofNode::leaf("", rules::SKIPPED, Detail::None)
        }
    }
}

fn rename_term(t: &Term, id: u64) -> Term {
    match t {
        Term::Var(v) => Term::Var(format!("{v}#{id}")),
        Term::Num(_) | Term::Sym(_) => t.clone(),
        Term::Add(a, b) => Term::Add(Box::new(rename_term(a, id)), Box::new(rename_term(b, id))),
        Term::Sub(a, b) => Term::Sub(Box::new(rename_term(a, id)), Box::new(rename_term(b, id))),
        Term::Mul(a, b) => Term::Mul(Box::new(rename_term(a, id)), Box::new(rename_term(b, id))),
        Term::Div(a, b) => Term::Div(Box::new(rename_term(a, id)), Box::new(rename_term(b, id))),
        Term::Neg(a) => Term::Neg(Box::new(rename_term(a, id))),
    }
}

fn rename_atom(a: &Atom, id: u64) -> Atom {
    Atom { name: a.name.clone(), args: a.args.iter().map(|t| rename_term(t, id)).collect(), span: a.span }
}

fn rename_literal(l: &Literal, id: u64) -> Literal {
    match l {
        Literal::Holds { fluent, time, span } => {
            Literal::Holds { fluent: rename_atom(fluent, id), time: rename_term(time, id), span: *span }
        }
        Literal::Happens { event, time, span } => {
            Literal::Happens { event: rename_atom(event, id), time: rename_term(time, id), span: *span }
        }
        Literal::Initially { fluent, span } => {
            Literal::Initially { fluent: rename_atom(fluent, id), span: *span }
        }
        Literal::Constr { rel, lhs, rhs, span } => Literal::Constr {
            rel: *rel,
            lhs: rename_term(lhs, id),
            rhs: rename_term(rhs, id),
            span: *span,
        },
        Literal::Pred { atom, span } => Literal::Pred { atom: rename_atom(atom, id), span: *span },
        Literal::NegPred { atom, span } => {
            Literal::NegPred { atom: rename_atom(atom, id), span: *span }
        }
    }
}

/// Converts an arithmetic term to a linear expression. Unbound variables
/// become store variables; symbolically bound variables are a type error.
pub fn linearize(t: &Term, subst: &Subst) -> Result<LinExpr, EngineError> {
    match t {
        Term::Num(r) => Ok(LinExpr::constant(r.clone())),
        Term::Var(v) => match subst.get(v) {
            Some(Val::Num(e)) => Ok(e.clone()),
            Some(Val::Sym(sym)) => Err(EngineError::SymbolInArithmetic(sym.clone())),
            None => Ok(LinExpr::var(v.clone())),
        },
        Term::Sym(s) => Err(EngineError::SymbolInArithmetic(s.clone())),
        Term::Add(a, b) => Ok(linearize(a, subst)? + linearize(b, subst)?),
        Term::Sub(a, b) => Ok(linearize(a, subst)? - linearize(b, subst)?),
        Term::Neg(a) => Ok(-linearize(a, subst)?),
        Term::Mul(a, b) => {
            let la = linearize(a, subst)?;
            let lb = linearize(b, subst)?;
            if let Some(c) = la.as_const() {
                Ok(lb.scale(c))
            } else if let Some(c) = lb.as_const() {
                Ok(la.scale(c))
            } else {
                Err(EngineError::NonLinear(format!("{t}")))
            }
        }
        Term::Div(a, b) => {
            let la = linearize(a, subst)?;
            let lb = linearize(b, subst)?;
            match lb.as_const() {
                Some(c) if !c.is_zero() => {
                    Ok(la.scale(&(Rat::from_integer(1.into()) / c.clone())))
                }
                Some(_) => Err(EngineError::DivisionByZero(format!("{t}"))),
                None => Err(EngineError::NonLinear(format!("{t}"))),
            }
        }
    }
}

/// Resolves a term for output: symbolic binding, or numeric expression.
pub fn resolve_val(t: &Term, subst: &Subst) -> Result<Val, EngineError> {
    match t {
        Term::Sym(s) => Ok(Val::Sym(s.clone())),
        Term::Var(v) => match subst.get(v) {
            Some(val) => Ok(val.clone()),
            None => Ok(Val::Num(LinExpr::var(v.clone()))),
        },
        other => Ok(Val::Num(linearize(other, subst)?)),
    }
}

fn unify_vals(
    a: &Val,
    b: &Val,
    subst: &Subst,
    store: &Store,
) -> Option<(Subst, Store)> {
    match (a, b) {
        (Val::Sym(x), Val::Sym(y)) => (x == y).then(|| (subst.clone(), store.clone())),
        (Val::Num(e1), Val::Num(e2)) => {
            let s2 = store.assert_cons(&LinConstraint::eq(e1.clone(), e2.clone()));
            if s2.is_unsat() {
                None
            } else {
                Some((subst.clone(), s2))
            }
        }
        _ => None,
    }
}

/// Unifies a pattern term against a value. Symbols bind; numeric values
/// bind a fresh variable directly or, once the variable has leaked into the
/// store, become equality constraints. Returns None when the shapes cannot
/// match; the returned store may be UNSAT.
fn unify_val(
    t: &Term,
    v: &Val,
    subst: &Subst,
    store: &Store,
) -> Result<Option<(Subst, Store)>, EngineError> {
    match (t, v) {
        (Term::Var(x), v) => match subst.get(x) {
            Some(bound) => Ok(unify_vals(&bound.clone(), v, subst, store)),
            None => match v {
                Val::Sym(s) => {
                    if store.vars().contains(x) {
                        // already used numerically; a symbol cannot match
                        return Ok(None);
                    }
                    let mut s2 = subst.clone();
                    s2.insert(x.clone(), Val::Sym(s.clone()));
                    Ok(Some((s2, store.clone())))
                }
                Val::Num(e) => {
                    if e.vars().contains(x) || store.vars().contains(x) {
                        let s2 = store
                            .assert_cons(&LinConstraint::eq(LinExpr::var(x.clone()), e.clone()));
                        return Ok(if s2.is_unsat() {
                            None
                        } else {
                            Some((subst.clone(), s2))
                        });
                    }
                    let mut s2 = subst.clone();
                    s2.insert(x.clone(), Val::Num(e.clone()));
                    Ok(Some((s2, store.clone())))
                }
            },
        },
        (Term::Sym(a), Val::Sym(b)) => Ok((a == b).then(|| (subst.clone(), store.clone()))),
        (Term::Sym(_), Val::Num(_)) => Ok(None),
        (_, Val::Sym(_)) => Ok(None),
        (_, Val::Num(e)) => {
            let te = match linearize(t, subst) {
                Ok(te) => te,
                Err(EngineError::SymbolInArithmetic(_)) => return Ok(None),
                Err(err) => return Err(err),
            };
            let s2 = store.assert_cons(&LinConstraint::eq(te, e.clone()));
            Ok(if s2.is_unsat() { None } else { Some((subst.clone(), s2)) })
        }
    }
}

fn unify_args(
    pattern: &[Term],
    values: &[Val],
    subst: &Subst,
    store: &Store,
) -> Result<Option<(Subst, Store)>, EngineError> {
    if pattern.len() != values.len() {
        return Ok(None);
    }
    let mut subst = subst.clone();
    let mut store = store.clone();
    for (t, v) in pattern.iter().zip(values) {
        match unify_val(t, v, &subst, &store)? {
            Some((s2, st2)) => {
                subst = s2;
                store = st2;
            }
            None => return Ok(None),
        }
    }
    Ok(Some((subst, store)))
}

fn resolve_args(args: &[Term], subst: &Subst) -> Result<Vec<Val>, EngineError> {
    args.iter().map(|t| resolve_val(t, subst)).collect()
}

/// Variables that remain meaningful outside a local derivation: everything
/// mentioned by the incoming store plus the given expressions.
fn outer_vars(store: &Store, extra: &[&LinExpr]) -> BTreeSet<String> {
    let mut vars = store.vars();
    for e in extra {
        vars.extend(e.vars());
    }
    vars
}

/// Asserts the disjoint complement of `region` over each branch.
/// An empty region means the condition always applies: no branch survives.
fn forbid_region(
    ctx: &EvalCtx,
    branches: Vec<(Store, Vec<ProofNode>)>,
    region: &[LinConstraint],
    label: &str,
) -> Vec<(Store, Vec<ProofNode>)> {
    let mut out = Vec::new();
    for (store, proofs) in branches {
        for disjunct in complement(region) {
            let s2 = store.assert_all(&disjunct);
            if s2.is_sat() {
                let mut p2 = proofs.clone();
                if ctx.build_proofs {
                    p2.push(ProofNode::constraints(format!("excluded: {label}"), disjunct));
                }
                out.push((s2, p2));
            }
        }
    }
    out
}

/// An initiation/activation candidate for a fluent: the instant it was
/// initiated, with the conditions and evidence accumulated so far.
#[derive(Debug, Clone)]
pub struct InitCand {
    pub time: LinExpr,
    /// false for initiallyP: the fluent already holds at its start instant
    pub strict_start: bool,
    pub subst: Subst,
    pub store: Store,
    pub proofs: Vec<ProofNode>,
    pub rule_idx: Option<usize>,
}

pub struct Evaluator;

impl Evaluator {
    /// Conjunction evaluation: literals left to right, branching on each.
    pub fn eval_body(
        ctx: &EvalCtx,
        body: &[Literal],
        subst: &Subst,
        store: &Store,
        depth: usize,
    ) -> Result<Vec<Derivation>, EngineError> {
        let mut branches = vec![Derivation {
            subst: subst.clone(),
            store: store.clone(),
            proof: ProofNode::node("", rules::QUERY, Vec::new()),
        }];
        let mut proofs_acc: Vec<Vec<ProofNode>> = vec![Vec::new()];
        for lit in body {
            let mut next = Vec::new();
            let mut next_proofs = Vec::new();
            for (branch, acc) in branches.iter().zip(&proofs_acc) {
                let results = Self::eval_literal(ctx, lit, &branch.subst, &branch.store, depth)?;
                for d in results {
                    let mut acc2 = acc.clone();
                    acc2.push(d.proof);
                    next.push(Derivation { subst: d.subst, store: d.store, proof: ProofNode::node("", rules::QUERY, Vec::new()) });
                    next_proofs.push(acc2);
                }
            }
            branches = next;
            proofs_acc = next_proofs;
        }
        Ok(branches
            .into_iter()
            .zip(proofs_acc)
            .map(|(mut d, proofs)| {
                d.proof = ctx.proof(ProofNode::node("conjunction", rules::QUERY, proofs));
                d
            })
            .collect())
    }

    pub fn eval_literal(
        ctx: &EvalCtx,
        lit: &Literal,
        subst: &Subst,
        store: &Store,
        depth: usize,
    ) -> Result<Vec<Derivation>, EngineError> {
        ctx.bump(depth)?;
        if store.is_unsat() {
            return Ok(Vec::new());
        }
        match lit {
            Literal::Constr { rel, lhs, rhs, .. } => {
                let le = linearize(lhs, subst)?;
                let re = linearize(rhs, subst)?;
                let mut out = Vec::new();
                let cons: Vec<LinConstraint> = match rel {
                    SurfaceRel::Ne => vec![
                        LinConstraint::lt(le.clone(), re.clone()),
                        LinConstraint::lt(re.clone(), le.clone()),
                    ],
                    other => vec![LinConstraint::cmp(le.clone(), *other, re.clone())],
                };
                for c in cons {
                    let s2 = store.assert_cons(&c);
                    if s2.is_sat() {
                        out.push(Derivation {
                            subst: subst.clone(),
                            store: s2,
                            proof: ctx.proof(ProofNode::constraints(lit.to_string(), vec![c])),
                        });
                    }
                }
                Ok(out)
            }
            Literal::Happens { event, time, .. } => {
                let mut out = Vec::new();
                for occ in &ctx.events {
                    if occ.name != event.name {
                        continue;
                    }
                    let Some((s2, st2)) = unify_args(&event.args, &occ.args, subst, store)? else {
                        continue;
                    };
                    let Some((s3, st3)) =
                        unify_val(time, &Val::Num(occ.time.clone()), &s2, &st2)?
                    else {
                        continue;
                    };
                    if st3.is_sat() {
                        out.push(Derivation {
                            subst: s3,
                            store: st3,
                            proof: ctx.proof(occ.proof_leaf()),
                        });
                    }
                }
                Ok(out)
            }
            Literal::Initially { fluent, .. } => {
                let mut out = Vec::new();
                for fact in ctx.model.initially_facts() {
                    if fact.name != fluent.name {
                        continue;
                    }
                    let vals = resolve_args(&fact.args, &Subst::new())?;
                    if let Some((s2, st2)) = unify_args(&fluent.args, &vals, subst, store)? {
                        if st2.is_sat() {
                            let ground = fact.to_ground().expect("initiallyP facts are ground");
                            out.push(Derivation {
                                subst: s2,
                                store: st2,
                                proof: ctx.proof(ProofNode::initially(&ground)),
                            });
                        }
                    }
                }
                Ok(out)
            }
            Literal::Holds { fluent, time, .. } => {
                let tau = linearize(time, subst)?;
                Self::eval_holds(ctx, fluent, &tau, subst, store, depth)
            }
            Literal::Pred { atom, .. } => Self::eval_user_pred(ctx, atom, subst, store, depth),
            Literal::NegPred { atom, .. } => {
                let positive =
                    Self::eval_user_pred(ctx, atom, subst, store, depth + 1)?;
                if positive.is_empty() {
                    return Ok(vec![Derivation {
                        subst: subst.clone(),
                        store: store.clone(),
                        proof: ctx.proof(ProofNode::leaf(
                            format!("not {atom}"),
                            rules::NAF,
                            Detail::None,
                        )),
                    }]);
                }
                // constructive negation: exclude each success region
                let outer = outer_vars(store, &[]);
                let mut branches = vec![(store.clone(), Vec::new())];
                for d in positive {
                    let region = d.store.project(&outer);
                    branches = forbid_region(ctx, branches, &region, &format!("not {atom}"));
                    if branches.is_empty() {
                        break;
                    }
                }
                Ok(branches
                    .into_iter()
                    .map(|(st, proofs)| Derivation {
                        subst: subst.clone(),
                        store: st,
                        proof: ctx.proof(ProofNode::node(
                            format!("not {atom}"),
                            rules::NAF,
                            proofs,
                        )),
                    })
                    .collect())
            }
        }
    }

    fn eval_user_pred(
        ctx: &EvalCtx,
        atom: &Atom,
        subst: &Subst,
        store: &Store,
        depth: usize,
    ) -> Result<Vec<Derivation>, EngineError> {
        // ground-instance tabling
        let key = Self::ground_key(atom, subst, store, "pred");
        if let (Some(cache), Some(key)) = (&ctx.cache, &key) {
            if let Some(slot) = cache.borrow_mut().lookup(key) {
                return Ok(match slot {
                    CacheSlot::Failure => Vec::new(),
                    CacheSlot::Success(proof) => vec![Derivation {
                        subst: subst.clone(),
                        store: store.clone(),
                        proof: (*proof).clone(),
                    }],
                    CacheSlot::Values(_) => Vec::new(),
                });
            }
        }

        let clauses = ctx.model.user_clauses(&atom.name, atom.arity());
        let mut out = Vec::new();
        for (idx, head, body) in clauses {
            let id = ctx.fresh_id();
            let head = rename_atom(head, id);
            let body: Vec<Literal> = body.iter().map(|l| rename_literal(l, id)).collect();
            let head_vals = resolve_args(&head.args, subst)?;
            let Some((s2, st2)) = unify_args(&atom.args, &head_vals, subst, store)? else {
                continue;
            };
            if st2.is_unsat() {
                continue;
            }
            for d in Self::eval_body(ctx, &body, &s2, &st2, depth + 1)? {
                let proof = ctx.proof(ProofNode {
                    conclusion: atom.to_string(),
                    rule: rules::CLAUSE.to_string(),
                    detail: Detail::Clause { index: idx },
                    children: vec![d.proof],
                    constraints: Vec::new(),
                });
                out.push(Derivation { subst: d.subst, store: d.store, proof });
            }
        }

        if let (Some(cache), Some(key)) = (&ctx.cache, &key) {
            let slot = match out.first() {
                None => CacheSlot::Failure,
                Some(d) => CacheSlot::Success(std::rc::Rc::new(d.proof.clone())),
            };
            cache.borrow_mut().store(key.clone(), slot);
        }
        Ok(out)
    }

    /// Cache key for a goal whose arguments are all ground under the current
    /// bindings (and hence store-independent).
    fn ground_key(atom: &Atom, subst: &Subst, _store: &Store, tag: &str) -> Option<CacheKey> {
        let mut parts = Vec::new();
        for t in &atom.args {
            let v = resolve_val(t, subst).ok()?;
            match v {
                Val::Sym(s) => parts.push(s),
                Val::Num(e) => parts.push(rat_str(e.as_const()?)),
            }
        }
        Some(CacheKey(format!("{tag}:{}({})", atom.name, parts.join(","))))
    }

    fn eval_holds(
        ctx: &EvalCtx,
        fluent: &Atom,
        tau: &LinExpr,
        subst: &Subst,
        store: &Store,
        depth: usize,
    ) -> Result<Vec<Derivation>, EngineError> {
        let Some(kind) = ctx.model.fluent_kind(&fluent.name) else {
            return Err(EngineError::UnknownName(fluent.name.clone()));
        };
        // evaluation is defined on [0, horizon]
        let store = store
            .assert_cons(&LinConstraint::le(LinExpr::zero(), tau.clone()))
            .assert_cons(&LinConstraint::le(tau.clone(), ctx.horizon.clone()));
        if store.is_unsat() {
            return Ok(Vec::new());
        }

        // checkpointed fast path for ground-time queries; a functional
        // fluent's value argument is unified after the segment lookup
        if let (Some(cks), Some(t)) = (ctx.checkpoints, tau.as_const()) {
            let eligible = match kind {
                FluentKind::Functional => true,
                FluentKind::Boolean => fluent.args.iter().all(|a| {
                    resolve_val(a, subst).map_or(false, |v| {
                        v.as_const().is_some() || matches!(v, Val::Sym(_))
                    })
                }),
            };
            if eligible {
                return Self::holds_from_checkpoint(ctx, cks, fluent, t, subst, &store);
            }
        }

        match kind {
            FluentKind::Boolean => Self::holds_bool(ctx, fluent, tau, subst, &store, depth),
            FluentKind::Functional => Self::holds_func(ctx, fluent, tau, subst, &store, depth),
        }
    }

    fn holds_from_checkpoint(
        ctx: &EvalCtx,
        cks: &Checkpoints,
        fluent: &Atom,
        t: &Rat,
        subst: &Subst,
        store: &Store,
    ) -> Result<Vec<Derivation>, EngineError> {
        ctx.stats.borrow_mut().checkpoint_reads += 1;
        let kind = ctx.model.fluent_kind(&fluent.name).expect("checked");
        match kind {
            FluentKind::Boolean => {
                let key = fluent.to_ground().map(|g| g.to_string()).unwrap_or_else(|| fluent.name.clone());
                if cks.holds_bool(&key, t) {
                    let (b, _) = cks.boundary_for(t);
                    Ok(vec![Derivation {
                        subst: subst.clone(),
                        store: store.clone(),
                        proof: ctx.proof(ProofNode::leaf(
                            format!("holdsAt({fluent}, {})", rat_str(t)),
                            rules::CHECKPOINT,
                            Detail::Checkpoint { boundary: rat_str(&b) },
                        )),
                    }])
                } else {
                    Ok(Vec::new())
                }
            }
            FluentKind::Functional => {
                let values = cks.value_at(&fluent.name, t);
                let mut out = Vec::new();
                for v in values {
                    let Some((s2, st2)) =
                        unify_val(&fluent.args[0], &Val::num_const(v.clone()), subst, store)?
                    else {
                        continue;
                    };
                    if st2.is_sat() {
                        let (b, _) = cks.boundary_for(t);
                        out.push(Derivation {
                            subst: s2,
                            store: st2,
                            proof: ctx.proof(ProofNode::leaf(
                                format!("holdsAt({}({}), {})", fluent.name, rat_str(&v), rat_str(t)),
                                rules::CHECKPOINT,
                                Detail::Checkpoint { boundary: rat_str(&b) },
                            )),
                        });
                    }
                }
                Ok(out)
            }
        }
    }

    /// Initiation candidates of a (boolean) fluent pattern: initiallyP plus
    /// every occurrence matched by an initiates rule whose body holds at the
    /// occurrence time.
    fn initiation_candidates(
        ctx: &EvalCtx,
        fluent: &Atom,
        subst: &Subst,
        store: &Store,
        depth: usize,
    ) -> Result<Vec<InitCand>, EngineError> {
        let mut out = Vec::new();
        for fact in ctx.model.initially_facts() {
            if fact.name != fluent.name {
                continue;
            }
            let vals = resolve_args(&fact.args, &Subst::new())?;
            if let Some((s2, st2)) = unify_args(&fluent.args, &vals, subst, store)? {
                if st2.is_sat() {
                    let ground = fact.to_ground().expect("ground initiallyP");
                    out.push(InitCand {
                        time: LinExpr::zero(),
                        strict_start: false,
                        subst: s2,
                        store: st2,
                        proofs: vec![ProofNode::initially(&ground)],
                        rule_idx: None,
                    });
                }
            }
        }
        for occ in &ctx.events {
            for (idx, clause) in ctx.model.clauses.iter().enumerate() {
                let ClauseKind::Initiates { event, fluent: rf, time, body } = &clause.kind else {
                    continue;
                };
                if event.name != occ.name || rf.name != fluent.name {
                    continue;
                }
                let id = ctx.fresh_id();
                let event = rename_atom(event, id);
                let rf = rename_atom(rf, id);
                let time = rename_term(time, id);
                let body: Vec<Literal> = body.iter().map(|l| rename_literal(l, id)).collect();
                let Some((s1, st1)) = unify_args(&event.args, &occ.args, subst, store)? else {
                    continue;
                };
                let Some((s2, st2)) = unify_val(&time, &Val::Num(occ.time.clone()), &s1, &st1)?
                else {
                    continue;
                };
                if st2.is_unsat() {
                    continue;
                }
                for d in Self::eval_body(ctx, &body, &s2, &st2, depth + 1)? {
                    let rf_vals = resolve_args(&rf.args, &d.subst)?;
                    let Some((s3, st3)) = unify_args(&fluent.args, &rf_vals, &d.subst, &d.store)?
                    else {
                        continue;
                    };
                    if st3.is_unsat() {
                        continue;
                    }
                    let mut proofs = vec![occ.proof_leaf()];
                    if ctx.build_proofs {
                        proofs.push(ProofNode {
                            conclusion: format!("initiates({}, {fluent})", occ.name),
                            rule: rules::CLAUSE.to_string(),
                            detail: Detail::Clause { index: idx },
                            children: vec![d.proof],
                            constraints: Vec::new(),
                        });
                    }
                    out.push(InitCand {
                        time: occ.time.clone(),
                        strict_start: true,
                        subst: s3,
                        store: st3,
                        proofs,
                        rule_idx: Some(idx),
                    });
                }
            }
        }
        Ok(out)
    }

    /// Regions (over outer variables) where some clipper of `fluent` fires
    /// strictly inside `(lo, tau)`. `kinds` selects the effect-rule kinds
    /// that count as clippers.
    fn clip_regions(
        ctx: &EvalCtx,
        fluent: &Atom,
        lo: &LinExpr,
        tau: &LinExpr,
        subst: &Subst,
        store: &Store,
        depth: usize,
        include_initiates: bool,
    ) -> Result<Vec<Vec<LinConstraint>>, EngineError> {
        let outer = outer_vars(store, &[lo, tau]);
        let mut regions = Vec::new();
        for occ in &ctx.events {
            for clause in ctx.model.clauses.iter() {
                let (event, rf, time, body) = match &clause.kind {
                    ClauseKind::Terminates { event, fluent, time, body } if !include_initiates => {
                        (event, fluent, time, body)
                    }
                    ClauseKind::Releases { event, fluent, time, body } if !include_initiates => {
                        (event, fluent, time, body)
                    }
                    ClauseKind::Initiates { event, fluent, time, body } if include_initiates => {
                        (event, fluent, time, body)
                    }
                    _ => continue,
                };
                if event.name != occ.name || rf.name != fluent.name {
                    continue;
                }
                let id = ctx.fresh_id();
                let event = rename_atom(event, id);
                let rf = rename_atom(rf, id);
                let time = rename_term(time, id);
                let body: Vec<Literal> = body.iter().map(|l| rename_literal(l, id)).collect();

                // in-window condition first so impossible orderings prune early
                let windowed = store
                    .assert_cons(&LinConstraint::lt(lo.clone(), occ.time.clone()))
                    .assert_cons(&LinConstraint::lt(occ.time.clone(), tau.clone()));
                if windowed.is_unsat() {
                    continue;
                }
                let Some((s1, st1)) = unify_args(&event.args, &occ.args, subst, &windowed)? else {
                    continue;
                };
                let Some((s2, st2)) = unify_val(&time, &Val::Num(occ.time.clone()), &s1, &st1)?
                else {
                    continue;
                };
                if st2.is_unsat() {
                    continue;
                }
                let rf_vals = resolve_args(&rf.args, &s2)?;
                let Some((s3, st3)) = unify_args(&fluent.args, &rf_vals, &s2, &st2)? else {
                    continue;
                };
                if st3.is_unsat() {
                    continue;
                }
                for d in Self::eval_body(ctx, &body, &s3, &st3, depth + 1)? {
                    regions.push(d.store.project(&outer));
                }
            }
        }
        Ok(regions)
    }

    fn holds_bool(
        ctx: &EvalCtx,
        fluent: &Atom,
        tau: &LinExpr,
        subst: &Subst,
        store: &Store,
        depth: usize,
    ) -> Result<Vec<Derivation>, EngineError> {
        let key = Self::ground_key(fluent, subst, store, "holds").and_then(|k| {
            tau.as_const().map(|t| CacheKey(format!("{}@{}", k.0, rat_str(t))))
        });
        if let (Some(cache), Some(key)) = (&ctx.cache, &key) {
            if let Some(slot) = cache.borrow_mut().lookup(key) {
                return Ok(match slot {
                    CacheSlot::Failure => Vec::new(),
                    CacheSlot::Success(proof) => vec![Derivation {
                        subst: subst.clone(),
                        store: store.clone(),
                        proof: (*proof).clone(),
                    }],
                    CacheSlot::Values(_) => Vec::new(),
                });
            }
        }

        let mut out = Vec::new();
        for cand in Self::initiation_candidates(ctx, fluent, subst, store, depth)? {
            let started = if cand.strict_start {
                cand.store.assert_cons(&LinConstraint::lt(cand.time.clone(), tau.clone()))
            } else {
                cand.store.assert_cons(&LinConstraint::le(cand.time.clone(), tau.clone()))
            };
            if started.is_unsat() {
                continue;
            }
            let clips =
                Self::clip_regions(ctx, fluent, &cand.time, tau, &cand.subst, &started, depth, false)?;
            let mut branches = vec![(started, Vec::new())];
            for region in &clips {
                branches = forbid_region(ctx, branches, region, "clipped in window");
                if branches.is_empty() {
                    break;
                }
            }
            for (st, extra_proofs) in branches {
                let rule = if cand.rule_idx.is_some() {
                    rules::HOLDS_INITIATED
                } else {
                    rules::HOLDS_INITIALLY
                };
                let mut children = cand.proofs.clone();
                children.extend(extra_proofs);
                out.push(Derivation {
                    subst: cand.subst.clone(),
                    store: st,
                    proof: ctx.proof(ProofNode::node(
                        format!("holdsAt({fluent}, {tau})"),
                        rule,
                        children,
                    )),
                });
            }
        }

        if let (Some(cache), Some(key)) = (&ctx.cache, &key) {
            let slot = match out.first() {
                None => CacheSlot::Failure,
                Some(d) => CacheSlot::Success(std::rc::Rc::new(d.proof.clone())),
            };
            cache.borrow_mut().store(key.clone(), slot);
        }
        Ok(out)
    }

    /// Activation spans of a governing state fluent: an initiation, not
    /// clipped and not re-initiated before `tau` (most recent wins).
    fn activations(
        ctx: &EvalCtx,
        state: &Atom,
        tau: &LinExpr,
        subst: &Subst,
        store: &Store,
        depth: usize,
    ) -> Result<Vec<InitCand>, EngineError> {
        let cands = Self::initiation_candidates(ctx, state, subst, store, depth)?;
        let mut out = Vec::new();
        for cand in &cands {
            let started =
                cand.store.assert_cons(&LinConstraint::lt(cand.time.clone(), tau.clone()));
            if started.is_unsat() {
                continue;
            }
            let mut branches = vec![(started.clone(), cand.proofs.clone())];
            let clips =
                Self::clip_regions(ctx, state, &cand.time, tau, &cand.subst, &started, depth, false)?;
            for region in &clips {
                branches = forbid_region(ctx, branches, region, "state clipped");
                if branches.is_empty() {
                    break;
                }
            }
            // most recent initiation: no other initiation strictly inside
            let reinits =
                Self::clip_regions(ctx, state, &cand.time, tau, &cand.subst, &started, depth, true)?;
            for region in &reinits {
                branches = forbid_region(ctx, branches, region, "later re-initiation");
                if branches.is_empty() {
                    break;
                }
            }
            for (st, proofs) in branches {
                out.push(InitCand {
                    time: cand.time.clone(),
                    strict_start: true,
                    subst: cand.subst.clone(),
                    store: st,
                    proofs,
                    rule_idx: cand.rule_idx,
                });
            }
        }
        Ok(out)
    }

    /// Evaluates a trajectory body with `t1 := start`, `t2 := tau`, returning
    /// derivations paired with the resolved value of the trajectory fluent's
    /// value argument.
    #[allow(clippy::too_many_arguments)]
    fn trajectory_value(
        ctx: &EvalCtx,
        traj_idx: usize,
        state_inst: &Atom,
        start: &LinExpr,
        tau: &LinExpr,
        subst: &Subst,
        store: &Store,
        depth: usize,
    ) -> Result<Vec<(Val, Derivation, usize)>, EngineError> {
        let ClauseKind::Trajectory { state, t1, fluent, t2, body } =
            &ctx.model.clauses[traj_idx].kind
        else {
            return Ok(Vec::new());
        };
        let id = ctx.fresh_id();
        let state_r = rename_atom(state, id);
        let t1 = rename_term(t1, id);
        let fluent_r = rename_atom(fluent, id);
        let t2 = rename_term(t2, id);
        let body: Vec<Literal> = body.iter().map(|l| rename_literal(l, id)).collect();

        let Some((s1, st1)) = unify_args(
            &state_r.args,
            &resolve_args(&state_inst.args, subst)?,
            subst,
            store,
        )?
        else {
            return Ok(Vec::new());
        };
        let Some((s2, st2)) = unify_val(&t1, &Val::Num(start.clone()), &s1, &st1)? else {
            return Ok(Vec::new());
        };
        let Some((s3, st3)) = unify_val(&t2, &Val::Num(tau.clone()), &s2, &st2)? else {
            return Ok(Vec::new());
        };
        if st3.is_unsat() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for d in Self::eval_body(ctx, &body, &s3, &st3, depth + 1)? {
            let value = resolve_val(&fluent_r.args[0], &d.subst)?;
            out.push((value, d, traj_idx));
        }
        Ok(out)
    }

    /// Regions where some trajectory of `fname` is active at `tau`
    /// (used to release the inertial value).
    fn trajectory_active_regions(
        ctx: &EvalCtx,
        fname: &str,
        tau: &LinExpr,
        subst: &Subst,
        store: &Store,
        depth: usize,
    ) -> Result<Vec<Vec<LinConstraint>>, EngineError> {
        let outer = outer_vars(store, &[tau]);
        let mut regions = Vec::new();
        for (idx, clause) in ctx.model.clauses.iter().enumerate() {
            let ClauseKind::Trajectory { state, fluent, .. } = &clause.kind else { continue };
            if fluent.name != fname {
                continue;
            }
            let _ = idx;
            let state_pat = Atom::new(state.name.clone(), Vec::new());
            // parameterized governing fluents keep their declared args
            let state_pat =
                if state.args.is_empty() { state_pat } else { rename_atom(state, ctx.fresh_id()) };
            for act in Self::activations(ctx, &state_pat, tau, subst, store, depth)? {
                regions.push(act.store.project(&outer));
            }
        }
        Ok(regions)
    }

    /// Value derivations for a functional fluent: active trajectories first,
    /// then the inertial regime (latest discrete setting, not superseded, no
    /// release in between, no active trajectory).
    fn holds_func(
        ctx: &EvalCtx,
        fluent: &Atom,
        tau: &LinExpr,
        subst: &Subst,
        store: &Store,
        depth: usize,
    ) -> Result<Vec<Derivation>, EngineError> {
        if fluent.args.len() != 1 {
            return Err(EngineError::Unsupported(format!(
                "functional fluent {} takes exactly one value argument",
                fluent.name
            )));
        }

        // ground-value tabling: cache the value derivations at (fluent, time)
        let cache_key = tau
            .as_const()
            .map(|t| CacheKey(format!("value:{}@{}", fluent.name, rat_str(t))));
        if let (Some(cache), Some(key)) = (&ctx.cache, &cache_key) {
            let hit = cache.borrow_mut().lookup(key);
            if let Some(slot) = hit {
                return match slot {
                    CacheSlot::Failure => Ok(Vec::new()),
                    CacheSlot::Values(vals) => {
                        let mut out = Vec::new();
                        for (v, proof) in vals.iter() {
                            if let Some((s2, st2)) =
                                unify_val(&fluent.args[0], &Val::num_const(v.clone()), subst, store)?
                            {
                                if st2.is_sat() {
                                    out.push(Derivation {
                                        subst: s2,
                                        store: st2,
                                        proof: (**proof).clone(),
                                    });
                                }
                            }
                        }
                        Ok(out)
                    }
                    CacheSlot::Success(_) => Ok(Vec::new()),
                };
            }
        }

        let derivs = Self::value_derivations(ctx, fluent, tau, subst, store, depth)?;

        if let (Some(cache), Some(key)) = (&ctx.cache, &cache_key) {
            // only cache when every derived value is a constant (no symbolic
            // dependencies leak through a ground query on a ground timeline)
            let mut vals = Vec::new();
            let mut cacheable = true;
            for (v, d) in &derivs {
                match v.as_const() {
                    Some(c) => vals.push((c, std::rc::Rc::new(d.proof.clone()))),
                    None => {
                        cacheable = false;
                        break;
                    }
                }
            }
            if cacheable {
                let slot = if vals.is_empty() { CacheSlot::Failure } else { CacheSlot::Values(vals) };
                cache.borrow_mut().store(key.clone(), slot);
            }
        }

        let mut out = Vec::new();
        for (value, d) in derivs {
            if let Some((s2, st2)) = unify_val(&fluent.args[0], &value, &d.subst, &d.store)? {
                if st2.is_sat() {
                    out.push(Derivation { subst: s2, store: st2, proof: d.proof });
                }
            }
        }
        Ok(out)
    }

    /// All (value, derivation) pairs for a functional fluent at `tau`,
    /// before unification with the queried value pattern.
    pub fn value_derivations(
        ctx: &EvalCtx,
        fluent: &Atom,
        tau: &LinExpr,
        subst: &Subst,
        store: &Store,
        depth: usize,
    ) -> Result<Vec<(Val, Derivation)>, EngineError> {
        let fname = &fluent.name;
        let mut out: Vec<(Val, Derivation)> = Vec::new();

        // trajectory derivations
        for (idx, clause) in ctx.model.clauses.iter().enumerate() {
            let ClauseKind::Trajectory { state, fluent: tf, .. } = &clause.kind else { continue };
            if &tf.name != fname {
                continue;
            }
            let state_pat =
                if state.args.is_empty() { Atom::new(state.name.clone(), Vec::new()) } else { rename_atom(state, ctx.fresh_id()) };
            for act in Self::activations(ctx, &state_pat, tau, subst, store, depth)? {
                for (value, d, tidx) in Self::trajectory_value(
                    ctx, idx, &state_pat, &act.time, tau, &act.subst, &act.store, depth,
                )? {
                    let mut children = act.proofs.clone();
                    if ctx.build_proofs {
                        children.push(ProofNode {
                            conclusion: format!("trajectory of {fname} from {}", act.time),
                            rule: rules::CLAUSE.to_string(),
                            detail: Detail::Clause { index: tidx },
                            children: vec![d.proof],
                            constraints: Vec::new(),
                        });
                    }
                    let proof = ctx.proof(ProofNode::node(
                        format!("holdsAt({fname}({value}), {tau})"),
                        rules::VALUE_TRAJECTORY,
                        children,
                    ));
                    out.push((value, Derivation { subst: d.subst, store: d.store, proof }));
                }
            }
        }

        // inertial derivations: discrete settings
        let settings = Self::setting_candidates(ctx, fluent, tau, subst, store, depth)?;
        for (i, s) in settings.iter().enumerate() {
            let _ = i;
            let applied = if s.strict_start {
                s.store.assert_cons(&LinConstraint::lt(s.time.clone(), tau.clone()))
            } else {
                s.store.assert_cons(&LinConstraint::le(s.time.clone(), tau.clone()))
            };
            if applied.is_unsat() {
                continue;
            }
            let mut branches = vec![(applied.clone(), s.proofs.clone())];
            // no later setting strictly inside (s.time, tau)
            let outer = outer_vars(&applied, &[tau, &s.time]);
            for other in &settings {
                let cond = other
                    .store
                    .assert_cons(&LinConstraint::lt(s.time.clone(), other.time.clone()))
                    .assert_cons(&LinConstraint::lt(other.time.clone(), tau.clone()));
                if cond.is_unsat() {
                    continue;
                }
                let region = cond.project(&outer);
                branches = forbid_region(ctx, branches, &region, "later setting");
                if branches.is_empty() {
                    break;
                }
            }
            // no release of f strictly inside
            if !branches.is_empty() {
                let fl_pat = Atom::new(fname.clone(), vec![Term::Var(ctx.fresh_var("_rel"))]);
                let rel_regions = Self::clip_regions(
                    ctx, &fl_pat, &s.time, tau, &s.subst, &applied, depth, false,
                )?;
                for region in &rel_regions {
                    branches = forbid_region(ctx, branches, region, "released");
                    if branches.is_empty() {
                        break;
                    }
                }
            }
            // released from inertia while a trajectory is active
            if !branches.is_empty() {
                let active =
                    Self::trajectory_active_regions(ctx, fname, tau, &s.subst, &applied, depth)?;
                for region in &active {
                    branches = forbid_region(ctx, branches, region, "trajectory active");
                    if branches.is_empty() {
                        break;
                    }
                }
            }
            for (st, proofs) in branches {
                let rule = if s.is_snapshot { rules::VALUE_SNAPSHOT } else { rules::VALUE_INERTIA };
                let proof = ctx.proof(ProofNode::node(
                    format!("holdsAt({fname}({}), {tau})", s.value),
                    rule,
                    proofs,
                ));
                out.push((
                    s.value.clone(),
                    Derivation { subst: s.subst.clone(), store: st, proof },
                ));
            }
        }
        Ok(out)
    }

    /// Discrete settings of a functional fluent: initiallyP facts, explicit
    /// initiates rules, and snapshots taken when a governing fluent is
    /// terminated during an active trajectory.
    fn setting_candidates(
        ctx: &EvalCtx,
        fluent: &Atom,
        tau: &LinExpr,
        subst: &Subst,
        store: &Store,
        depth: usize,
    ) -> Result<Vec<SettingCand>, EngineError> {
        let fname = &fluent.name;
        let mut out = Vec::new();

        for fact in ctx.model.initially_facts() {
            if &fact.name != fname {
                continue;
            }
            let vals = resolve_args(&fact.args, &Subst::new())?;
            let ground = fact.to_ground().expect("ground initiallyP");
            out.push(SettingCand {
                time: LinExpr::zero(),
                strict_start: false,
                value: vals[0].clone(),
                subst: subst.clone(),
                store: store.clone(),
                proofs: vec![ProofNode::initially(&ground)],
                is_snapshot: false,
            });
        }

        // explicit initiates of the functional fluent
        let set_var = ctx.fresh_var("_set");
        let var_pat = Atom::new(fname.clone(), vec![Term::Var(set_var.clone())]);
        for cand in Self::initiation_candidates(ctx, &var_pat, subst, store, depth)? {
            if cand.rule_idx.is_none() {
                // initiallyP facts are covered above
                continue;
            }
            let value = match cand.subst.get(&set_var) {
                Some(v) => v.clone(),
                None => Val::Num(LinExpr::var(set_var.clone())),
            };
            // resolve through the store when pinned
            let value = match &value {
                Val::Num(e) => match cand.store.fixed(e) {
                    Some(c) => Val::num_const(c),
                    None => value.clone(),
                },
                _ => value.clone(),
            };
            out.push(SettingCand {
                time: cand.time.clone(),
                strict_start: true,
                value,
                subst: cand.subst,
                store: cand.store,
                proofs: cand.proofs,
                is_snapshot: false,
            });
        }

        // snapshots: a terminates rule fires on the governing fluent of a
        // trajectory while that trajectory is active
        for (tidx, clause) in ctx.model.clauses.iter().enumerate() {
            let ClauseKind::Trajectory { state, fluent: tf, .. } = &clause.kind else { continue };
            if &tf.name != fname {
                continue;
            }
            let state_pat =
                if state.args.is_empty() { Atom::new(state.name.clone(), Vec::new()) } else { rename_atom(state, ctx.fresh_id()) };
            for occ in &ctx.events {
                for (term_idx, term_clause) in ctx.model.clauses.iter().enumerate() {
                    let ClauseKind::Terminates { event, fluent: rf, time, body } =
                        &term_clause.kind
                    else {
                        continue;
                    };
                    if event.name != occ.name || rf.name != state_pat.name {
                        continue;
                    }
                    let id = ctx.fresh_id();
                    let event = rename_atom(event, id);
                    let time = rename_term(time, id);
                    let body: Vec<Literal> = body.iter().map(|l| rename_literal(l, id)).collect();
                    // the snapshot is taken strictly before tau
                    let windowed =
                        store.assert_cons(&LinConstraint::lt(occ.time.clone(), tau.clone()));
                    if windowed.is_unsat() {
                        continue;
                    }
                    let Some((s1, st1)) = unify_args(&event.args, &occ.args, subst, &windowed)?
                    else {
                        continue;
                    };
                    let Some((s2, st2)) = unify_val(&time, &Val::Num(occ.time.clone()), &s1, &st1)?
                    else {
                        continue;
                    };
                    if st2.is_unsat() {
                        continue;
                    }
                    for d in Self::eval_body(ctx, &body, &s2, &st2, depth + 1)? {
                        // the governing fluent must be active at the
                        // termination instant, with a value to freeze
                        for act in
                            Self::activations(ctx, &state_pat, &occ.time, &d.subst, &d.store, depth)?
                        {
                            for (value, vd, _) in Self::trajectory_value(
                                ctx,
                                tidx,
                                &state_pat,
                                &act.time,
                                &occ.time,
                                &act.subst,
                                &act.store,
                                depth,
                            )? {
                                let mut proofs = vec![occ.proof_leaf()];
                                if ctx.build_proofs {
                                    proofs.push(ProofNode {
                                        conclusion: format!(
                                            "snapshot of {fname} at {}",
                                            occ.time
                                        ),
                                        rule: rules::CLAUSE.to_string(),
                                        detail: Detail::Clause { index: term_idx },
                                        children: vec![d.proof.clone(), vd.proof],
                                        constraints: Vec::new(),
                                    });
                                }
                                out.push(SettingCand {
                                    time: occ.time.clone(),
                                    strict_start: true,
                                    value,
                                    subst: vd.subst,
                                    store: vd.store,
                                    proofs,
                                    is_snapshot: true,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
struct SettingCand {
    time: LinExpr,
    strict_start: bool,
    value: Val,
    subst: Subst,
    store: Store,
    proofs: Vec<ProofNode>,
    is_snapshot: bool,
}

// renaming and unification entry points for the closure and checkpoint sweeps

pub fn rename_atom_public(a: &Atom, id: u64) -> Atom {
    rename_atom(a, id)
}

pub fn rename_term_public(t: &Term, id: u64) -> Term {
    rename_term(t, id)
}

pub fn rename_literal_public(l: &Literal, id: u64) -> Literal {
    rename_literal(l, id)
}

pub fn unify_public(
    t: &Term,
    v: &Val,
    subst: &Subst,
    store: &Store,
) -> Result<Option<(Subst, Store)>, EngineError> {
    unify_val(t, v, subst, store)
}
