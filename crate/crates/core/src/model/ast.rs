//! In-memory representation of parsed domain models and narratives.

use crate::clpq::SurfaceRel;
use crate::rational::{rat_str, Rat};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

/// Arithmetic terms. Products and quotients are kept symbolic because
/// variables like a flow rate only become constants once bound by the body;
/// linearity is enforced at validation and evaluation time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Num(Rat),
    Sym(String),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Div(Box<Term>, Box<Term>),
    Neg(Box<Term>),
}

impl Term {
    pub fn var(n: impl Into<String>) -> Term {
        Term::Var(n.into())
    }

    pub fn num(r: Rat) -> Term {
        Term::Num(r)
    }

    pub fn vars_into(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Num(_) | Term::Sym(_) => {}
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            Term::Neg(a) => a.vars_into(out),
        }
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.vars_into(&mut out);
        out
    }

    /// Constant-folds a variable-free term. None if it mentions a variable,
    /// a symbolic constant, or divides by zero.
    pub fn const_eval(&self) -> Option<Rat> {
        match self {
            Term::Num(r) => Some(r.clone()),
            Term::Var(_) | Term::Sym(_) => None,
            Term::Add(a, b) => Some(a.const_eval()? + b.const_eval()?),
            Term::Sub(a, b) => Some(a.const_eval()? - b.const_eval()?),
            Term::Mul(a, b) => Some(a.const_eval()? * b.const_eval()?),
            Term::Div(a, b) => {
                let d = b.const_eval()?;
                if d == Rat::from_integer(0.into()) {
                    None
                } else {
                    Some(a.const_eval()? / d)
                }
            }
            Term::Neg(a) => Some(-a.const_eval()?),
        }
    }
}

/// A predicate, fluent or event reference: `name(arg, ...)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub name: String,
    pub args: Vec<Term>,
    pub span: Span,
}

impl Atom {
    pub fn new(name: impl Into<String>, args: Vec<Term>) -> Atom {
        Atom { name: name.into(), args, span: Span::default() }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Sym(_)) || t.const_eval().is_some())
    }

    pub fn to_ground(&self) -> Option<GroundAtom> {
        let mut args = Vec::new();
        for t in &self.args {
            match t {
                Term::Sym(s) => args.push(GroundTerm::Sym(s.clone())),
                other => args.push(GroundTerm::Num(other.const_eval()?)),
            }
        }
        Some(GroundAtom { name: self.name.clone(), args })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum GroundTerm {
    Num(Rat),
    Sym(String),
}

impl fmt::Display for GroundTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroundTerm::Num(r) => write!(f, "{}", rat_str(r)),
            GroundTerm::Sym(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroundAtom {
    pub name: String,
    pub args: Vec<GroundTerm>,
}

impl GroundAtom {
    pub fn constant(name: impl Into<String>) -> Self {
        GroundAtom { name: name.into(), args: Vec::new() }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            write!(f, "{}", self.name)
        } else {
            let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
            write!(f, "{}({})", self.name, args.join(", "))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Holds { fluent: Atom, time: Term, span: Span },
    Happens { event: Atom, time: Term, span: Span },
    Initially { fluent: Atom, span: Span },
    Constr { rel: SurfaceRel, lhs: Term, rhs: Term, span: Span },
    Pred { atom: Atom, span: Span },
    NegPred { atom: Atom, span: Span },
}

impl Literal {
    pub fn span(&self) -> Span {
        match self {
            Literal::Holds { span, .. }
            | Literal::Happens { span, .. }
            | Literal::Initially { span, .. }
            | Literal::Constr { span, .. }
            | Literal::Pred { span, .. }
            | Literal::NegPred { span, .. } => *span,
        }
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            Literal::Holds { fluent, time, .. } => {
                for a in &fluent.args {
                    a.vars_into(&mut out);
                }
                time.vars_into(&mut out);
            }
            Literal::Happens { event, time, .. } => {
                for a in &event.args {
                    a.vars_into(&mut out);
                }
                time.vars_into(&mut out);
            }
            Literal::Initially { fluent, .. } => {
                for a in &fluent.args {
                    a.vars_into(&mut out);
                }
            }
            Literal::Constr { lhs, rhs, .. } => {
                lhs.vars_into(&mut out);
                rhs.vars_into(&mut out);
            }
            Literal::Pred { atom, .. } | Literal::NegPred { atom, .. } => {
                for a in &atom.args {
                    a.vars_into(&mut out);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClauseKind {
    FluentDecl(Atom),
    EventDecl(Atom),
    Initiates { event: Atom, fluent: Atom, time: Term, body: Vec<Literal> },
    Terminates { event: Atom, fluent: Atom, time: Term, body: Vec<Literal> },
    Releases { event: Atom, fluent: Atom, time: Term, body: Vec<Literal> },
    Trajectory { state: Atom, t1: Term, fluent: Atom, t2: Term, body: Vec<Literal> },
    /// A `happens/2` clause. With a body it is a trigger rule; without one it
    /// is a plain occurrence fact (only meaningful in narrative files).
    Trigger { event: Atom, time: Term, body: Vec<Literal> },
    Initially { fluent: Atom },
    Fact { head: Atom, body: Vec<Literal> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub kind: ClauseKind,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluentKind {
    /// Holds or does not hold; may carry symbolic parameters.
    Boolean,
    /// Carries exactly one numeric value argument.
    Functional,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FluentSig {
    pub kind: FluentKind,
    pub arity: usize,
    /// Declared through `initiallyP` usage rather than a `fluent/1` clause.
    pub implicit: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DomainModel {
    pub clauses: Vec<Clause>,
    pub fluents: BTreeMap<String, FluentSig>,
    pub events: BTreeMap<String, usize>,
}

impl DomainModel {
    pub fn clauses_of<'a, F>(&'a self, pred: F) -> impl Iterator<Item = (usize, &'a Clause)>
    where
        F: Fn(&ClauseKind) -> bool + 'a,
    {
        self.clauses.iter().enumerate().filter(move |(_, c)| pred(&c.kind))
    }

    pub fn initially_facts(&self) -> impl Iterator<Item = &Atom> {
        self.clauses.iter().filter_map(|c| match &c.kind {
            ClauseKind::Initially { fluent } => Some(fluent),
            _ => None,
        })
    }

    pub fn user_clauses(&self, name: &str, arity: usize) -> Vec<(usize, &Atom, &[Literal])> {
        self.clauses
            .iter()
            .enumerate()
            .filter_map(|(i, c)| match &c.kind {
                ClauseKind::Fact { head, body } if head.name == name && head.arity() == arity => {
                    Some((i, head, body.as_slice()))
                }
                _ => None,
            })
            .collect()
    }

    pub fn fluent_kind(&self, name: &str) -> Option<FluentKind> {
        self.fluents.get(name).map(|s| s.kind)
    }

    pub fn rule_label(&self, idx: usize) -> String {
        let kind = match &self.clauses[idx].kind {
            ClauseKind::FluentDecl(_) => "fluent",
            ClauseKind::EventDecl(_) => "event",
            ClauseKind::Initiates { .. } => "initiates",
            ClauseKind::Terminates { .. } => "terminates",
            ClauseKind::Releases { .. } => "releases",
            ClauseKind::Trajectory { .. } => "trajectory",
            ClauseKind::Trigger { .. } => "trigger",
            ClauseKind::Initially { .. } => "initiallyP",
            ClauseKind::Fact { .. } => "clause",
        };
        format!("{kind}#{idx}")
    }
}

/// One timestamped event occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occurrence {
    pub event: GroundAtom,
    pub time: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Narrative {
    pub occurrences: Vec<Occurrence>,
    pub horizon: Rat,
}

impl Narrative {
    pub fn empty(horizon: Rat) -> Self {
        Narrative { occurrences: Vec::new(), horizon }
    }
}
