//! Serialization back to the clause syntax. Reparsing the output yields a
//! structurally equal model; rational literals are rendered exactly
//! (`1/3` stays `1/3`).

use super::ast::*;
use crate::rational::rat_str;
use std::fmt;

// precedence: 0 add/sub, 1 mul/div, 2 atomic
fn term_prec(t: &Term) -> u8 {
    match t {
        Term::Add(..) | Term::Sub(..) => 0,
        Term::Mul(..) | Term::Div(..) => 1,
        Term::Neg(..) => 1,
        Term::Var(_) | Term::Num(_) | Term::Sym(_) => 2,
    }
}

fn fmt_term(t: &Term, parent: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let prec = term_prec(t);
    let parens = prec < parent;
    if parens {
        write!(f, "(")?;
    }
    match t {
        Term::Var(v) => write!(f, "{v}")?,
        Term::Num(r) => write!(f, "{}", rat_str(r))?,
        Term::Sym(s) => write!(f, "{s}")?,
        Term::Add(a, b) => {
            fmt_term(a, 0, f)?;
            write!(f, " + ")?;
            fmt_term(b, 1, f)?;
        }
        Term::Sub(a, b) => {
            fmt_term(a, 0, f)?;
            write!(f, " - ")?;
            fmt_term(b, 1, f)?;
        }
        Term::Mul(a, b) => {
            fmt_term(a, 1, f)?;
            write!(f, " * ")?;
            fmt_term(b, 2, f)?;
        }
        Term::Div(a, b) => {
            fmt_term(a, 1, f)?;
            write!(f, "/")?;
            fmt_term(b, 2, f)?;
        }
        Term::Neg(a) => {
            write!(f, "-")?;
            fmt_term(a, 2, f)?;
        }
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_term(self, 0, f)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Holds { fluent, time, .. } => write!(f, "holdsAt({fluent}, {time})"),
            Literal::Happens { event, time, .. } => write!(f, "happens({event}, {time})"),
            Literal::Initially { fluent, .. } => write!(f, "initiallyP({fluent})"),
            Literal::Constr { rel, lhs, rhs, .. } => {
                write!(f, "{lhs} {} {rhs}", rel.dsl_op())
            }
            Literal::Pred { atom, .. } => write!(f, "{atom}"),
            Literal::NegPred { atom, .. } => write!(f, "not {atom}"),
        }
    }
}

fn fmt_rule_body(f: &mut fmt::Formatter<'_>, body: &[Literal]) -> fmt::Result {
    if body.is_empty() {
        return write!(f, ".");
    }
    write!(f, " :-")?;
    for (i, lit) in body.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "\n  {lit}")?;
    }
    write!(f, ".")
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ClauseKind::FluentDecl(a) => write!(f, "fluent({a})."),
            ClauseKind::EventDecl(a) => write!(f, "event({a})."),
            ClauseKind::Initiates { event, fluent, time, body } => {
                write!(f, "initiates({event}, {fluent}, {time})")?;
                fmt_rule_body(f, body)
            }
            ClauseKind::Terminates { event, fluent, time, body } => {
                write!(f, "terminates({event}, {fluent}, {time})")?;
                fmt_rule_body(f, body)
            }
            ClauseKind::Releases { event, fluent, time, body } => {
                write!(f, "releases({event}, {fluent}, {time})")?;
                fmt_rule_body(f, body)
            }
            ClauseKind::Trajectory { state, t1, fluent, t2, body } => {
                write!(f, "trajectory({state}, {t1}, {fluent}, {t2})")?;
                fmt_rule_body(f, body)
            }
            ClauseKind::Trigger { event, time, body } => {
                write!(f, "happens({event}, {time})")?;
                fmt_rule_body(f, body)
            }
            ClauseKind::Initially { fluent } => write!(f, "initiallyP({fluent})."),
            ClauseKind::Fact { head, body } => {
                write!(f, "{head}")?;
                fmt_rule_body(f, body)
            }
        }
    }
}

impl fmt::Display for DomainModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Narrative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for occ in &self.occurrences {
            writeln!(f, "happens({}, {}).", occ.event, rat_str(&occ.time))?;
        }
        writeln!(f, "horizon({}).", rat_str(&self.horizon))
    }
}
