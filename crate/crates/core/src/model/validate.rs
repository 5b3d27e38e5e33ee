//! Well-formedness diagnostics for parsed models.

use super::ast::*;
use crate::diag::Diagnostic;

/// Collects diagnostics: undeclared fluents/events, arity conflicts, head
/// variables unbound in the body, non-linear expressions, and misplaced
/// clauses. Error-severity diagnostics block engine use.
pub fn validate_model(model: &DomainModel) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    for (idx, clause) in model.clauses.iter().enumerate() {
        let _ = idx;
        match &clause.kind {
            ClauseKind::FluentDecl(atom) => {
                let ok_shape = atom.args.is_empty()
                    || (atom.args.len() == 1 && matches!(atom.args[0], Term::Var(_)));
                if !ok_shape {
                    diags.push(Diagnostic::error(
                        format!(
                            "fluent declaration {atom} must be `fluent(name)` or `fluent(name(Value))`"
                        ),
                        atom.span.line,
                        atom.span.col,
                    ));
                }
            }
            ClauseKind::EventDecl(_) => {}
            ClauseKind::Initiates { event, fluent, time, body }
            | ClauseKind::Terminates { event, fluent, time, body }
            | ClauseKind::Releases { event, fluent, time, body } => {
                check_event_use(model, event, &mut diags);
                check_fluent_use(model, fluent, &mut diags);
                let time_var = expect_time_var(time, clause.span, &mut diags);
                let mut continuous = Vec::new();
                if let Some(tv) = &time_var {
                    continuous.push(tv.clone());
                }
                check_body(model, body, &continuous, &mut diags);
                check_head_vars(
                    event.args.iter().chain(fluent.args.iter()),
                    body,
                    &continuous,
                    clause.span,
                    &mut diags,
                );
            }
            ClauseKind::Trajectory { state, t1, fluent, t2, body } => {
                check_fluent_use(model, state, &mut diags);
                if let Some(sig) = model.fluents.get(&state.name) {
                    if sig.kind != FluentKind::Boolean {
                        diags.push(Diagnostic::error(
                            format!("trajectory state fluent {} must be a boolean-state fluent", state.name),
                            state.span.line,
                            state.span.col,
                        ));
                    }
                }
                check_fluent_use(model, fluent, &mut diags);
                if let Some(sig) = model.fluents.get(&fluent.name) {
                    if sig.kind != FluentKind::Functional {
                        diags.push(Diagnostic::error(
                            format!("trajectory value fluent {} must be functional", fluent.name),
                            fluent.span.line,
                            fluent.span.col,
                        ));
                    }
                }
                let mut continuous = Vec::new();
                for t in [t1, t2] {
                    if let Some(v) = expect_time_var(t, clause.span, &mut diags) {
                        continuous.push(v);
                    }
                }
                // the defined value variable is continuous as well
                for a in &fluent.args {
                    a.vars_into(&mut continuous);
                }
                check_body(model, body, &continuous, &mut diags);
                check_head_vars(fluent.args.iter(), body, &continuous, clause.span, &mut diags);
            }
            ClauseKind::Trigger { event, time, body } => {
                check_event_use(model, event, &mut diags);
                if body.is_empty() {
                    diags.push(Diagnostic::error(
                        "unconditional happens fact belongs in a narrative file, not a model",
                        clause.span.line,
                        clause.span.col,
                    ));
                }
                let mut continuous = time.vars();
                check_body(model, body, &continuous, &mut diags);
                continuous.extend(time.vars());
                check_head_vars(event.args.iter(), body, &continuous, clause.span, &mut diags);
                // the head time itself must be bound by the body when it is a variable
                if let Term::Var(v) = time {
                    let bound = body.iter().any(|l| l.vars().contains(v));
                    if !bound {
                        diags.push(Diagnostic::error(
                            format!("trigger time variable {v} does not occur in the body"),
                            clause.span.line,
                            clause.span.col,
                        ));
                    }
                }
            }
            ClauseKind::Initially { fluent } => {
                check_fluent_use(model, fluent, &mut diags);
                if !fluent.is_ground() {
                    diags.push(Diagnostic::error(
                        format!("initiallyP fact {fluent} must be ground"),
                        fluent.span.line,
                        fluent.span.col,
                    ));
                }
            }
            ClauseKind::Fact { head, body } => {
                if head.name == "horizon" {
                    diags.push(Diagnostic::error(
                        "horizon facts belong in narrative files",
                        clause.span.line,
                        clause.span.col,
                    ));
                }
                check_body(model, body, &[], &mut diags);
                check_head_vars(head.args.iter(), body, &[], clause.span, &mut diags);
            }
        }
    }

    diags
}

fn check_fluent_use(model: &DomainModel, atom: &Atom, diags: &mut Vec<Diagnostic>) {
    match model.fluents.get(&atom.name) {
        None => diags.push(Diagnostic::error(
            format!("undeclared fluent {}", atom.name),
            atom.span.line,
            atom.span.col,
        )),
        Some(sig) => {
            if atom.args.len() != sig.arity {
                diags.push(Diagnostic::error(
                    format!(
                        "fluent {} used with arity {} but declared with arity {}",
                        atom.name,
                        atom.args.len(),
                        sig.arity
                    ),
                    atom.span.line,
                    atom.span.col,
                ));
            }
        }
    }
}

fn check_event_use(model: &DomainModel, atom: &Atom, diags: &mut Vec<Diagnostic>) {
    match model.events.get(&atom.name) {
        None => diags.push(Diagnostic::error(
            format!("undeclared event {}", atom.name),
            atom.span.line,
            atom.span.col,
        )),
        Some(arity) => {
            if atom.args.len() != *arity {
                diags.push(Diagnostic::error(
                    format!(
                        "event {} used with arity {} but declared with arity {}",
                        atom.name,
                        atom.args.len(),
                        arity
                    ),
                    atom.span.line,
                    atom.span.col,
                ));
            }
        }
    }
}

fn expect_time_var(t: &Term, span: Span, diags: &mut Vec<Diagnostic>) -> Option<String> {
    match t {
        Term::Var(v) => Some(v.clone()),
        _ => {
            diags.push(Diagnostic::error(
                "the time position of an effect rule must be a variable",
                span.line,
                span.col,
            ));
            None
        }
    }
}

fn check_body(
    model: &DomainModel,
    body: &[Literal],
    continuous: &[String],
    diags: &mut Vec<Diagnostic>,
) {
    for lit in body {
        match lit {
            Literal::Holds { fluent, time, .. } => {
                check_fluent_use(model, fluent, diags);
                check_linear(time, continuous, lit.span(), diags);
            }
            Literal::Happens { event, time, .. } => {
                check_event_use(model, event, diags);
                check_linear(time, continuous, lit.span(), diags);
            }
            Literal::Initially { fluent, .. } => {
                // initiallyP references implicitly declare, so the name always
                // resolves; still check arity against the signature
                check_fluent_use(model, fluent, diags);
            }
            Literal::Constr { lhs, rhs, .. } => {
                check_linear(lhs, continuous, lit.span(), diags);
                check_linear(rhs, continuous, lit.span(), diags);
            }
            Literal::Pred { atom, .. } => {
                if model.fluents.contains_key(&atom.name) || model.events.contains_key(&atom.name)
                {
                    diags.push(Diagnostic::error(
                        format!(
                            "{} is a fluent/event and cannot be used as a plain predicate",
                            atom.name
                        ),
                        atom.span.line,
                        atom.span.col,
                    ));
                }
            }
            Literal::NegPred { atom, .. } => {
                if matches!(atom.name.as_str(), "holdsAt" | "happens" | "initiallyP") {
                    diags.push(Diagnostic::error(
                        format!("negation of {} literals is not supported", atom.name),
                        atom.span.line,
                        atom.span.col,
                    ));
                }
            }
        }
    }
}

/// Rejects expressions that cannot become linear: a product with continuous
/// variables (rule time variables, trajectory value variables) on both sides,
/// or a division whose divisor mentions a continuous variable. Products of
/// two parameter variables are allowed; they must be ground at runtime.
fn check_linear(t: &Term, continuous: &[String], span: Span, diags: &mut Vec<Diagnostic>) {
    fn has_continuous(t: &Term, continuous: &[String]) -> bool {
        t.vars().iter().any(|v| continuous.contains(v))
    }
    match t {
        Term::Mul(a, b) => {
            if has_continuous(a, continuous) && has_continuous(b, continuous) {
                diags.push(Diagnostic::error("non-linear expression", span.line, span.col));
            }
            check_linear(a, continuous, span, diags);
            check_linear(b, continuous, span, diags);
        }
        Term::Div(a, b) => {
            if has_continuous(b, continuous) {
                diags.push(Diagnostic::error(
                    "non-linear expression: division by a time-dependent quantity",
                    span.line,
                    span.col,
                ));
            }
            check_linear(a, continuous, span, diags);
            check_linear(b, continuous, span, diags);
        }
        Term::Add(a, b) | Term::Sub(a, b) => {
            check_linear(a, continuous, span, diags);
            check_linear(b, continuous, span, diags);
        }
        Term::Neg(a) => check_linear(a, continuous, span, diags),
        Term::Var(_) | Term::Num(_) | Term::Sym(_) => {}
    }
}

fn check_head_vars<'a>(
    head_args: impl Iterator<Item = &'a Term>,
    body: &[Literal],
    time_vars: &[String],
    span: Span,
    diags: &mut Vec<Diagnostic>,
) {
    let mut body_vars: Vec<String> = Vec::new();
    for lit in body {
        body_vars.extend(lit.vars());
    }
    for arg in head_args {
        for v in arg.vars() {
            if !body_vars.contains(&v) && !time_vars.contains(&v) {
                diags.push(Diagnostic::error(
                    format!("head variable {v} does not occur in the body"),
                    span.line,
                    span.col,
                ));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::has_errors;
    use crate::model::parser::parse_domain;

    #[test]
    fn undeclared_fluent_is_an_error() {
        let m = parse_domain("event(e).\ninitiates(e, foo, T).").unwrap();
        let diags = validate_model(&m);
        assert!(diags.iter().any(|d| d.message.contains("undeclared fluent foo")));
    }

    #[test]
    fn nonlinear_trajectory_rejected() {
        let m = parse_domain(
            "fluent(g). fluent(f(X)). trajectory(g, T1, f(X), T2) :- X #= T2*T2.",
        )
        .unwrap();
        let diags = validate_model(&m);
        assert!(diags.iter().any(|d| d.message.contains("non-linear expression")));
    }

    #[test]
    fn parameter_product_is_linear_enough() {
        let m = parse_domain(
            "fluent(g). fluent(f(X)). rate(5).\n\
             trajectory(g, T1, f(X), T2) :- rate(R), X #= (T2 - T1) * R.",
        )
        .unwrap();
        let diags = validate_model(&m);
        assert!(!has_errors(&diags), "{diags:?}");
    }

    #[test]
    fn unbound_head_var_rejected() {
        let m = parse_domain("fluent(f(X)). event(e).\ninitiates(e, f(V), T).").unwrap();
        let diags = validate_model(&m);
        assert!(diags.iter().any(|d| d.message.contains("head variable V")));
    }

    #[test]
    fn narrative_fact_in_model_rejected() {
        let m = parse_domain("event(e). happens(e, 3).").unwrap();
        let diags = validate_model(&m);
        assert!(diags.iter().any(|d| d.message.contains("belongs in a narrative")));
    }
}
