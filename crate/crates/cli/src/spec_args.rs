//! Parsers for the CLI's structured arguments: abducible specs, parameter
//! fixes and parametric goals.

use ecrv_core::abduce::{AbducibleSpec, ParametricGoal};
use ecrv_core::model::{parse_goal, Atom, DomainModel, Literal, Term};
use ecrv_core::rational::{parse_rat, Rat};
use num_traits::Signed;

/// `"<event> in [<lo>,<hi>] max <n>"`; `max <n>` defaults to 1.
/// Unbounded windows are rejected outright: abduction over continuous time
/// diverges without a bounded placement window.
pub fn parse_abducible(model: &DomainModel, text: &str) -> Result<AbducibleSpec, String> {
    let (event_part, rest) = text
        .split_once(" in ")
        .ok_or_else(|| format!("abducible `{text}` must look like \"<event> in [lo,hi] max n\""))?;
    let rest = rest.trim();
    let (window_part, max_part) = match rest.split_once(" max ") {
        Some((w, m)) => (w.trim(), Some(m.trim())),
        None => (rest, None),
    };
    let window_part = window_part
        .strip_prefix('[')
        .and_then(|w| w.strip_suffix(']'))
        .ok_or_else(|| format!("window `{window_part}` must be of the form [lo,hi]"))?;
    let (lo_text, hi_text) = window_part
        .split_once(',')
        .ok_or_else(|| format!("window `[{window_part}]` must have two bounds"))?;
    let parse_bound = |s: &str| -> Result<Rat, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s == "*" {
            return Err(format!(
                "unbounded abducible window in `{text}`: windows must be bounded"
            ));
        }
        parse_rat(s).ok_or_else(|| format!("invalid window bound `{s}`"))
    };
    let lo = parse_bound(lo_text)?;
    let hi = parse_bound(hi_text)?;
    if lo.is_negative() || lo > hi {
        return Err(format!("window [{lo_text},{hi_text}] is empty or negative"));
    }
    let max_count = match max_part {
        Some(m) => m.parse::<usize>().map_err(|_| format!("invalid max count `{m}`"))?,
        None => 1,
    };

    let template = parse_event_template(model, event_part.trim())?;
    Ok(AbducibleSpec { template, window: (lo, hi), max_count })
}

fn parse_event_template(model: &DomainModel, text: &str) -> Result<Atom, String> {
    let lits = parse_goal(text).map_err(|e| e.to_string())?;
    let [Literal::Pred { atom, .. }] = lits.as_slice() else {
        return Err(format!("`{text}` is not an event atom"));
    };
    if !model.events.contains_key(&atom.name) {
        return Err(format!("undeclared event {}", atom.name));
    }
    Ok(atom.clone())
}

/// `"W=2"` style parameter pins.
pub fn parse_fixes(fixes: &[String]) -> Result<Vec<(String, Rat)>, String> {
    fixes
        .iter()
        .map(|f| {
            let (name, value) = f
                .split_once('=')
                .ok_or_else(|| format!("fix `{f}` must look like NAME=value"))?;
            let r = parse_rat(value.trim())
                .ok_or_else(|| format!("invalid rational `{}` in fix `{f}`", value.trim()))?;
            Ok((name.trim().to_string(), r))
        })
        .collect()
}

/// Builds the parametric goal for `abduce --param`. A goal of the shape
/// `overdose(<fluent>, <MaxVar>, <WindowVar>)` selects the exact
/// window-delta analysis; anything else is evaluated as a plain goal with
/// the parameters free.
pub fn parametric_goal(
    model: &DomainModel,
    goal_text: &str,
    params: &[String],
    fixed: Vec<(String, Rat)>,
) -> Result<ParametricGoal, String> {
    let lits = parse_goal(goal_text).map_err(|e| e.to_string())?;
    if let [Literal::Pred { atom, .. }] = lits.as_slice() {
        if atom.name == "overdose" {
            let [fluent, max_arg, window_arg] = atom.args.as_slice() else {
                return Err("overdose takes (fluent, MaxVar, WindowVar)".to_string());
            };
            let Term::Sym(fluent) = fluent else {
                return Err("overdose: first argument must be a fluent name".to_string());
            };
            if model.fluent_kind(fluent).is_none() {
                return Err(format!("undeclared fluent {fluent}"));
            }
            let var_of = |t: &Term| -> Result<String, String> {
                match t {
                    Term::Var(v) => Ok(v.clone()),
                    other => Err(format!("expected a parameter variable, got {other}")),
                }
            };
            return Ok(ParametricGoal::Overdose {
                fluent: fluent.clone(),
                max_var: var_of(max_arg)?,
                window_var: var_of(window_arg)?,
                fixed,
            });
        }
    }
    // plain goal: parameters must occur in the goal, fixes become equalities
    let mut literals = lits;
    for (name, value) in &fixed {
        literals.push(Literal::Constr {
            rel: ecrv_core::clpq::SurfaceRel::Eq,
            lhs: Term::Var(name.clone()),
            rhs: Term::Num(value.clone()),
            span: Default::default(),
        });
    }
    let goal_vars: Vec<String> = literals.iter().flat_map(|l| l.vars()).collect();
    for p in params {
        if !goal_vars.contains(p) {
            return Err(format!("parameter {p} does not occur in the goal"));
        }
    }
    Ok(ParametricGoal::Goal { literals, params: params.to_vec() })
}
