//! Recursive-descent parser for the clause DSL, narrative files and goals.

use super::ast::*;
use super::lexer::{tokenize, ParseError, SpannedTok, Tok};
use crate::clpq::SurfaceRel;
use crate::rational::{rat_str, Rat};
use num_traits::Signed;

struct P {
    toks: Vec<SpannedTok>,
    pos: usize,
}

impl P {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn next(&mut self) -> SpannedTok {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: &[&str]) -> ParseError {
        let span = self.span();
        let found = self.peek().describe();
        ParseError {
            line: span.line,
            col: span.col,
            message: format!("expected {}, found {}", expected.join(" or "), found),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<SpannedTok, ParseError> {
        if self.peek() == &tok {
            Ok(self.next())
        } else {
            Err(self.err(&[what]))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let span = self.span();
                self.next();
                Ok((s, span))
            }
            _ => Err(self.err(&[what])),
        }
    }

    // term := addsub
    fn term(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.term_mul()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.next();
                    let rhs = self.term_mul()?;
                    lhs = Term::Add(Box::new(lhs), Box::new(rhs));
                }
                Tok::Minus => {
                    self.next();
                    let rhs = self.term_mul()?;
                    lhs = Term::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term_mul(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.term_unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.next();
                    let rhs = self.term_unary()?;
                    lhs = Term::Mul(Box::new(lhs), Box::new(rhs));
                }
                Tok::Slash => {
                    self.next();
                    let rhs = self.term_unary()?;
                    lhs = Term::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term_unary(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Minus => {
                self.next();
                Ok(Term::Neg(Box::new(self.term_unary()?)))
            }
            Tok::Num(r) => {
                self.next();
                Ok(Term::Num(r))
            }
            Tok::Var(v) => {
                self.next();
                Ok(Term::Var(v))
            }
            Tok::Ident(s) => {
                if self.peek2() == &Tok::LParen {
                    return Err(self.err(&["a term (compound terms are not allowed here)"]));
                }
                self.next();
                Ok(Term::Sym(s))
            }
            Tok::LParen => {
                self.next();
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            _ => Err(self.err(&["a term"])),
        }
    }

    /// `name` or `name(term, ...)`.
    fn atom(&mut self) -> Result<Atom, ParseError> {
        let (name, span) = self.ident("an identifier")?;
        let mut args = Vec::new();
        if self.peek() == &Tok::LParen {
            self.next();
            loop {
                args.push(self.term()?);
                match self.peek() {
                    Tok::Comma => {
                        self.next();
                    }
                    Tok::RParen => {
                        self.next();
                        break;
                    }
                    _ => return Err(self.err(&["`,`", "`)`"])),
                }
            }
        }
        Ok(Atom { name, args, span })
    }

    fn relop(&mut self) -> Option<SurfaceRel> {
        let rel = match self.peek() {
            Tok::OpEq => SurfaceRel::Eq,
            Tok::OpNe => SurfaceRel::Ne,
            Tok::OpLt => SurfaceRel::Lt,
            Tok::OpLe => SurfaceRel::Le,
            Tok::OpGt => SurfaceRel::Gt,
            Tok::OpGe => SurfaceRel::Ge,
            _ => return None,
        };
        self.next();
        Some(rel)
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(name) => match name.as_str() {
                "not" => {
                    self.next();
                    let atom = self.atom()?;
                    Ok(Literal::NegPred { atom, span })
                }
                "holdsAt" => {
                    self.next();
                    self.expect(Tok::LParen, "`(`")?;
                    let fluent = self.atom()?;
                    self.expect(Tok::Comma, "`,`")?;
                    let time = self.term()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Literal::Holds { fluent, time, span })
                }
                "happens" => {
                    self.next();
                    self.expect(Tok::LParen, "`(`")?;
                    let event = self.atom()?;
                    self.expect(Tok::Comma, "`,`")?;
                    let time = self.term()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Literal::Happens { event, time, span })
                }
                "initiallyP" => {
                    self.next();
                    self.expect(Tok::LParen, "`(`")?;
                    let fluent = self.atom()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Literal::Initially { fluent, span })
                }
                _ => {
                    let atom = self.atom()?;
                    if let Some(rel) = self.relop() {
                        if !atom.args.is_empty() {
                            return Err(ParseError::new(
                                span,
                                "compound term on the left of a constraint operator",
                            ));
                        }
                        let rhs = self.term()?;
                        return Ok(Literal::Constr { rel, lhs: Term::Sym(atom.name), rhs, span });
                    }
                    Ok(Literal::Pred { atom, span })
                }
            },
            Tok::Num(_) | Tok::Var(_) | Tok::Minus | Tok::LParen => {
                let lhs = self.term()?;
                let Some(rel) = self.relop() else {
                    return Err(self.err(&["a constraint operator"]));
                };
                let rhs = self.term()?;
                Ok(Literal::Constr { rel, lhs, rhs, span })
            }
            _ => Err(self.err(&["a body literal"])),
        }
    }

    fn body(&mut self) -> Result<Vec<Literal>, ParseError> {
        let mut out = vec![self.literal()?];
        while self.peek() == &Tok::Comma {
            self.next();
            out.push(self.literal()?);
        }
        Ok(out)
    }

    fn opt_body_then_dot(&mut self) -> Result<Vec<Literal>, ParseError> {
        let body = if self.peek() == &Tok::If {
            self.next();
            self.body()?
        } else {
            Vec::new()
        };
        self.expect(Tok::Dot, "`.`")?;
        Ok(body)
    }

    fn clause(&mut self) -> Result<Clause, ParseError> {
        let span = self.span();
        let (name, _) = self.ident("a clause head")?;
        let kind = match name.as_str() {
            "fluent" | "event" => {
                self.expect(Tok::LParen, "`(`")?;
                let atom = self.atom()?;
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::Dot, "`.`")?;
                if name == "fluent" {
                    ClauseKind::FluentDecl(atom)
                } else {
                    ClauseKind::EventDecl(atom)
                }
            }
            "initiallyP" => {
                self.expect(Tok::LParen, "`(`")?;
                let fluent = self.atom()?;
                self.expect(Tok::RParen, "`)`")?;
                if self.peek() == &Tok::If {
                    return Err(ParseError::new(self.span(), "initiallyP facts take no body"));
                }
                self.expect(Tok::Dot, "`.`")?;
                ClauseKind::Initially { fluent }
            }
            "initiates" | "terminates" | "releases" => {
                self.expect(Tok::LParen, "`(`")?;
                let event = self.atom()?;
                self.expect(Tok::Comma, "`,`")?;
                let fluent = self.atom()?;
                self.expect(Tok::Comma, "`,`")?;
                let time = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                let body = self.opt_body_then_dot()?;
                match name.as_str() {
                    "initiates" => ClauseKind::Initiates { event, fluent, time, body },
                    "terminates" => ClauseKind::Terminates { event, fluent, time, body },
                    _ => ClauseKind::Releases { event, fluent, time, body },
                }
            }
            "trajectory" => {
                self.expect(Tok::LParen, "`(`")?;
                let state = self.atom()?;
                self.expect(Tok::Comma, "`,`")?;
                let t1 = self.term()?;
                self.expect(Tok::Comma, "`,`")?;
                let fluent = self.atom()?;
                self.expect(Tok::Comma, "`,`")?;
                let t2 = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                let body = self.opt_body_then_dot()?;
                ClauseKind::Trajectory { state, t1, fluent, t2, body }
            }
            "happens" => {
                self.expect(Tok::LParen, "`(`")?;
                let event = self.atom()?;
                self.expect(Tok::Comma, "`,`")?;
                let time = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                let body = self.opt_body_then_dot()?;
                ClauseKind::Trigger { event, time, body }
            }
            "holdsAt" | "not" => {
                return Err(ParseError::new(span, format!("`{name}` cannot head a clause")));
            }
            _ => {
                // user predicate clause; re-read args through atom machinery
                self.pos -= 1;
                let head = self.atom()?;
                let body = self.opt_body_then_dot()?;
                ClauseKind::Fact { head, body }
            }
        };
        Ok(Clause { kind, span })
    }
}

pub fn parse_program(text: &str) -> Result<Vec<Clause>, ParseError> {
    let toks = tokenize(text)?;
    let mut p = P { toks, pos: 0 };
    let mut out = Vec::new();
    while p.peek() != &Tok::Eof {
        out.push(p.clause()?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimingKind {
    At,
    By,
}

/// One `expect(<lit>{, <lit>}, at(<t>)).` / `... by(<t>)).` clause.
/// Bare predicate atoms in the goal are resolved against the model's
/// fluent/event signature when the scenario is checked.
#[derive(Debug, Clone, PartialEq)]
pub struct RawExpect {
    pub goal: Vec<Literal>,
    pub timing: TimingKind,
    pub time: Term,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub narrative: Narrative,
    pub expectations: Vec<RawExpect>,
    /// Leading comment lines, kept as provenance text.
    pub provenance: Option<String>,
}

/// Scenario files carry narrative clauses plus expectations.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile, NarrativeError> {
    let toks = tokenize(text)?;
    let mut p = P { toks, pos: 0 };
    let mut narrative_clauses = Vec::new();
    let mut expectations = Vec::new();
    while p.peek() != &Tok::Eof {
        if let Tok::Ident(name) = p.peek() {
            if name == "expect" {
                expectations.push(p.expect_clause()?);
                continue;
            }
        }
        narrative_clauses.push(p.clause()?);
    }
    let narrative = interpret_narrative(&narrative_clauses)?;
    let provenance = {
        let lines: Vec<&str> = text
            .lines()
            .take_while(|l| l.trim_start().starts_with('%'))
            .map(|l| l.trim_start().trim_start_matches('%').trim())
            .filter(|l| !l.is_empty())
            .collect();
        if lines.is_empty() {
            None
        } else {
            Some(lines.join(" "))
        }
    };
    Ok(ScenarioFile { narrative, expectations, provenance })
}

impl P {
    fn expect_clause(&mut self) -> Result<RawExpect, ParseError> {
        let span = self.span();
        self.ident("expect")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut goal = Vec::new();
        let timing = loop {
            if let Tok::Ident(name) = self.peek() {
                if (name == "at" || name == "by") && self.peek2() == &Tok::LParen {
                    let kind = if name == "at" { TimingKind::At } else { TimingKind::By };
                    self.next();
                    self.expect(Tok::LParen, "`(`")?;
                    let time = self.term()?;
                    self.expect(Tok::RParen, "`)`")?;
                    break (kind, time);
                }
            }
            goal.push(self.literal()?);
            self.expect(Tok::Comma, "`,`")?;
        };
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::Dot, "`.`")?;
        if goal.is_empty() {
            return Err(ParseError::new(span, "expect clause needs at least one goal literal"));
        }
        Ok(RawExpect { goal, timing: timing.0, time: timing.1, span })
    }
}

/// Parses a conjunction of body literals, e.g. a CLI query goal.
pub fn parse_goal(text: &str) -> Result<Vec<Literal>, ParseError> {
    let toks = tokenize(text)?;
    let mut p = P { toks, pos: 0 };
    let body = p.body()?;
    if p.peek() == &Tok::Dot {
        p.next();
    }
    if p.peek() != &Tok::Eof {
        return Err(p.err(&["end of goal"]));
    }
    Ok(body)
}

/// Builds the domain model: clause list plus fluent/event signature maps.
/// Fluents referenced through `initiallyP` but never declared are registered
/// implicitly; that is how configuration fluents like a VTBI setting enter
/// the model.
pub fn parse_domain(text: &str) -> Result<DomainModel, ParseError> {
    let clauses = parse_program(text)?;
    let mut model = DomainModel { clauses, ..Default::default() };

    let classify = |atom: &Atom| -> FluentSig {
        let kind = if atom.args.len() == 1 { FluentKind::Functional } else { FluentKind::Boolean };
        FluentSig { kind, arity: atom.args.len(), implicit: false }
    };

    for clause in &model.clauses {
        match &clause.kind {
            ClauseKind::FluentDecl(atom) => {
                model.fluents.insert(atom.name.clone(), classify(atom));
            }
            ClauseKind::EventDecl(atom) => {
                model.events.insert(atom.name.clone(), atom.args.len());
            }
            _ => {}
        }
    }

    // initiallyP-implied fluents (facts and body literals)
    let mut implicit: Vec<Atom> = Vec::new();
    for clause in &model.clauses {
        let mut from_body = |body: &[Literal]| {
            for lit in body {
                if let Literal::Initially { fluent, .. } = lit {
                    implicit.push(fluent.clone());
                }
            }
        };
        match &clause.kind {
            ClauseKind::Initially { fluent } => implicit.push(fluent.clone()),
            ClauseKind::Initiates { body, .. }
            | ClauseKind::Terminates { body, .. }
            | ClauseKind::Releases { body, .. }
            | ClauseKind::Trajectory { body, .. }
            | ClauseKind::Trigger { body, .. }
            | ClauseKind::Fact { body, .. } => from_body(body),
            _ => {}
        }
    }
    for atom in implicit {
        model.fluents.entry(atom.name.clone()).or_insert_with(|| {
            let mut sig = classify(&atom);
            sig.implicit = true;
            sig
        });
    }

    Ok(model)
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum NarrativeError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("negative time {time} for event {event} at {line}:{col}")]
    NegativeTime { event: String, time: String, line: u32, col: u32 },
    #[error("narrative has no horizon(<time>) fact")]
    MissingHorizon,
    #[error("duplicate horizon fact at {line}:{col}")]
    DuplicateHorizon { line: u32, col: u32 },
    #[error("event {event} at time {time} lies beyond the horizon {horizon}")]
    BeyondHorizon { event: String, time: String, horizon: String },
    #[error("{message} at {line}:{col}")]
    BadClause { message: String, line: u32, col: u32 },
}

/// Reads a narrative: `happens(<event>, <time>).` facts plus one
/// `horizon(<time>).` fact. Times are rationals (integers, fractions or
/// decimals, all exact); occurrences come back sorted by time.
pub fn parse_narrative(text: &str) -> Result<Narrative, NarrativeError> {
    let clauses = parse_program(text)?;
    interpret_narrative(&clauses)
}

/// Narrative extraction from already-parsed clauses (scenario files embed
/// narrative clauses next to expectations).
pub fn interpret_narrative(clauses: &[Clause]) -> Result<Narrative, NarrativeError> {
    let mut occurrences: Vec<Occurrence> = Vec::new();
    let mut horizon: Option<Rat> = None;
    for clause in clauses {
        let bad = |message: &str| NarrativeError::BadClause {
            message: message.to_string(),
            line: clause.span.line,
            col: clause.span.col,
        };
        match &clause.kind {
            ClauseKind::Trigger { event, time, body } => {
                if !body.is_empty() {
                    return Err(bad("trigger rules are not allowed in a narrative"));
                }
                let Some(event) = event.to_ground() else {
                    return Err(bad("narrative events must be ground"));
                };
                let Some(t) = time.const_eval() else {
                    return Err(bad("narrative times must be rational constants"));
                };
                if t.is_negative() {
                    return Err(NarrativeError::NegativeTime {
                        event: event.to_string(),
                        time: rat_str(&t),
                        line: clause.span.line,
                        col: clause.span.col,
                    });
                }
                occurrences.push(Occurrence { event, time: t });
            }
            ClauseKind::Fact { head, body } if head.name == "horizon" => {
                if !body.is_empty() || head.args.len() != 1 {
                    return Err(bad("horizon takes exactly one rational argument"));
                }
                let Some(h) = head.args[0].const_eval() else {
                    return Err(bad("horizon must be a rational constant"));
                };
                if horizon.is_some() {
                    return Err(NarrativeError::DuplicateHorizon {
                        line: clause.span.line,
                        col: clause.span.col,
                    });
                }
                horizon = Some(h);
            }
            _ => return Err(bad("only happens/2 and horizon/1 facts are allowed in a narrative")),
        }
    }
    let horizon = horizon.ok_or(NarrativeError::MissingHorizon)?;
    for occ in &occurrences {
        if occ.time > horizon {
            return Err(NarrativeError::BeyondHorizon {
                event: occ.event.to_string(),
                time: rat_str(&occ.time),
                horizon: rat_str(&horizon),
            });
        }
    }
    occurrences.sort_by(|a, b| a.time.cmp(&b.time));
    Ok(Narrative { occurrences, horizon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn empty_input_is_empty_model() {
        let m = parse_domain("").unwrap();
        assert!(m.clauses.is_empty());
        assert!(m.fluents.is_empty());
    }

    #[test]
    fn missing_final_dot_is_error_at_eof() {
        let err = parse_domain("initiates(e, f, T)").unwrap_err();
        assert!(err.message.contains("expected"), "{err}");
        assert!(err.found.contains("end of input"), "{err}");
    }

    #[test]
    fn narrative_roundtrip() {
        let n =
            parse_narrative("happens(patient_bolus_delivery_started, 2). horizon(10).").unwrap();
        assert_eq!(n.horizon, rat(10));
        assert_eq!(n.occurrences.len(), 1);
        assert_eq!(n.occurrences[0].event.name, "patient_bolus_delivery_started");
        assert_eq!(n.occurrences[0].time, rat(2));
    }

    #[test]
    fn empty_narrative() {
        let n = parse_narrative("horizon(0).").unwrap();
        assert!(n.occurrences.is_empty());
        assert_eq!(n.horizon, rat(0));
    }

    #[test]
    fn negative_time_rejected() {
        let err = parse_narrative("happens(e, -1). horizon(5).").unwrap_err();
        assert!(matches!(err, NarrativeError::NegativeTime { .. }));
    }

    #[test]
    fn missing_horizon_rejected() {
        let err = parse_narrative("happens(e, 1).").unwrap_err();
        assert!(matches!(err, NarrativeError::MissingHorizon));
    }

    #[test]
    fn narrative_sorted_by_time() {
        let n = parse_narrative("happens(b, 3). happens(a, 1). horizon(5).").unwrap();
        assert_eq!(n.occurrences[0].event.name, "a");
        assert_eq!(n.occurrences[1].event.name, "b");
    }

    #[test]
    fn fractional_and_decimal_times() {
        let n = parse_narrative("happens(a, 1/2). happens(b, 0.25). horizon(1).").unwrap();
        assert_eq!(n.occurrences[0].time, crate::rational::rat_frac(1, 4));
        assert_eq!(n.occurrences[1].time, crate::rational::rat_frac(1, 2));
    }

    #[test]
    fn goal_parsing() {
        let g = parse_goal("happens(patient_bolus_completed, T)").unwrap();
        assert_eq!(g.len(), 1);
        let g2 = parse_goal("holdsAt(f(V), T), V #> 3").unwrap();
        assert_eq!(g2.len(), 2);
    }
}
