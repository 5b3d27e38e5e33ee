//! Proof trees and the replay checker.
//!
//! Every answer carries a proof tree whose leaves are narrative facts,
//! initiallyP facts, model clauses and constraint checks. The replay checker
//! walks a tree and re-verifies each step against the timeline and model
//! without going through the evaluator, so a bug in goal evaluation cannot
//! vouch for itself.

use crate::clpq::{LinConstraint, Store};
use crate::model::{ClauseKind, DomainModel, GroundAtom};
use crate::rational::{rat_str, Rat};
use serde::Serialize;

pub mod rules {
    pub const NARRATIVE: &str = "fact:narrative";
    pub const TRIGGERED: &str = "fact:triggered";
    pub const HYPOTHESIS: &str = "fact:hypothesis";
    pub const INITIALLY: &str = "fact:initiallyP";
    pub const CONSTRAINT: &str = "check:constraints";
    pub const NOT_CLIPPED: &str = "ec:not-clipped";
    pub const NOT_SUPERSEDED: &str = "ec:not-superseded";
    pub const HOLDS_INITIALLY: &str = "ec:holdsAt/initially";
    pub const HOLDS_INITIATED: &str = "ec:holdsAt/initiated";
    pub const VALUE_TRAJECTORY: &str = "ec:valueAt/trajectory";
    pub const VALUE_INERTIA: &str = "ec:valueAt/inertia";
    pub const VALUE_SNAPSHOT: &str = "ec:valueAt/snapshot";
    pub const CHECKPOINT: &str = "ec:checkpoint";
    pub const NAF: &str = "naf";
    pub const CLAUSE: &str = "clause";
    pub const QUERY: &str = "query";
    pub const SKIPPED: &str = "internal:elided";
}

#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Detail {
    None,
    Occurrence {
        event: String,
        time: String,
    },
    Initially {
        fluent: String,
    },
    Clause {
        index: usize,
    },
    Constraints {
        #[serde(rename = "constraints")]
        rendered: Vec<String>,
    },
    Checkpoint {
        boundary: String,
    },
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ProofNode {
    pub conclusion: String,
    pub rule: String,
    pub detail: Detail,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ProofNode>,
    #[serde(skip)]
    pub constraints: Vec<LinConstraint>,
}

impl ProofNode {
    pub fn leaf(conclusion: impl Into<String>, rule: &str, detail: Detail) -> Self {
        ProofNode {
            conclusion: conclusion.into(),
            rule: rule.to_string(),
            detail,
            children: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn node(conclusion: impl Into<String>, rule: &str, children: Vec<ProofNode>) -> Self {
        ProofNode {
            conclusion: conclusion.into(),
            rule: rule.to_string(),
            detail: Detail::None,
            children,
            constraints: Vec::new(),
        }
    }

    pub fn occurrence(event: &GroundAtom, time: &Rat, rule: &str) -> Self {
        ProofNode::leaf(
            format!("happens({event}, {})", rat_str(time)),
            rule,
            Detail::Occurrence { event: event.to_string(), time: rat_str(time) },
        )
    }

    pub fn initially(fluent: &GroundAtom) -> Self {
        ProofNode::leaf(
            format!("initiallyP({fluent})"),
            rules::INITIALLY,
            Detail::Initially { fluent: fluent.to_string() },
        )
    }

    pub fn constraints(conclusion: impl Into<String>, cons: Vec<LinConstraint>) -> Self {
        let rendered = cons.iter().map(|c| c.to_string()).collect();
        ProofNode {
            conclusion: conclusion.into(),
            rule: rules::CONSTRAINT.to_string(),
            detail: Detail::Constraints { rendered },
            children: Vec::new(),
            constraints: cons,
        }
    }

    /// Indented human-readable rendering.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out
    }

    fn render_into(&self, out: &mut String, depth: usize) {
        for _ in 0..depth {
            out.push_str("  ");
        }
        out.push_str(&self.conclusion);
        out.push_str("   [");
        out.push_str(&self.rule);
        out.push(']');
        out.push('\n');
        for c in &self.children {
            c.render_into(out, depth + 1);
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("proof replay failed: {0}")]
pub struct ReplayError(pub String);

/// Re-checks every step of a proof tree: fact leaves must exist in the
/// timeline or model, clause references must resolve, and the union of all
/// constraint checks along the tree must remain jointly satisfiable.
pub fn replay(
    proof: &ProofNode,
    model: &DomainModel,
    events: &[(GroundAtom, Rat)],
) -> Result<(), ReplayError> {
    let mut store = Store::new();
    replay_node(proof, model, events, &mut store)
}

fn replay_node(
    node: &ProofNode,
    model: &DomainModel,
    events: &[(GroundAtom, Rat)],
    store: &mut Store,
) -> Result<(), ReplayError> {
    match node.rule.as_str() {
        rules::NARRATIVE | rules::TRIGGERED | rules::HYPOTHESIS => {
            let Detail::Occurrence { event, time } = &node.detail else {
                return Err(ReplayError(format!("{}: missing occurrence detail", node.rule)));
            };
            // hypothesis times may be symbolic and are vouched for by the
            // solution store, not the concrete timeline
            if node.rule != rules::HYPOTHESIS {
                let found = events
                    .iter()
                    .any(|(e, t)| &e.to_string() == event && &rat_str(t) == time);
                if !found {
                    return Err(ReplayError(format!(
                        "occurrence {event}@{time} not present in the timeline"
                    )));
                }
            }
        }
        rules::INITIALLY => {
            let Detail::Initially { fluent } = &node.detail else {
                return Err(ReplayError("initiallyP leaf without detail".into()));
            };
            let found = model.initially_facts().any(|f| &f.to_string() == fluent);
            if !found {
                return Err(ReplayError(format!("initiallyP({fluent}) is not a model fact")));
            }
        }
        rules::CONSTRAINT => {
            for c in &node.constraints {
                *store = store.assert_cons(c);
            }
            if store.is_unsat() {
                return Err(ReplayError(format!(
                    "constraint check `{}` contradicts the rest of the proof",
                    node.conclusion
                )));
            }
        }
        rules::CLAUSE => {
            let Detail::Clause { index } = &node.detail else {
                return Err(ReplayError("clause node without index".into()));
            };
            if *index >= model.clauses.len() {
                return Err(ReplayError(format!("clause #{index} out of range")));
            }
        }
        rules::HOLDS_INITIATED => {
            let has_occurrence = node
                .children
                .iter()
                .any(|c| matches!(c.detail, Detail::Occurrence { .. }));
            if !has_occurrence {
                return Err(ReplayError(format!(
                    "{}: no initiating occurrence recorded",
                    node.conclusion
                )));
            }
            let names_initiates = node.children.iter().any(|c|

                matches!(&c.detail, Detail::Clause { index }
                    if matches!(model.clauses[*index].kind, ClauseKind::Initiates { .. })));
            if !names_initiates {
                return Err(ReplayError(format!(
                    "{}: no initiates rule referenced",
                    node.conclusion
                )));
            }
        }
        rules::HOLDS_INITIALLY => {
            let ok = node.children.iter().any(|c| c.rule == rules::INITIALLY);
            if !ok {
                return Err(ReplayError(format!(
                    "{}: initially-based holding without an initiallyP leaf",
                    node.conclusion
                )));
            }
        }
        rules::VALUE_TRAJECTORY => {
            let ok = node.children.iter().any(|c| {
                matches!(&c.detail, Detail::Clause { index }
                    if matches!(model.clauses[*index].kind, ClauseKind::Trajectory { .. }))
            });
            if !ok {
                return Err(ReplayError(format!(
                    "{}: no trajectory rule referenced",
                    node.conclusion
                )));
            }
        }
        rules::VALUE_SNAPSHOT => {
            let ok = node.children.iter().any(|c| {
                matches!(&c.detail, Detail::Clause { index }
                    if matches!(model.clauses[*index].kind,
                        ClauseKind::Terminates { .. } | ClauseKind::Releases { .. }))
            });
            if !ok {
                return Err(ReplayError(format!(
                    "{}: snapshot without a terminating rule reference",
                    node.conclusion
                )));
            }
        }
        rules::CHECKPOINT => {
            let Detail::Checkpoint { .. } = &node.detail else {
                return Err(ReplayError("checkpoint node without boundary".into()));
            };
        }
        rules::SKIPPED => {
            return Err(ReplayError("elided proof node cannot be replayed".into()));
        }
        // structural nodes: children carry the evidence
        _ => {}
    }
    for child in &node.children {
        replay_node(child, model, events, store)?;
    }
    Ok(())
}
