//! Query answers: bindings, residual constraints, proof.

use super::proof::ProofNode;
use crate::clpq::LinConstraint;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize)]
pub struct Answer {
    /// Variable bindings pinned to a single value, rendered exactly.
    pub bindings: BTreeMap<String, String>,
    /// Residual constraints over the still-free query variables, in DSL
    /// constraint syntax.
    pub residual: Vec<String>,
    pub proof: ProofNode,
    #[serde(skip)]
    pub residual_cons: Vec<LinConstraint>,
}

impl Answer {
    pub fn render_text(&self, with_proof: bool) -> String {
        let mut parts: Vec<String> = self
            .bindings
            .iter()
            .map(|(v, val)| format!("{v} = {val}"))
            .collect();
        parts.extend(self.residual.iter().cloned());
        let head = if parts.is_empty() { "yes".to_string() } else { parts.join(", ") };
        if with_proof {
            format!("{head}\n{}", self.proof.render_text())
        } else {
            head
        }
    }
}
