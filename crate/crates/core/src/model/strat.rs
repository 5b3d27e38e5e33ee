//! Stratified-negation check over the predicate dependency graph.
//!
//! The engine evaluates negation constructively over a finite closed event
//! set; models whose negation dependencies cycle are rejected up front
//! instead of being given stable-model semantics.

use super::ast::*;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("non-stratified negation through cycle: {}", cycle.join(" -> "))]
pub struct NonStratifiedError {
    pub cycle: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Node {
    User(String),
    Fluent(String),
    Event(String),
}

impl Node {
    fn display(&self) -> String {
        match self {
            Node::User(n) | Node::Fluent(n) | Node::Event(n) => n.clone(),
        }
    }
}

pub fn stratification_check(model: &DomainModel) -> Result<(), NonStratifiedError> {
    // edges: from -> (to, negative)
    let mut edges: BTreeMap<Node, Vec<(Node, bool)>> = BTreeMap::new();
    let mut add = |from: Node, to: Node, neg: bool| {
        edges.entry(from).or_default().push((to, neg));
    };

    let body_deps = |body: &[Literal]| -> Vec<(Node, bool)> {
        let mut out = Vec::new();
        for lit in body {
            match lit {
                Literal::Holds { fluent, .. } | Literal::Initially { fluent, .. } => {
                    out.push((Node::Fluent(fluent.name.clone()), false));
                }
                Literal::Happens { event, .. } => {
                    out.push((Node::Event(event.name.clone()), false));
                }
                Literal::Pred { atom, .. } => out.push((Node::User(atom.name.clone()), false)),
                Literal::NegPred { atom, .. } => out.push((Node::User(atom.name.clone()), true)),
                Literal::Constr { .. } => {}
            }
        }
        out
    };

    for clause in &model.clauses {
        match &clause.kind {
            ClauseKind::Initiates { fluent, event, body, .. }
            | ClauseKind::Terminates { fluent, event, body, .. }
            | ClauseKind::Releases { fluent, event, body, .. } => {
                let from = Node::Fluent(fluent.name.clone());
                add(from.clone(), Node::Event(event.name.clone()), false);
                for dep in body_deps(body) {
                    add(from.clone(), dep.0, dep.1);
                }
            }
            ClauseKind::Trajectory { state, fluent, body, .. } => {
                let from = Node::Fluent(fluent.name.clone());
                add(from.clone(), Node::Fluent(state.name.clone()), false);
                for dep in body_deps(body) {
                    add(from.clone(), dep.0, dep.1);
                }
            }
            ClauseKind::Trigger { event, body, .. } => {
                let from = Node::Event(event.name.clone());
                for dep in body_deps(body) {
                    add(from.clone(), dep.0, dep.1);
                }
            }
            ClauseKind::Fact { head, body } => {
                let from = Node::User(head.name.clone());
                for dep in body_deps(body) {
                    add(from.clone(), dep.0, dep.1);
                }
            }
            _ => {}
        }
    }

    // Tarjan SCC; a negative edge inside one component is a violation.
    let nodes: BTreeSet<Node> = edges
        .keys()
        .cloned()
        .chain(edges.values().flatten().map(|(n, _)| n.clone()))
        .collect();
    let index_of: BTreeMap<Node, usize> = nodes.iter().cloned().zip(0..).collect();
    let n = nodes.len();
    let node_list: Vec<Node> = nodes.into_iter().collect();
    let adj: Vec<Vec<(usize, bool)>> = node_list
        .iter()
        .map(|node| {
            edges
                .get(node)
                .map(|es| es.iter().map(|(to, neg)| (index_of[to], *neg)).collect())
                .unwrap_or_default()
        })
        .collect();

    let mut comp = vec![usize::MAX; n];
    let mut order: Vec<usize> = Vec::new();
    let mut visited = vec![false; n];
    for start in 0..n {
        if visited[start] {
            continue;
        }
        // iterative post-order
        let mut stack = vec![(start, 0usize)];
        visited[start] = true;
        while let Some((v, i)) = stack.pop() {
            if i < adj[v].len() {
                stack.push((v, i + 1));
                let (w, _) = adj[v][i];
                if !visited[w] {
                    visited[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
            }
        }
    }
    // reverse graph pass in reverse post-order
    let mut radj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, row) in adj.iter().enumerate() {
        for (w, _) in row {
            radj[*w].push(v);
        }
    }
    let mut ncomp = 0;
    for &start in order.iter().rev() {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = ncomp;
        while let Some(v) = stack.pop() {
            for &w in &radj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = ncomp;
                    stack.push(w);
                }
            }
        }
        ncomp += 1;
    }

    for (v, row) in adj.iter().enumerate() {
        for (w, neg) in row {
            if *neg && comp[v] == comp[*w] {
                let mut cycle: Vec<String> = (0..n)
                    .filter(|&u| comp[u] == comp[v])
                    .map(|u| node_list[u].display())
                    .collect();
                cycle.sort();
                cycle.dedup();
                return Err(NonStratifiedError { cycle });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parser::parse_domain;

    #[test]
    fn even_loop_detected() {
        let m = parse_domain("p :- not q.\nq :- not p.").unwrap();
        let err = stratification_check(&m).unwrap_err();
        assert_eq!(err.cycle, vec!["p".to_string(), "q".to_string()]);
    }

    #[test]
    fn no_negation_is_stratified() {
        let m = parse_domain("p :- q.\nq :- p.").unwrap();
        assert!(stratification_check(&m).is_ok());
    }

    #[test]
    fn acyclic_negation_is_stratified() {
        let m = parse_domain("p :- not q.\nq :- r.\nr.").unwrap();
        assert!(stratification_check(&m).is_ok());
    }
}
