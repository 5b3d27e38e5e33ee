//! Normalized linear constraints.

use super::expr::LinExpr;
use crate::rational::{rat_str, Rat};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use std::fmt;

/// Relation of a normalized constraint. `>` and `>=` are normalized away by
/// swapping sides at construction time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Eq,
    Ne,
    Lt,
    Le,
}

/// `expr REL 0`. `Ne` never enters a `Store`; it is split into `<` / `>`
/// branches by the caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinConstraint {
    pub rel: Rel,
    pub expr: LinExpr,
}

impl LinConstraint {
    pub fn new(rel: Rel, expr: LinExpr) -> Self {
        LinConstraint { rel, expr }.canonicalized()
    }

    /// `lhs rel rhs` with the full surface relation set.
    pub fn cmp(lhs: LinExpr, rel: SurfaceRel, rhs: LinExpr) -> Self {
        match rel {
            SurfaceRel::Eq => Self::new(Rel::Eq, lhs - rhs),
            SurfaceRel::Ne => Self::new(Rel::Ne, lhs - rhs),
            SurfaceRel::Lt => Self::new(Rel::Lt, lhs - rhs),
            SurfaceRel::Le => Self::new(Rel::Le, lhs - rhs),
            SurfaceRel::Gt => Self::new(Rel::Lt, rhs - lhs),
            SurfaceRel::Ge => Self::new(Rel::Le, rhs - lhs),
        }
    }

    pub fn eq(lhs: LinExpr, rhs: LinExpr) -> Self {
        Self::cmp(lhs, SurfaceRel::Eq, rhs)
    }

    pub fn le(lhs: LinExpr, rhs: LinExpr) -> Self {
        Self::cmp(lhs, SurfaceRel::Le, rhs)
    }

    pub fn lt(lhs: LinExpr, rhs: LinExpr) -> Self {
        Self::cmp(lhs, SurfaceRel::Lt, rhs)
    }

    /// Scales coefficients to coprime integers with a deterministic sign so
    /// structurally equal constraints compare equal.
    fn canonicalized(mut self) -> Self {
        let mut denoms: Vec<BigInt> = self.expr.coeffs.values().map(|c| c.denom().clone()).collect();
        denoms.push(self.expr.constant.denom().clone());
        let lcm = denoms.iter().fold(BigInt::from(1), |a, b| num_integer::lcm(a, b.clone()));
        let mut e = self.expr.scale(&Rat::from_integer(lcm));
        let mut nums: Vec<BigInt> = e.coeffs.values().map(|c| c.numer().abs()).collect();
        nums.push(e.constant.numer().abs());
        let gcd = nums.into_iter().filter(|n| !n.is_zero()).fold(BigInt::zero(), num_integer::gcd);
        if !gcd.is_zero() && gcd != BigInt::from(1) {
            e = e.scale(&Rat::new(BigInt::from(1), gcd));
        }
        // For symmetric relations, fix the sign by the first coefficient.
        if matches!(self.rel, Rel::Eq | Rel::Ne) {
            let flip = match e.coeffs.values().next() {
                Some(c) => c.is_negative(),
                None => e.constant.is_negative(),
            };
            if flip {
                e = -e;
            }
        }
        self.expr = e;
        self
    }

    /// Constant truth value, if the constraint has no variables.
    pub fn const_truth(&self) -> Option<bool> {
        let c = self.expr.as_const()?;
        Some(match self.rel {
            Rel::Eq => c.is_zero(),
            Rel::Ne => !c.is_zero(),
            Rel::Lt => c.is_negative(),
            Rel::Le => !c.is_positive(),
        })
    }

    /// The negation, as a disjunction of constraints (ordered: `<` before `>`).
    pub fn negated(&self) -> Vec<LinConstraint> {
        match self.rel {
            Rel::Eq => vec![
                LinConstraint::new(Rel::Lt, self.expr.clone()),
                LinConstraint::new(Rel::Lt, -self.expr.clone()),
            ],
            Rel::Ne => vec![LinConstraint::new(Rel::Eq, self.expr.clone())],
            Rel::Lt => vec![LinConstraint::new(Rel::Le, -self.expr.clone())],
            Rel::Le => vec![LinConstraint::new(Rel::Lt, -self.expr.clone())],
        }
    }

    pub fn substitute(&self, var: &str, repl: &LinExpr) -> LinConstraint {
        LinConstraint::new(self.rel, self.expr.substitute(var, repl))
    }

    pub fn satisfied_by(&self, assignment: &std::collections::BTreeMap<String, Rat>) -> Option<bool> {
        let v = self.expr.eval(assignment)?;
        Some(match self.rel {
            Rel::Eq => v.is_zero(),
            Rel::Ne => !v.is_zero(),
            Rel::Lt => v.is_negative(),
            Rel::Le => !v.is_positive(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceRel {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl SurfaceRel {
    pub fn dsl_op(&self) -> &'static str {
        match self {
            SurfaceRel::Eq => "#=",
            SurfaceRel::Ne => "#<>",
            SurfaceRel::Lt => "#<",
            SurfaceRel::Le => "#=<",
            SurfaceRel::Gt => "#>",
            SurfaceRel::Ge => "#>=",
        }
    }
}

/// Rendered in the DSL constraint syntax with all coefficients positive,
/// e.g. `2 #< T` or `T #=< 7`.
impl fmt::Display for LinConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (pos, neg) = self.expr.split_signs();
        let op = match self.rel {
            Rel::Eq => "#=",
            Rel::Ne => "#<>",
            Rel::Lt => "#<",
            Rel::Le => "#=<",
        };
        // expr rel 0  <=>  pos rel neg
        let lhs = if pos == LinExpr::zero() { rat_str(&Rat::zero()) } else { pos.to_string() };
        let rhs = if neg == LinExpr::zero() { rat_str(&Rat::zero()) } else { neg.to_string() };
        write!(f, "{lhs} {op} {rhs}")
    }
}
