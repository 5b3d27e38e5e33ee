//! The constraint store: a conjunction of linear constraints over the
//! rationals, with exact satisfiability, entailment, projection and
//! complementation.
//!
//! Decision procedure: Gaussian substitution for equalities followed by
//! Fourier-Motzkin elimination for inequalities. Strict inequalities are
//! first-class; combining a strict with a non-strict bound stays strict.
//! Stores are value-semantic: every operation returns a new store.

use super::constraint::{LinConstraint, Rel};
use super::expr::LinExpr;
use crate::rational::Rat;
use num_traits::{Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, Default)]
pub struct Store {
    cons: Vec<LinConstraint>,
    unsat: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bound {
    pub value: Rat,
    pub strict: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bounds {
    pub lo: Option<Bound>,
    pub hi: Option<Bound>,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    pub fn is_unsat(&self) -> bool {
        self.unsat
    }

    pub fn is_sat(&self) -> bool {
        !self.unsat
    }

    pub fn constraints(&self) -> &[LinConstraint] {
        &self.cons
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for c in &self.cons {
            out.extend(c.expr.vars());
        }
        out
    }

    /// Conjoins `c`. Tautologies are absorbed; an infeasible conjunction
    /// returns a store marked UNSAT. `Ne` is rejected: the search layer
    /// splits disequalities into `<` / `>` branches to keep stores convex.
    pub fn assert_cons(&self, c: &LinConstraint) -> Store {
        assert!(c.rel != Rel::Ne, "disequality must be split before entering the store");
        if self.unsat {
            return self.clone();
        }
        if let Some(truth) = c.const_truth() {
            if truth {
                return self.clone();
            }
            let mut s = self.clone();
            s.unsat = true;
            return s;
        }
        if self.cons.contains(c) {
            return self.clone();
        }
        let mut s = self.clone();
        // an equality defining a variable unseen so far cannot affect
        // satisfiability: the fresh variable absorbs any value of the rest
        let defines_fresh = c.rel == Rel::Eq
            && c.expr.coeffs.keys().any(|v| !self.cons.iter().any(|e| e.expr.coeffs.contains_key(v)));
        s.cons.push(c.clone());
        if !defines_fresh && !satisfiable(&s.cons) {
            s.unsat = true;
        }
        s
    }

    pub fn assert_all(&self, cs: &[LinConstraint]) -> Store {
        let mut s = self.clone();
        for c in cs {
            s = s.assert_cons(c);
            if s.unsat {
                break;
            }
        }
        s
    }

    /// True iff every solution of the store satisfies `c`.
    /// Vacuously true on an UNSAT store.
    pub fn entails(&self, c: &LinConstraint) -> bool {
        if self.unsat {
            return true;
        }
        for neg in c.negated() {
            let mut probe = self.cons.clone();
            if let Some(truth) = neg.const_truth() {
                if truth {
                    return false;
                }
                continue;
            }
            probe.push(neg);
            if satisfiable(&probe) {
                return false;
            }
        }
        true
    }

    /// Exact projection onto `vars` with redundancy removal.
    pub fn project(&self, vars: &BTreeSet<String>) -> Vec<LinConstraint> {
        if self.unsat {
            return vec![LinConstraint::lt(LinExpr::zero(), LinExpr::zero())];
        }
        let projected = match eliminate(self.cons.clone(), vars) {
            Ok(cs) => cs,
            Err(()) => return vec![LinConstraint::lt(LinExpr::zero(), LinExpr::zero())],
        };
        drop_redundant(projected)
    }

    /// Exact bounds of a linear expression over the store's solution set.
    /// `None` on a side means unbounded.
    pub fn bounds(&self, expr: &LinExpr) -> Bounds {
        debug_assert!(self.is_sat());
        let probe = "!bound";
        let mut cons = self.cons.clone();
        cons.push(LinConstraint::eq(LinExpr::var(probe), expr.clone()));
        let mut keep = BTreeSet::new();
        keep.insert(probe.to_string());
        let one_d = match eliminate(cons, &keep) {
            Ok(cs) => cs,
            Err(()) => return Bounds::default(),
        };
        let mut out = Bounds::default();
        for c in one_d {
            let a = c.expr.coeff(probe);
            if a.is_zero() {
                continue;
            }
            let bound = -c.expr.constant.clone() / a.clone();
            match c.rel {
                Rel::Eq => {
                    tighten_lo(&mut out.lo, bound.clone(), false);
                    tighten_hi(&mut out.hi, bound, false);
                }
                Rel::Lt | Rel::Le => {
                    let strict = c.rel == Rel::Lt;
                    if a.is_positive() {
                        tighten_hi(&mut out.hi, bound, strict);
                    } else {
                        tighten_lo(&mut out.lo, bound, strict);
                    }
                }
                Rel::Ne => unreachable!(),
            }
        }
        out
    }

    /// The unique value of `expr` if the store pins it down exactly.
    pub fn fixed(&self, expr: &LinExpr) -> Option<Rat> {
        if let Some(c) = expr.as_const() {
            return Some(c.clone());
        }
        // fast path: a single variable pinned by an explicit equality
        if expr.coeffs.len() == 1 {
            let (var, coeff) = expr.coeffs.iter().next().expect("one var");
            for c in &self.cons {
                if c.rel != Rel::Eq {
                    continue;
                }
                if c.expr.coeffs.len() == 1 {
                    if let Some(a) = c.expr.coeffs.get(var) {
                        let v = -c.expr.constant.clone() / a.clone();
                        return Some(v * coeff + &expr.constant);
                    }
                }
            }
        }
        let b = self.bounds(expr);
        match (b.lo, b.hi) {
            (Some(lo), Some(hi)) if !lo.strict && !hi.strict && lo.value == hi.value => {
                Some(lo.value)
            }
            _ => None,
        }
    }

    /// A rational point satisfying the store. Requires a satisfiable store;
    /// unbounded directions are filled deterministically.
    pub fn sample_point(&self) -> Option<BTreeMap<String, Rat>> {
        if self.unsat {
            return None;
        }
        let mut assignment = BTreeMap::new();
        let mut cons = self.cons.clone();
        let vars: Vec<String> = self.vars().into_iter().collect();
        for v in vars {
            let sub = Store { cons: cons.clone(), unsat: false };
            let b = sub.bounds(&LinExpr::var(&v));
            let one = Rat::from_integer(1.into());
            let value = match (b.lo, b.hi) {
                (Some(lo), Some(hi)) => {
                    if lo.value == hi.value {
                        lo.value
                    } else {
                        (lo.value + hi.value) / Rat::from_integer(2.into())
                    }
                }
                (Some(lo), None) => {
                    if lo.strict {
                        lo.value + one
                    } else {
                        lo.value
                    }
                }
                (None, Some(hi)) => {
                    if hi.strict {
                        hi.value - one
                    } else {
                        hi.value
                    }
                }
                (None, None) => Rat::from_integer(0.into()),
            };
            cons = cons
                .into_iter()
                .map(|c| c.substitute(&v, &LinExpr::constant(value.clone())))
                .filter(|c| c.const_truth() != Some(true))
                .collect();
            if cons.iter().any(|c| c.const_truth() == Some(false)) {
                return None;
            }
            assignment.insert(v, value);
        }
        Some(assignment)
    }
}

fn tighten_lo(slot: &mut Option<Bound>, value: Rat, strict: bool) {
    let better = match slot {
        None => true,
        Some(b) => value > b.value || (value == b.value && strict && !b.strict),
    };
    if better {
        *slot = Some(Bound { value, strict });
    }
}

fn tighten_hi(slot: &mut Option<Bound>, value: Rat, strict: bool) {
    let better = match slot {
        None => true,
        Some(b) => value < b.value || (value == b.value && strict && !b.strict),
    };
    if better {
        *slot = Some(Bound { value, strict });
    }
}

/// Disjoint complement of a conjunction: ordered case analysis where the
/// i-th disjunct keeps constraints 0..i and negates the i-th. Equality
/// negations contribute their `<` part before their `>` part.
pub fn complement(conj: &[LinConstraint]) -> Vec<Vec<LinConstraint>> {
    let mut out = Vec::new();
    for (i, c) in conj.iter().enumerate() {
        for neg in c.negated() {
            let mut disjunct: Vec<LinConstraint> = conj[..i].to_vec();
            disjunct.push(neg);
            out.push(disjunct);
        }
    }
    out
}

/// Decides feasibility of a conjunction over the rationals.
fn satisfiable(cons: &[LinConstraint]) -> bool {
    eliminate(cons.to_vec(), &BTreeSet::new()).is_ok()
}

/// Eliminates every variable outside `keep`. Returns the surviving
/// constraints (all over `keep`), or Err on a constant contradiction.
fn eliminate(cons: Vec<LinConstraint>, keep: &BTreeSet<String>) -> Result<Vec<LinConstraint>, ()> {
    let mut eqs: Vec<LinConstraint> = Vec::new();
    let mut ineqs: Vec<LinConstraint> = Vec::new();
    for c in cons {
        match c.const_truth() {
            Some(true) => continue,
            Some(false) => return Err(()),
            None => {}
        }
        match c.rel {
            Rel::Eq => eqs.push(c),
            Rel::Lt | Rel::Le => ineqs.push(c),
            Rel::Ne => panic!("Ne inside elimination"),
        }
    }

    // Gaussian substitution for equalities involving eliminable variables.
    loop {
        let target = eqs.iter().enumerate().find_map(|(i, c)| {
            c.expr.vars().into_iter().find(|v| !keep.contains(v)).map(|v| (i, v))
        });
        let Some((idx, var)) = target else { break };
        let eq = eqs.remove(idx);
        let repl = eq.expr.solve_for(&var).expect("var chosen from expr");
        let subst_all = |list: Vec<LinConstraint>| -> Result<Vec<LinConstraint>, ()> {
            let mut out = Vec::new();
            for c in list {
                let c = c.substitute(&var, &repl);
                match c.const_truth() {
                    Some(true) => continue,
                    Some(false) => return Err(()),
                    None => out.push(c),
                }
            }
            Ok(out)
        };
        eqs = subst_all(eqs)?;
        ineqs = subst_all(ineqs)?;
    }

    // Fourier-Motzkin on the remaining inequalities.
    loop {
        let var = ineqs
            .iter()
            .flat_map(|c| c.expr.vars())
            .filter(|v| !keep.contains(v))
            .min();
        let Some(var) = var else { break };
        let mut uppers = Vec::new();
        let mut lowers = Vec::new();
        let mut rest = Vec::new();
        for c in ineqs {
            let a = c.expr.coeff(&var);
            if a.is_zero() {
                rest.push(c);
            } else if a.is_positive() {
                uppers.push(c);
            } else {
                lowers.push(c);
            }
        }
        for u in &uppers {
            let a = u.expr.coeff(&var);
            for l in &lowers {
                let b = -l.expr.coeff(&var);
                // b*u.expr + a*l.expr cancels var.
                let combined = u.expr.scale(&b) + l.expr.scale(&a);
                let rel = if u.rel == Rel::Lt || l.rel == Rel::Lt { Rel::Lt } else { Rel::Le };
                let c = LinConstraint::new(rel, combined);
                match c.const_truth() {
                    Some(true) => continue,
                    Some(false) => return Err(()),
                    None => {
                        if !rest.contains(&c) {
                            rest.push(c);
                        }
                    }
                }
            }
        }
        ineqs = rest;
    }

    let mut out = eqs;
    out.extend(ineqs);
    Ok(out)
}

/// Removes constraints entailed by the rest of the set.
fn drop_redundant(mut cons: Vec<LinConstraint>) -> Vec<LinConstraint> {
    let mut i = 0;
    while i < cons.len() {
        let candidate = cons[i].clone();
        let rest: Vec<LinConstraint> =
            cons.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c.clone()).collect();
        let rest_store = Store { cons: rest, unsat: false };
        if rest_store.entails(&candidate) {
            cons.remove(i);
        } else {
            i += 1;
        }
    }
    cons
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CrossingError {
    #[error("expression is identically equal to the target: infinitely many crossings")]
    DegenerateSlope,
}

/// Solves `expr(t) = target` for the single variable `tvar` inside the
/// half-open window `(lo, hi]` (no upper bound when `hi` is None).
pub fn solve_crossing(
    expr: &LinExpr,
    tvar: &str,
    target: &Rat,
    lo: &Rat,
    hi: Option<&Rat>,
) -> Result<Option<Rat>, CrossingError> {
    let a = expr.coeff(tvar);
    if a.is_zero() {
        let c = expr.as_const().cloned().unwrap_or_else(|| expr.constant.clone());
        if &c == target {
            return Err(CrossingError::DegenerateSlope);
        }
        return Ok(None);
    }
    let t = (target - expr.constant.clone()) / a;
    if &t > lo && hi.map_or(true, |h| &t <= h) {
        Ok(Some(t))
    } else {
        Ok(None)
    }
}

impl fmt::Display for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.unsat {
            return write!(f, "false");
        }
        let parts: Vec<String> = self.cons.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_frac};

    fn v(n: &str) -> LinExpr {
        LinExpr::var(n)
    }

    fn c(n: i64) -> LinExpr {
        LinExpr::constant(rat(n))
    }

    #[test]
    fn contradictory_bounds_are_unsat() {
        let s = Store::new()
            .assert_cons(&LinConstraint::le(v("x"), c(3)))
            .assert_cons(&LinConstraint::cmp(v("x"), super::super::constraint::SurfaceRel::Ge, c(5)));
        assert!(s.is_unsat());
    }

    #[test]
    fn tautology_absorbed() {
        let s = Store::new().assert_cons(&LinConstraint::eq(v("x"), v("x")));
        assert!(s.is_sat());
        assert!(s.constraints().is_empty());
    }

    #[test]
    fn gaussian_entailment() {
        // {t2 - t1 = 5, t1 = 2} entails t2 = 7
        let s = Store::new()
            .assert_cons(&LinConstraint::eq(v("t2") - v("t1"), c(5)))
            .assert_cons(&LinConstraint::eq(v("t1"), c(2)));
        assert!(s.entails(&LinConstraint::eq(v("t2"), c(7))));
        assert!(!s.entails(&LinConstraint::eq(v("t2"), c(8))));
    }

    #[test]
    fn open_interval_is_satisfiable() {
        let s = Store::new()
            .assert_cons(&LinConstraint::lt(v("x"), c(1)))
            .assert_cons(&LinConstraint::lt(c(0), v("x")));
        assert!(s.is_sat());
        let empty = Store::new()
            .assert_cons(&LinConstraint::lt(v("x"), c(0)))
            .assert_cons(&LinConstraint::lt(c(0), v("x")));
        assert!(empty.is_unsat());
    }

    #[test]
    fn substituted_bounds_infeasible() {
        // {2x + y <= 4, x >= 1, y >= 3} is infeasible: 2 + 3 > 4
        use super::super::constraint::SurfaceRel;
        let s = Store::new()
            .assert_cons(&LinConstraint::le(v("x").scale(&rat(2)) + v("y"), c(4)))
            .assert_cons(&LinConstraint::cmp(v("x"), SurfaceRel::Ge, c(1)))
            .assert_cons(&LinConstraint::cmp(v("y"), SurfaceRel::Ge, c(3)));
        assert!(s.is_unsat());
    }

    #[test]
    fn entails_upper_bound_from_equality() {
        let s = Store::new().assert_cons(&LinConstraint::eq(v("x"), c(2)));
        assert!(s.entails(&LinConstraint::le(v("x"), c(3))));
        let weaker = Store::new().assert_cons(&LinConstraint::le(v("x"), c(3)));
        assert!(!weaker.entails(&LinConstraint::eq(v("x"), c(2))));
    }

    #[test]
    fn bolus_completion_arithmetic() {
        // {t1 = 2, t2 = t1 + 20/4} entails t2 = 7
        let s = Store::new()
            .assert_cons(&LinConstraint::eq(v("t1"), c(2)))
            .assert_cons(&LinConstraint::eq(v("t2"), v("t1") + LinExpr::constant(rat_frac(20, 4))));
        assert!(s.entails(&LinConstraint::eq(v("t2"), c(7))));
    }

    #[test]
    fn projection_by_substitution() {
        // {t2 = t + 5, t2 <= 9, t >= 0} onto {t} -> {0 <= t, t <= 4}
        use super::super::constraint::SurfaceRel;
        let s = Store::new()
            .assert_cons(&LinConstraint::eq(v("t2"), v("t") + c(5)))
            .assert_cons(&LinConstraint::le(v("t2"), c(9)))
            .assert_cons(&LinConstraint::cmp(v("t"), SurfaceRel::Ge, c(0)));
        let mut keep = BTreeSet::new();
        keep.insert("t".to_string());
        let p = s.project(&keep);
        let probe = Store::new().assert_all(&p);
        assert!(probe.entails(&LinConstraint::le(v("t"), c(4))));
        assert!(probe.entails(&LinConstraint::le(c(0), v("t"))));
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn identity_projection() {
        use super::super::constraint::SurfaceRel;
        let s = Store::new()
            .assert_cons(&LinConstraint::cmp(v("t"), SurfaceRel::Ge, c(0)))
            .assert_cons(&LinConstraint::le(v("t"), c(4)));
        let mut keep = BTreeSet::new();
        keep.insert("t".to_string());
        let p = s.project(&keep);
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn equality_chain_projection() {
        let s = Store::new()
            .assert_cons(&LinConstraint::eq(v("x"), v("y")))
            .assert_cons(&LinConstraint::eq(v("y"), c(3)));
        let mut keep = BTreeSet::new();
        keep.insert("x".to_string());
        let p = s.project(&keep);
        assert_eq!(p, vec![LinConstraint::eq(v("x"), c(3))]);
    }

    #[test]
    fn complement_of_open_interval() {
        // not {t1 < t, t < t2} = {t <= t1} | {t1 < t, t2 <= t}
        let conj = vec![LinConstraint::lt(v("t1"), v("t")), LinConstraint::lt(v("t"), v("t2"))];
        let disj = complement(&conj);
        assert_eq!(disj.len(), 2);
        assert_eq!(disj[0], vec![LinConstraint::le(v("t"), v("t1"))]);
        assert_eq!(
            disj[1],
            vec![LinConstraint::lt(v("t1"), v("t")), LinConstraint::le(v("t2"), v("t"))]
        );
        // Under the context t1 < t2 the second disjunct reduces to {t >= t2}.
        let ctx = Store::new()
            .assert_cons(&LinConstraint::lt(v("t1"), v("t2")))
            .assert_all(&disj[1]);
        assert!(ctx.entails(&LinConstraint::le(v("t2"), v("t"))));
    }

    #[test]
    fn complement_of_equality_splits() {
        let disj = complement(&[LinConstraint::eq(v("x"), c(3))]);
        assert_eq!(disj.len(), 2);
        assert_eq!(disj[0], vec![LinConstraint::lt(v("x"), c(3))]);
        assert_eq!(disj[1], vec![LinConstraint::lt(c(3), v("x"))]);
    }

    #[test]
    fn complement_box_is_disjoint_cover() {
        // not {x <= 2, y <= 2} = {x > 2} | {x <= 2, y > 2}
        let conj = vec![LinConstraint::le(v("x"), c(2)), LinConstraint::le(v("y"), c(2))];
        let disj = complement(&conj);
        assert_eq!(disj.len(), 2);
        assert_eq!(disj[0], vec![LinConstraint::lt(c(2), v("x"))]);
        assert_eq!(
            disj[1],
            vec![LinConstraint::le(v("x"), c(2)), LinConstraint::lt(c(2), v("y"))]
        );
    }

    #[test]
    fn bounds_and_fixed() {
        use super::super::constraint::SurfaceRel;
        let s = Store::new()
            .assert_cons(&LinConstraint::cmp(v("t"), SurfaceRel::Ge, c(0)))
            .assert_cons(&LinConstraint::lt(v("t"), c(4)));
        let b = s.bounds(&v("t"));
        assert_eq!(b.lo, Some(Bound { value: rat(0), strict: false }));
        assert_eq!(b.hi, Some(Bound { value: rat(4), strict: true }));
        assert_eq!(s.fixed(&v("t")), None);
        let pinned = s.assert_cons(&LinConstraint::eq(v("t"), c(2)));
        assert_eq!(pinned.fixed(&v("t")), Some(rat(2)));
    }

    #[test]
    fn crossing_solutions() {
        // 4*(t - 2) = 20 in (2, _] -> 7
        let expr = (v("t") - c(2)).scale(&rat(4));
        assert_eq!(solve_crossing(&expr, "t", &rat(20), &rat(2), None), Ok(Some(rat(7))));
        // 5*t = 0 in (0, _] -> boundary excluded
        let expr2 = v("t").scale(&rat(5));
        assert_eq!(solve_crossing(&expr2, "t", &rat(0), &rat(0), None), Ok(None));
        // constant 3 never reaches 5
        assert_eq!(solve_crossing(&c(3), "t", &rat(5), &rat(0), None), Ok(None));
        // constant 3 equals 3 everywhere: degenerate
        assert_eq!(
            solve_crossing(&c(3), "t", &rat(3), &rat(0), None),
            Err(CrossingError::DegenerateSlope)
        );
    }

    #[test]
    fn sample_point_satisfies_store() {
        use super::super::constraint::SurfaceRel;
        let s = Store::new()
            .assert_cons(&LinConstraint::lt(c(0), v("x")))
            .assert_cons(&LinConstraint::lt(v("x"), c(1)))
            .assert_cons(&LinConstraint::cmp(v("y"), SurfaceRel::Ge, v("x")));
        let p = s.sample_point().unwrap();
        for cst in s.constraints() {
            assert_eq!(cst.satisfied_by(&p), Some(true));
        }
    }
}
