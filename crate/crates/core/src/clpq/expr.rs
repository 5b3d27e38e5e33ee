//! Linear expressions over named rational variables.

use crate::rational::{rat_str, Rat};
use num_traits::{Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// `sum(coeff_i * var_i) + constant`, coefficients exact rationals.
/// Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinExpr {
    pub coeffs: BTreeMap<String, Rat>,
    pub constant: Rat,
}

impl LinExpr {
    pub fn constant(c: Rat) -> Self {
        LinExpr { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn zero() -> Self {
        Self::constant(Rat::zero())
    }

    pub fn var(name: impl Into<String>) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(name.into(), Rat::from_integer(1.into()));
        LinExpr { coeffs, constant: Rat::zero() }
    }

    pub fn is_const(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn as_const(&self) -> Option<&Rat> {
        if self.is_const() {
            Some(&self.constant)
        } else {
            None
        }
    }

    pub fn coeff(&self, var: &str) -> Rat {
        self.coeffs.get(var).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.coeffs.keys().cloned().collect()
    }

    pub fn scale(&self, k: &Rat) -> LinExpr {
        if k.is_zero() {
            return LinExpr::zero();
        }
        LinExpr {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    fn insert(&mut self, var: String, c: Rat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.coeffs.entry(var) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    /// Replaces `var` by `repl` everywhere.
    pub fn substitute(&self, var: &str, repl: &LinExpr) -> LinExpr {
        match self.coeffs.get(var) {
            None => self.clone(),
            Some(c) => {
                let c = c.clone();
                let mut out = self.clone();
                out.coeffs.remove(var);
                out + repl.scale(&c)
            }
        }
    }

    pub fn eval(&self, assignment: &BTreeMap<String, Rat>) -> Option<Rat> {
        let mut total = self.constant.clone();
        for (v, c) in &self.coeffs {
            total += c * assignment.get(v)?;
        }
        Some(total)
    }

    /// Given `self = 0` with a nonzero coefficient on `var`, returns the
    /// expression `var` equals.
    pub fn solve_for(&self, var: &str) -> Option<LinExpr> {
        let c = self.coeffs.get(var)?;
        if c.is_zero() {
            return None;
        }
        let mut rest = self.clone();
        rest.coeffs.remove(var);
        Some(rest.scale(&(-Rat::from_integer(1.into()) / c)))
    }

    /// Splits into (positive part, negative part) so that
    /// `self = pos - neg` with all displayed coefficients positive.
    pub fn split_signs(&self) -> (LinExpr, LinExpr) {
        let mut pos = LinExpr::zero();
        let mut neg = LinExpr::zero();
        for (v, c) in &self.coeffs {
            if c.is_positive() {
                pos.insert(v.clone(), c.clone());
            } else {
                neg.insert(v.clone(), -c.clone());
            }
        }
        if self.constant.is_positive() {
            pos.constant = self.constant.clone();
        } else if self.constant.is_negative() {
            neg.constant = -self.constant.clone();
        }
        (pos, neg)
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(self, rhs: LinExpr) -> LinExpr {
        let mut out = self;
        for (v, c) in rhs.coeffs {
            out.insert(v, c);
        }
        out.constant += rhs.constant;
        out
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: LinExpr) -> LinExpr {
        self + (-rhs)
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scale(&-Rat::from_integer(1.into()))
    }
}

impl Mul<Rat> for LinExpr {
    type Output = LinExpr;
    fn mul(self, k: Rat) -> LinExpr {
        self.scale(&k)
    }
}

impl From<Rat> for LinExpr {
    fn from(c: Rat) -> Self {
        LinExpr::constant(c)
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            if first {
                if crate::rational::is_one(c) {
                    write!(f, "{v}")?;
                } else if crate::rational::is_neg_one(c) {
                    write!(f, "-{v}")?;
                } else {
                    write!(f, "{}*{v}", rat_str(c))?;
                }
                first = false;
            } else if c.is_negative() {
                let a = -c.clone();
                if crate::rational::is_one(&a) {
                    write!(f, " - {v}")?;
                } else {
                    write!(f, " - {}*{v}", rat_str(&a))?;
                }
            } else if crate::rational::is_one(c) {
                write!(f, " + {v}")?;
            } else {
                write!(f, " + {}*{v}", rat_str(c))?;
            }
        }
        if first {
            write!(f, "{}", rat_str(&self.constant))?;
        } else if self.constant.is_positive() {
            write!(f, " + {}", rat_str(&self.constant))?;
        } else if self.constant.is_negative() {
            write!(f, " - {}", rat_str(&-self.constant.clone()))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_frac};

    #[test]
    fn arithmetic_cancels_exactly() {
        let e = LinExpr::var("x").scale(&rat_frac(1, 3))
            + LinExpr::var("x").scale(&rat_frac(2, 3))
            - LinExpr::var("x");
        assert!(e.is_const());
        assert_eq!(e.constant, rat(0));
    }

    #[test]
    fn solve_for_isolates_variable() {
        // 2x + 3y - 6 = 0  =>  x = 3 - 3/2 y
        let e = LinExpr::var("x").scale(&rat(2)) + LinExpr::var("y").scale(&rat(3))
            - LinExpr::constant(rat(6));
        let x = e.solve_for("x").unwrap();
        assert_eq!(x.constant, rat(3));
        assert_eq!(x.coeff("y"), rat_frac(-3, 2));
    }

    #[test]
    fn substitute_eliminates() {
        let e = LinExpr::var("t2") - LinExpr::var("t1");
        let r = e.substitute("t2", &(LinExpr::var("t1") + LinExpr::constant(rat(5))));
        assert_eq!(r.as_const(), Some(&rat(5)));
    }
}
