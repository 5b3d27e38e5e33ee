//! Exact rational arithmetic helpers.
//!
//! Every quantity in the engine (time points, fluent values, constraint
//! coefficients) is an arbitrary-precision rational. No floating point
//! anywhere.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Renders `p/q`, or just `p` when the denominator is 1.
pub fn rat_str(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact conversion of a decimal literal split at the point: "12", "25" -> 49/4.
pub fn rat_from_decimal(whole: &str, frac: &str) -> Option<Rat> {
    let w: BigInt = whole.parse().ok()?;
    if frac.is_empty() {
        return Some(Rat::from_integer(w));
    }
    let f: BigInt = frac.parse().ok()?;
    let scale = BigInt::from(10u32).pow(frac.len() as u32);
    Some(Rat::from_integer(w) + Rat::new(f, scale))
}

/// Parses "p", "p/q" or "p.q" exactly. Used by tests and the CLI flag parser;
/// DSL sources go through the full lexer instead.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    let (neg, s) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let r = if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Rat::new(n, d)
    } else if let Some((w, f)) = s.split_once('.') {
        rat_from_decimal(w.trim(), f.trim())?
    } else {
        Rat::from_integer(s.parse().ok()?)
    };
    Some(if neg { -r } else { r })
}

pub fn is_one(r: &Rat) -> bool {
    r.is_one()
}

pub fn is_neg_one(r: &Rat) -> bool {
    (-r).is_one()
}

pub fn abs(r: &Rat) -> Rat {
    r.abs()
}
