//! Exact sliding-window analysis of a piecewise-linear delivered-volume
//! curve: no sampling, the maximum delta over all admissible window
//! placements is computed per segment pair at polytope vertices.

use crate::clpq::{LinConstraint, LinExpr, Store, SurfaceRel};
use crate::engine::{Checkpoints, Regime};
use crate::rational::Rat;
use num_traits::Zero;
use std::collections::BTreeSet;

/// Closed segment [start, end] carrying an affine value `base + rate*(t - anchor)`.
/// The left endpoint is a closure artifact: the true curve is left-open, but
/// suprema over the closure equal suprema over the curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: Rat,
    pub end: Rat,
    pub anchor: Rat,
    pub base: Rat,
    pub rate: Rat,
}

impl Segment {
    pub fn value(&self, t: &Rat) -> Rat {
        &self.base + self.rate.clone() * (t - &self.anchor)
    }
}

/// Extracts the closed segments of a functional fluent over [0, horizon].
/// Returns None when the fluent has no value anywhere.
pub fn segments(cks: &Checkpoints, fluent: &str, horizon: &Rat) -> Option<Vec<Segment>> {
    let (at_zero, regimes) = cks.segments_of(fluent);
    let mut out = Vec::new();
    if let Some(v) = at_zero {
        out.push(Segment {
            start: Rat::zero(),
            end: Rat::zero(),
            anchor: Rat::zero(),
            base: v,
            rate: Rat::zero(),
        });
    }
    for (i, (b, regime)) in regimes.iter().enumerate() {
        let end = regimes.get(i + 1).map(|(nb, _)| nb.clone()).unwrap_or_else(|| horizon.clone());
        if &end < b {
            continue;
        }
        match regime {
            Regime::Undefined => {}
            Regime::Inertial(v) => out.push(Segment {
                start: b.clone(),
                end,
                anchor: b.clone(),
                base: v.clone(),
                rate: Rat::zero(),
            }),
            Regime::Trajectory { anchor, expr, .. } => {
                let rate = expr.coeff(crate::engine::TRAJ_VAR);
                let base = expr
                    .substitute(crate::engine::TRAJ_VAR, &LinExpr::constant(anchor.clone()))
                    .as_const()
                    .cloned()?;
                out.push(Segment { start: b.clone(), end, anchor: anchor.clone(), base, rate });
            }
        }
    }
    if out.is_empty() {
        None
    } else {
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowDelta {
    pub sup: Rat,
    pub t1: Rat,
    pub t2: Rat,
    pub v1: Rat,
    pub v2: Rat,
}

/// Supremum of value(T2) - value(T1) over T1 <= T2, T2 - T1 <= window.
/// Tie-broken toward the earliest (T1, T2); exact rational arithmetic.
pub fn max_window_delta(segments: &[Segment], window: &Rat) -> Option<WindowDelta> {
    let mut best: Option<WindowDelta> = None;
    for (i, si) in segments.iter().enumerate() {
        for (j, sj) in segments.iter().enumerate() {
            // segments are chronological; T1 must not come from a segment
            // after T2's, or the closed-left closure pairs two different
            // values at one instant
            if j < i {
                continue;
            }
            // candidate T1 values: segment ends plus window-shifted ends
            let mut t1s: BTreeSet<Rat> = BTreeSet::new();
            for cand in [
                si.start.clone(),
                si.end.clone(),
                sj.start.clone() - window,
                sj.end.clone() - window,
                sj.start.clone(),
                sj.end.clone(),
            ] {
                if cand >= si.start && cand <= si.end {
                    t1s.insert(cand);
                }
            }
            for t1 in t1s {
                let lo2 = if sj.start > t1 { sj.start.clone() } else { t1.clone() };
                let hi_window = t1.clone() + window;
                let hi2 = if sj.end < hi_window { sj.end.clone() } else { hi_window };
                if lo2 > hi2 {
                    continue;
                }
                for t2 in [lo2, hi2] {
                    let v1 = si.value(&t1);
                    let v2 = sj.value(&t2);
                    let delta = v2.clone() - v1.clone();
                    let better = match &best {
                        None => true,
                        Some(b) => {
                            delta > b.sup
                                || (delta == b.sup
                                    && (t1 < b.t1 || (t1 == b.t1 && t2 < b.t2)))
                        }
                    };
                    if better {
                        best = Some(WindowDelta {
                            sup: delta,
                            t1: t1.clone(),
                            t2: t2.clone(),
                            v1,
                            v2,
                        });
                    }
                }
            }
        }
    }
    best
}

/// Symbolic window analysis: regions over the `max_volume` / `window`
/// variables for which some window placement exceeds the volume bound.
/// Each satisfiable segment pair contributes one convex region; regions
/// subsumed by another are dropped.
pub fn violation_regions(
    segments: &[Segment],
    max_var: &str,
    window_var: &str,
    fixed: &[(String, Rat)],
) -> Vec<Vec<LinConstraint>> {
    let t1 = LinExpr::var("!t1");
    let t2 = LinExpr::var("!t2");
    let m = LinExpr::var(max_var);
    let w = LinExpr::var(window_var);
    // fixed parameters are pinned, not part of the answer region
    let mut keep: BTreeSet<String> = BTreeSet::new();
    keep.insert(max_var.to_string());
    keep.insert(window_var.to_string());
    for (name, _) in fixed {
        keep.remove(name);
    }

    let mut regions: Vec<Vec<LinConstraint>> = Vec::new();
    for (i, si) in segments.iter().enumerate() {
        for (j, sj) in segments.iter().enumerate() {
            if j < i {
                continue;
            }
            let v1 = LinExpr::constant(si.base.clone())
                + (t1.clone() - LinExpr::constant(si.anchor.clone())).scale(&si.rate);
            let v2 = LinExpr::constant(sj.base.clone())
                + (t2.clone() - LinExpr::constant(sj.anchor.clone())).scale(&sj.rate);
            let mut store = Store::new()
                .assert_cons(&LinConstraint::le(LinExpr::constant(si.start.clone()), t1.clone()))
                .assert_cons(&LinConstraint::le(t1.clone(), LinExpr::constant(si.end.clone())))
                .assert_cons(&LinConstraint::le(LinExpr::constant(sj.start.clone()), t2.clone()))
                .assert_cons(&LinConstraint::le(t2.clone(), LinExpr::constant(sj.end.clone())))
                .assert_cons(&LinConstraint::le(t1.clone(), t2.clone()))
                .assert_cons(&LinConstraint::le(t2.clone() - t1.clone(), w.clone()))
                .assert_cons(&LinConstraint::cmp(v2 - v1, SurfaceRel::Gt, m.clone()))
                .assert_cons(&LinConstraint::le(LinExpr::zero(), m.clone()))
                .assert_cons(&LinConstraint::le(LinExpr::zero(), w.clone()));
            for (name, value) in fixed {
                store = store.assert_cons(&LinConstraint::eq(
                    LinExpr::var(name.clone()),
                    LinExpr::constant(value.clone()),
                ));
            }
            if store.is_unsat() {
                continue;
            }
            let mut region = store.project(&keep);
            region.sort_by_key(|c| c.to_string());
            if !regions.contains(&region) {
                regions.push(region);
            }
        }
    }

    // drop regions contained in another; of mutually equal solution sets the
    // first keeps its slot
    let mut out: Vec<Vec<LinConstraint>> = Vec::new();
    for (i, r) in regions.iter().enumerate() {
        let mut subsumed = false;
        for (j, other) in regions.iter().enumerate() {
            if i == j {
                continue;
            }
            if region_contains(other, r) {
                if region_contains(r, other) && i < j {
                    continue; // r represents the equivalence class
                }
                subsumed = true;
                break;
            }
        }
        if !subsumed && !out.contains(r) {
            out.push(r.clone());
        }
    }
    out
}

/// True when every point of `inner` lies in `outer`.
fn region_contains(outer: &[LinConstraint], inner: &[LinConstraint]) -> bool {
    let inner_store = Store::new().assert_all(inner);
    if inner_store.is_unsat() {
        return true;
    }
    outer.iter().all(|c| inner_store.entails(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn flat(start: i64, end: i64, v: i64) -> Segment {
        Segment { start: rat(start), end: rat(end), anchor: rat(start), base: rat(v), rate: rat(0) }
    }

    fn ramp(start: i64, end: i64, base: i64, rate: i64) -> Segment {
        Segment {
            start: rat(start),
            end: rat(end),
            anchor: rat(start),
            base: rat(base),
            rate: rat(rate),
        }
    }

    #[test]
    fn max_delta_on_single_ramp() {
        // value climbs at rate 5 on [2, 7]: a width-2 window captures 10
        let segs =
            vec![flat(0, 2, 0), ramp(2, 7, 0, 5), flat(7, 10, 25)];
        let d = max_window_delta(&segs, &rat(2)).unwrap();
        assert_eq!(d.sup, rat(10));
        assert_eq!((d.t1, d.t2), (rat(2), rat(4)));
    }

    #[test]
    fn wide_window_captures_whole_ramp() {
        let segs = vec![flat(0, 2, 0), ramp(2, 7, 0, 5), flat(7, 10, 25)];
        let d = max_window_delta(&segs, &rat(6)).unwrap();
        assert_eq!(d.sup, rat(25));
    }

    #[test]
    fn flat_curve_has_zero_delta() {
        let segs = vec![flat(0, 10, 4)];
        let d = max_window_delta(&segs, &rat(3)).unwrap();
        assert_eq!(d.sup, rat(0));
    }
}
