//! Exact linear-rational constraint solving: the substrate for
//! continuous-time reasoning and non-ground answers.

mod constraint;
mod expr;
mod store;

pub use constraint::{LinConstraint, Rel, SurfaceRel};
pub use expr::LinExpr;
pub use store::{complement, solve_crossing, Bound, Bounds, CrossingError, Store};
