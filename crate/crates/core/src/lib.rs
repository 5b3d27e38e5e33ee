//! Goal-directed Event Calculus reasoning over exact rational time.

pub mod abduce;
pub mod clpq;
pub mod model;
pub mod oracle;
pub mod diag;
pub mod engine;
pub mod rational;
pub mod validate;
