//! Engine error types.

use crate::model::NonStratifiedError;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("zeno guard hit: {bound} triggered events without a fixpoint; last additions: {last:?}")]
    Zeno { bound: usize, last: Vec<String> },
    #[error("goal depth bound {bound} exceeded")]
    DepthExceeded { bound: usize },
    #[error("non-linear expression during evaluation: {0}")]
    NonLinear(String),
    #[error("symbolic constant `{0}` used in arithmetic")]
    SymbolInArithmetic(String),
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error(transparent)]
    NonStratified(#[from] NonStratifiedError),
    #[error("model has {0} error diagnostic(s); run validation for details")]
    InvalidModel(usize),
    #[error("no value for functional fluent {fluent} at {time}")]
    NoValue { fluent: String, time: String },
    #[error("conflicting values {values:?} for functional fluent {fluent} at {time}")]
    MultiValue { fluent: String, time: String, values: Vec<String> },
    #[error("trigger {rule} fired at {time} with unbound event arguments")]
    UnboundTriggerArgs { rule: String, time: String },
    #[error("query uses undeclared fluent or event `{0}`")]
    UnknownName(String),
    #[error("{0}")]
    Unsupported(String),
}
