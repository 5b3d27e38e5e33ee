//! Domain model: the clause DSL, its parser, serializer and validators.

mod ast;
mod lexer;
mod parser;
mod pretty;
mod strat;
mod validate;

pub use ast::{
    Atom, Clause, ClauseKind, DomainModel, FluentKind, FluentSig, GroundAtom, GroundTerm, Literal,
    Narrative, Occurrence, Span, Term,
};
pub use lexer::ParseError;
pub use parser::{
    interpret_narrative, parse_domain, parse_goal, parse_narrative, parse_program,
    parse_scenario, NarrativeError, RawExpect, ScenarioFile, TimingKind,
};
pub use strat::{stratification_check, NonStratifiedError};
pub use validate::validate_model;
