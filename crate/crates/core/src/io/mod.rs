//! File formats: JSON problems and automaton documents, DOT export.

pub mod document;
pub mod dot;
pub mod problem;

pub use document::{parse_automaton, serialize_automaton, AutomatonDoc};
pub use dot::{export_dot, DotStyle};
pub use problem::{
    parse_problem, serialize_problem, Options, ParseError, PickerPolicy, Problem, SchemaViolation,
};
