//! Deterministic finite automata and the operations on them.

pub mod automaton;
pub mod event;
pub mod label;
pub mod language;
pub mod ops;

pub use automaton::{Automaton, Builder, StateId, StateRole};
pub use event::{EventDecl, EventFlags, EventId, EventSet, EventTable, PlainSet};
pub use label::StateLabel;
