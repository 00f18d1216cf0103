//! Self-contained JSON documents for single automata (pipeline artifacts).

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::problem::{
    build_automaton, build_table, event_ref, raw_automaton, raw_flags, resolve_event, Collector,
    EventRef, ParseError, RawAutomaton, RawFlags, RawTransition,
};
use crate::automata::event::DEFAULT_MAX_CONTROLLABLE;
use crate::automata::{Automaton, EventSet, EventTable, StateRole};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomatonDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub events: Vec<String>,
    pub flags: RawFlags,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_controllable: Option<usize>,
    /// Events the automaton is defined over; every event when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<Vec<EventRef>>,
    pub states: Vec<String>,
    pub initial: String,
    #[serde(default)]
    pub marked: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub roles: BTreeMap<String, String>,
    pub transitions: Vec<RawTransition>,
}

/// Parses an automaton document into its event table and automaton.
pub fn parse_automaton(text: &str) -> Result<(Arc<EventTable>, Automaton), ParseError> {
    let doc: AutomatonDoc = serde_json::from_str(text)?;
    automaton_from_doc(&doc)
}

pub fn automaton_from_doc(doc: &AutomatonDoc) -> Result<(Arc<EventTable>, Automaton), ParseError> {
    let mut c = Collector::default();
    let limit = doc.max_controllable.unwrap_or(DEFAULT_MAX_CONTROLLABLE);
    let Some(table) = build_table(&doc.events, &doc.flags, limit, &mut c) else {
        return Err(ParseError::Schema(c.violations));
    };
    let alphabet: EventSet = match &doc.alphabet {
        None => table.sigma_gamma(),
        Some(refs) => {
            let mut set = EventSet::new();
            for (i, r) in refs.iter().enumerate() {
                match resolve_event(&table, r) {
                    Ok(ev) => {
                        set.insert(ev);
                    }
                    Err(m) => c.push(format!("alphabet[{i}]"), m),
                }
            }
            set
        }
    };
    let raw = RawAutomaton {
        states: doc.states.clone(),
        initial: doc.initial.clone(),
        damage: None,
        marked: None,
        transitions: doc.transitions.clone(),
    };
    let a = build_automaton(
        &table,
        alphabet,
        "",
        &raw,
        Some(&doc.marked),
        &doc.roles,
        &mut c,
    );
    match a {
        Some(a) if c.violations.is_empty() => Ok((table, a)),
        _ => {
            for v in &mut c.violations {
                v.path = v.path.trim_start_matches('.').to_string();
            }
            Err(ParseError::Schema(c.violations))
        }
    }
}

pub fn automaton_to_doc(a: &Automaton, name: Option<&str>) -> AutomatonDoc {
    let table = a.table();
    let raw = raw_automaton(a);
    let alphabet = (*a.alphabet() != table.sigma_gamma())
        .then(|| a.alphabet().iter().map(|e| event_ref(table, *e)).collect());
    let roles = a
        .states()
        .filter(|q| a.role(*q) != StateRole::Plain)
        .map(|q| (a.label(q).to_string(), a.role(q).name().to_string()))
        .collect();
    let limit = table.controllable().len();
    AutomatonDoc {
        name: name.map(str::to_string),
        events: table
            .plain_events()
            .map(|e| table.name(e).to_string())
            .collect(),
        flags: raw_flags(table),
        max_controllable: (limit > DEFAULT_MAX_CONTROLLABLE).then_some(limit),
        alphabet,
        states: raw.states,
        initial: raw.initial,
        marked: a.marked_states().map(|q| a.label(q).to_string()).collect(),
        roles,
        transitions: raw.transitions,
    }
}

/// Serializes an automaton as a pretty-printed JSON document.
pub fn serialize_automaton(a: &Automaton, name: Option<&str>) -> String {
    serde_json::to_string_pretty(&automaton_to_doc(a, name)).expect("document serializes")
}
