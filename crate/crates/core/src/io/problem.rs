//! JSON problem files: event declarations, a plant with damage states and a
//! supervisor.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::automata::event::DEFAULT_MAX_CONTROLLABLE;
use crate::automata::{
    Automaton, Builder, EventDecl, EventFlags, EventId, EventTable, StateId, StateLabel, StateRole,
};

/// One schema problem, located by a JSON path such as
/// `plant.transitions[3].event`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaViolation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{} schema violation(s), first: {}", .0.len(), .0[0])]
    Schema(Vec<SchemaViolation>),
}

impl ParseError {
    pub fn violations(&self) -> Vec<SchemaViolation> {
        match self {
            ParseError::Json(e) => vec![SchemaViolation {
                path: format!("line {} column {}", e.line(), e.column()),
                message: e.to_string(),
            }],
            ParseError::Schema(v) => v.clone(),
        }
    }
}

/// Reference to an event: a plain event by name, or a command by members.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EventRef {
    Name(String),
    Command {
        #[serde(rename = "type")]
        kind: String,
        events: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTransition {
    pub from: String,
    pub event: EventRef,
    pub to: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFlags {
    #[serde(default)]
    pub controllable: Vec<String>,
    #[serde(default)]
    pub observable: Vec<String>,
    #[serde(default)]
    pub attacker_observable: Vec<String>,
    #[serde(default)]
    pub attacker_controllable: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAutomaton {
    pub states: Vec<String>,
    pub initial: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damage: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marked: Option<Vec<String>>,
    pub transitions: Vec<RawTransition>,
}

/// Command selection policy for extracting one supervisor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PickerPolicy {
    #[default]
    Lexicographic,
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default)]
    pub picker: PickerPolicy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_controllable")]
    pub max_controllable: usize,
    #[serde(default = "default_depth")]
    pub depth_limit: usize,
}

fn default_max_controllable() -> usize {
    DEFAULT_MAX_CONTROLLABLE
}

fn default_depth() -> usize {
    6
}

impl Default for Options {
    fn default() -> Self {
        Options {
            picker: PickerPolicy::default(),
            seed: 0,
            max_controllable: DEFAULT_MAX_CONTROLLABLE,
            depth_limit: default_depth(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawProblem {
    pub events: Vec<String>,
    pub flags: RawFlags,
    pub plant: RawAutomaton,
    pub supervisor: RawAutomaton,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Options>,
}

/// A validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub table: Arc<EventTable>,
    /// The plant, marked exactly at its damage states.
    pub plant: Automaton,
    pub supervisor: Automaton,
    pub damage: Vec<StateId>,
    pub options: Options,
}

/// Collects violations while converting raw documents.
#[derive(Default)]
pub(crate) struct Collector {
    pub violations: Vec<SchemaViolation>,
}

impl Collector {
    pub fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(SchemaViolation {
            path: path.into(),
            message: message.into(),
        });
    }
}

pub(crate) fn build_table(
    events: &[String],
    flags: &RawFlags,
    max_controllable: usize,
    c: &mut Collector,
) -> Option<Arc<EventTable>> {
    let mut decls: Vec<EventDecl> = events
        .iter()
        .map(|e| EventDecl::new(e.clone(), EventFlags::default()))
        .collect();
    let index: HashMap<&str, usize> = events
        .iter()
        .enumerate()
        .map(|(i, e)| (e.as_str(), i))
        .collect();
    type Group<'a> = (&'a str, &'a Vec<String>, fn(&mut EventFlags));
    let groups: [Group; 4] = [
        ("controllable", &flags.controllable, |f| {
            f.controllable = true
        }),
        ("observable", &flags.observable, |f| f.observable = true),
        ("attacker_observable", &flags.attacker_observable, |f| {
            f.attacker_observable = true
        }),
        ("attacker_controllable", &flags.attacker_controllable, |f| {
            f.attacker_controllable = true
        }),
    ];
    let before = c.violations.len();
    for (key, names, set) in groups {
        for (i, name) in names.iter().enumerate() {
            match index.get(name.as_str()) {
                Some(k) => set(&mut decls[*k].flags),
                None => c.push(
                    format!("flags.{key}[{i}]"),
                    format!("unknown event {name:?}"),
                ),
            }
        }
    }
    if c.violations.len() > before {
        return None;
    }
    match EventTable::with_limit(&decls, max_controllable) {
        Ok(t) => Some(Arc::new(t)),
        Err(e) => {
            c.push("flags", e.to_string());
            None
        }
    }
}

pub(crate) fn resolve_event(table: &EventTable, r: &EventRef) -> Result<EventId, String> {
    match r {
        EventRef::Name(n) => match table.lookup(n) {
            Some(ev) if table.is_plain(ev) => Ok(ev),
            _ => Err(format!("unknown event {n:?}")),
        },
        EventRef::Command { kind, events } => {
            if kind != "command" {
                return Err(format!("unknown event type {kind:?}"));
            }
            let mut members = crate::automata::PlainSet::default();
            for n in events {
                match table.lookup(n) {
                    Some(ev) if table.is_plain(ev) => members.insert(ev),
                    _ => return Err(format!("unknown event {n:?} in command")),
                }
            }
            table
                .command_for(members)
                .ok_or_else(|| "command does not contain every uncontrollable event".to_string())
        }
    }
}

pub(crate) fn event_ref(table: &EventTable, ev: EventId) -> EventRef {
    if table.is_command(ev) {
        EventRef::Command {
            kind: "command".into(),
            events: table
                .command_member_names(ev)
                .into_iter()
                .map(str::to_string)
                .collect(),
        }
    } else {
        EventRef::Name(table.name(ev).to_string())
    }
}

/// Builds an automaton from a raw description. `marked` names the marked
/// states; `roles` assigns non-plain roles.
pub(crate) fn build_automaton(
    table: &Arc<EventTable>,
    alphabet: crate::automata::EventSet,
    path: &str,
    raw: &RawAutomaton,
    marked: Option<&[String]>,
    roles: &BTreeMap<String, String>,
    c: &mut Collector,
) -> Option<Automaton> {
    let before = c.violations.len();
    let mut b = Builder::new(table.clone(), alphabet);
    let mut ids: HashMap<&str, StateId> = HashMap::new();
    if raw.states.is_empty() {
        c.push(format!("{path}.states"), "at least one state is required");
    }
    for (i, name) in raw.states.iter().enumerate() {
        let role = match roles.get(name) {
            Some(r) => StateRole::from_name(r).unwrap_or_else(|| {
                c.push(
                    format!("{path}.roles.{name}"),
                    format!("unknown role {r:?}"),
                );
                StateRole::Plain
            }),
            None => StateRole::Plain,
        };
        let (id, created) = b.intern(StateLabel::atom(name.clone()), role);
        if !created {
            c.push(
                format!("{path}.states[{i}]"),
                format!("duplicate state {name:?}"),
            );
        }
        ids.insert(name, id);
    }
    for name in roles.keys() {
        if !ids.contains_key(name.as_str()) {
            c.push(format!("{path}.roles.{name}"), "unknown state");
        }
    }
    let initial = ids.get(raw.initial.as_str()).copied();
    if initial.is_none() {
        c.push(
            format!("{path}.initial"),
            format!("unknown state {:?}", raw.initial),
        );
    }
    if let Some(marked) = marked {
        for (i, name) in marked.iter().enumerate() {
            match ids.get(name.as_str()) {
                Some(q) => b.mark(*q),
                None => c.push(
                    format!("{path}.marked[{i}]"),
                    format!("unknown state {name:?}"),
                ),
            }
        }
    }
    for (i, t) in raw.transitions.iter().enumerate() {
        let here = format!("{path}.transitions[{i}]");
        let from = ids.get(t.from.as_str()).copied();
        let to = ids.get(t.to.as_str()).copied();
        if from.is_none() {
            c.push(
                format!("{here}.from"),
                format!("unknown state {:?}", t.from),
            );
        }
        if to.is_none() {
            c.push(format!("{here}.to"), format!("unknown state {:?}", t.to));
        }
        let ev = match resolve_event(table, &t.event) {
            Ok(ev) => Some(ev),
            Err(m) => {
                c.push(format!("{here}.event"), m);
                None
            }
        };
        if let (Some(from), Some(to), Some(ev)) = (from, to, ev) {
            if let Err(e) = b.try_transition(from, ev, to) {
                c.push(here, e.to_string());
            }
        }
    }
    if c.violations.len() > before {
        return None;
    }
    Some(b.build(initial?))
}

/// Parses and validates a problem document.
pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    let raw: RawProblem = serde_json::from_str(text)?;
    problem_from_raw(&raw)
}

pub fn problem_from_raw(raw: &RawProblem) -> Result<Problem, ParseError> {
    let mut c = Collector::default();
    let options = raw.options.clone().unwrap_or_default();
    let Some(table) = build_table(&raw.events, &raw.flags, options.max_controllable, &mut c) else {
        return Err(ParseError::Schema(c.violations));
    };
    if raw.plant.marked.is_some() {
        c.push("plant.marked", "the plant is marked by its damage states");
    }
    if raw.supervisor.damage.is_some() {
        c.push("supervisor.damage", "only the plant has damage states");
    }
    let damage_names: Vec<String> = raw.plant.damage.clone().unwrap_or_default();
    let no_roles = BTreeMap::new();
    let plant = build_automaton(
        &table,
        table.sigma(),
        "plant",
        &raw.plant,
        Some(&damage_names),
        &no_roles,
        &mut c,
    );
    let all_states = raw.supervisor.states.clone();
    let sup_marked = raw.supervisor.marked.as_deref().unwrap_or(&all_states);
    let supervisor = build_automaton(
        &table,
        table.sigma(),
        "supervisor",
        &raw.supervisor,
        Some(sup_marked),
        &no_roles,
        &mut c,
    );
    if let Some(s) = &supervisor {
        for v in crate::attack::validate_supervisor(s) {
            c.push("supervisor", v.to_string());
        }
    }
    if !c.violations.is_empty() {
        return Err(ParseError::Schema(c.violations));
    }
    let (plant, supervisor) = (plant.expect("valid"), supervisor.expect("valid"));
    let damage = plant.marked_states().collect();
    Ok(Problem {
        table,
        plant,
        supervisor,
        damage,
        options,
    })
}

pub(crate) fn raw_flags(table: &EventTable) -> RawFlags {
    let names = |set: crate::automata::PlainSet| -> Vec<String> {
        set.iter().map(|e| table.name(e).to_string()).collect()
    };
    RawFlags {
        controllable: names(table.controllable()),
        observable: names(table.observable()),
        attacker_observable: names(table.attacker_observable()),
        attacker_controllable: names(table.attacker_controllable()),
    }
}

pub(crate) fn raw_automaton(a: &Automaton) -> RawAutomaton {
    let table = a.table();
    RawAutomaton {
        states: a.states().map(|q| a.label(q).to_string()).collect(),
        initial: a.label(a.initial()).to_string(),
        damage: None,
        marked: None,
        transitions: a
            .transitions()
            .map(|(q, e, t)| RawTransition {
                from: a.label(q).to_string(),
                event: event_ref(table, e),
                to: a.label(t).to_string(),
            })
            .collect(),
    }
}

pub fn problem_to_raw(p: &Problem) -> RawProblem {
    let table = &p.table;
    let mut plant = raw_automaton(&p.plant);
    plant.damage = Some(
        p.damage
            .iter()
            .map(|q| p.plant.label(*q).to_string())
            .collect(),
    );
    let mut supervisor = raw_automaton(&p.supervisor);
    let marked: Vec<String> = p
        .supervisor
        .marked_states()
        .map(|q| p.supervisor.label(q).to_string())
        .collect();
    if marked.len() != p.supervisor.state_count() {
        supervisor.marked = Some(marked);
    }
    RawProblem {
        events: table
            .plain_events()
            .map(|e| table.name(e).to_string())
            .collect(),
        flags: raw_flags(table),
        plant,
        supervisor,
        options: (p.options != Options::default()).then(|| p.options.clone()),
    }
}

/// Serializes a problem as pretty-printed JSON.
pub fn serialize_problem(p: &Problem) -> String {
    serde_json::to_string_pretty(&problem_to_raw(p)).expect("problem serializes")
}
