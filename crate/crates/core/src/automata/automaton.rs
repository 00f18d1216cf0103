use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::event::{EventId, EventSet, EventTable, PlainSet};
use super::label::StateLabel;
use crate::error::{ModelError, Result};

/// Index of a state inside one [`Automaton`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Structural role of a state in bipartite structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum StateRole {
    #[default]
    Plain,
    /// Ready to issue a command.
    Control,
    /// Ready to receive events of the issued command.
    Reaction,
    /// The supervisor has detected an attack.
    Detect,
    /// Absorbing state reached on observations that cannot happen.
    Dump,
}

impl StateRole {
    pub fn name(self) -> &'static str {
        match self {
            StateRole::Plain => "plain",
            StateRole::Control => "control",
            StateRole::Reaction => "reaction",
            StateRole::Detect => "detect",
            StateRole::Dump => "dump",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "plain" => StateRole::Plain,
            "control" => StateRole::Control,
            "reaction" => StateRole::Reaction,
            "detect" => StateRole::Detect,
            "dump" => StateRole::Dump,
            _ => return None,
        })
    }

    /// Role of a product state from the roles of its components.
    pub(crate) fn combine(roles: impl IntoIterator<Item = StateRole>) -> StateRole {
        let mut best = StateRole::Plain;
        for r in roles {
            let rank = |r: StateRole| match r {
                StateRole::Detect => 4,
                StateRole::Control => 3,
                StateRole::Reaction => 2,
                StateRole::Dump => 1,
                StateRole::Plain => 0,
            };
            if rank(r) > rank(best) {
                best = r;
            }
        }
        best
    }
}

/// A deterministic finite automaton over a subset of an [`EventTable`].
///
/// The transition function is partial: an absent entry means undefined.
/// Automata are immutable once built.
#[derive(Debug, Clone)]
pub struct Automaton {
    table: Arc<EventTable>,
    alphabet: EventSet,
    labels: Vec<StateLabel>,
    roles: Vec<StateRole>,
    delta: Vec<BTreeMap<EventId, StateId>>,
    initial: StateId,
    marked: Vec<bool>,
}

impl Automaton {
    pub fn table(&self) -> &Arc<EventTable> {
        &self.table
    }

    pub fn alphabet(&self) -> &EventSet {
        &self.alphabet
    }

    pub fn state_count(&self) -> usize {
        self.labels.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.labels.len() as u32).map(StateId)
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn label(&self, q: StateId) -> &StateLabel {
        &self.labels[q.index()]
    }

    pub fn role(&self, q: StateId) -> StateRole {
        self.roles[q.index()]
    }

    pub fn is_marked(&self, q: StateId) -> bool {
        self.marked[q.index()]
    }

    pub fn marked_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.states().filter(|q| self.is_marked(*q))
    }

    pub fn transitions_from(&self, q: StateId) -> &BTreeMap<EventId, StateId> {
        &self.delta[q.index()]
    }

    /// All transitions as `(source, event, target)` triples.
    pub fn transitions(&self) -> impl Iterator<Item = (StateId, EventId, StateId)> + '_ {
        self.states()
            .flat_map(move |q| self.delta[q.index()].iter().map(move |(e, t)| (q, *e, *t)))
    }

    pub fn transition_count(&self) -> usize {
        self.delta.iter().map(BTreeMap::len).sum()
    }

    pub fn step(&self, q: StateId, ev: EventId) -> Option<StateId> {
        self.delta[q.index()].get(&ev).copied()
    }

    /// `En(q)`: the events defined at `q`.
    pub fn enabled(&self, q: StateId) -> EventSet {
        self.delta[q.index()].keys().copied().collect()
    }

    /// Plain events defined at `q` as a bitmask.
    pub fn enabled_plain(&self, q: StateId) -> PlainSet {
        self.delta[q.index()]
            .keys()
            .filter(|e| self.table.is_plain(**e))
            .copied()
            .collect()
    }

    /// Command events defined at `q`.
    pub fn enabled_commands(&self, q: StateId) -> Vec<EventId> {
        self.delta[q.index()]
            .keys()
            .filter(|e| self.table.is_command(**e))
            .copied()
            .collect()
    }

    /// Extended transition function from the initial state.
    pub fn run(&self, word: &[EventId]) -> Option<StateId> {
        self.run_from(self.initial, word)
    }

    pub fn run_from(&self, mut q: StateId, word: &[EventId]) -> Option<StateId> {
        for ev in word {
            q = self.step(q, *ev)?;
        }
        Some(q)
    }

    pub fn accepts(&self, word: &[EventId]) -> bool {
        self.run(word).is_some()
    }

    pub fn find_state(&self, label: &StateLabel) -> Option<StateId> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| StateId(i as u32))
    }

    /// Copy with a different marking.
    pub fn with_marking(&self, mut marked: impl FnMut(StateId) -> bool) -> Automaton {
        let mut out = self.clone();
        for q in self.states() {
            out.marked[q.index()] = marked(q);
        }
        out
    }

    /// Copy with different roles.
    pub fn with_roles(&self, mut role: impl FnMut(StateId) -> StateRole) -> Automaton {
        let mut out = self.clone();
        for q in self.states() {
            out.roles[q.index()] = role(q);
        }
        out
    }

    /// Starts a builder that copies this automaton's states and transitions.
    pub fn to_builder(&self) -> Builder {
        let mut b = Builder::new(self.table.clone(), self.alphabet.clone());
        for q in self.states() {
            let id = b.add_state(self.labels[q.index()].clone(), self.roles[q.index()]);
            debug_assert_eq!(id, q);
            if self.marked[q.index()] {
                b.mark(id);
            }
        }
        for (q, e, t) in self.transitions() {
            b.transition(q, e, t);
        }
        b
    }

    /// A builder holding this automaton's states, roles and marking but no
    /// transitions.
    pub fn to_builder_without_transitions(&self) -> Builder {
        let mut b = Builder::new(self.table.clone(), self.alphabet.clone());
        for q in self.states() {
            let id = b.add_state(self.labels[q.index()].clone(), self.roles[q.index()]);
            if self.marked[q.index()] {
                b.mark(id);
            }
        }
        b
    }

    pub(crate) fn same_table(&self, other: &Automaton) -> bool {
        Arc::ptr_eq(&self.table, &other.table) || *self.table == *other.table
    }
}

/// Incremental constructor for [`Automaton`] with label interning.
#[derive(Debug)]
pub struct Builder {
    table: Arc<EventTable>,
    alphabet: EventSet,
    index: HashMap<StateLabel, StateId>,
    labels: Vec<StateLabel>,
    roles: Vec<StateRole>,
    delta: Vec<BTreeMap<EventId, StateId>>,
    marked: Vec<bool>,
}

impl Builder {
    pub fn new(table: Arc<EventTable>, alphabet: EventSet) -> Self {
        Builder {
            table,
            alphabet,
            index: HashMap::new(),
            labels: Vec::new(),
            roles: Vec::new(),
            delta: Vec::new(),
            marked: Vec::new(),
        }
    }

    pub fn table(&self) -> &Arc<EventTable> {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Returns the state carrying `label`, creating it with `role` if new.
    pub fn state(&mut self, label: StateLabel, role: StateRole) -> StateId {
        if let Some(id) = self.index.get(&label) {
            return *id;
        }
        self.add_state(label, role)
    }

    /// Returns `(id, true)` when the state was created by this call.
    pub fn intern(&mut self, label: StateLabel, role: StateRole) -> (StateId, bool) {
        if let Some(id) = self.index.get(&label) {
            return (*id, false);
        }
        (self.add_state(label, role), true)
    }

    pub fn lookup(&self, label: &StateLabel) -> Option<StateId> {
        self.index.get(label).copied()
    }

    fn add_state(&mut self, label: StateLabel, role: StateRole) -> StateId {
        let id = StateId(self.labels.len() as u32);
        self.index.insert(label.clone(), id);
        self.labels.push(label);
        self.roles.push(role);
        self.delta.push(BTreeMap::new());
        self.marked.push(false);
        id
    }

    pub fn mark(&mut self, q: StateId) {
        self.marked[q.index()] = true;
    }

    pub fn set_role(&mut self, q: StateId, role: StateRole) {
        self.roles[q.index()] = role;
    }

    pub fn role(&self, q: StateId) -> StateRole {
        self.roles[q.index()]
    }

    pub fn is_defined(&self, q: StateId, ev: EventId) -> bool {
        self.delta[q.index()].contains_key(&ev)
    }

    pub fn target(&self, q: StateId, ev: EventId) -> Option<StateId> {
        self.delta[q.index()].get(&ev).copied()
    }

    /// Adds a transition; panics if it would make the automaton
    /// nondeterministic. Internal constructions guarantee determinism.
    pub fn transition(&mut self, from: StateId, ev: EventId, to: StateId) {
        if let Err(e) = self.try_transition(from, ev, to) {
            panic!("{e}");
        }
    }

    pub fn try_transition(&mut self, from: StateId, ev: EventId, to: StateId) -> Result<()> {
        if !self.alphabet.contains(&ev) {
            return Err(ModelError::precondition(format!(
                "event {} is not in the alphabet",
                self.table.name(ev)
            )));
        }
        match self.delta[from.index()].insert(ev, to) {
            Some(prev) if prev != to => Err(ModelError::precondition(format!(
                "nondeterministic transition from {} on {}",
                self.labels[from.index()],
                self.table.name(ev)
            ))),
            _ => Ok(()),
        }
    }

    pub fn build(self, initial: StateId) -> Automaton {
        assert!(
            initial.index() < self.labels.len(),
            "initial state out of range"
        );
        Automaton {
            table: self.table,
            alphabet: self.alphabet,
            labels: self.labels,
            roles: self.roles,
            delta: self.delta,
            initial,
            marked: self.marked,
        }
    }
}
