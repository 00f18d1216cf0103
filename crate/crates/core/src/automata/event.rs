//! Event alphabets: the plain events of the plant and the command events
//! issued by supervisors.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::{ModelError, Result};

/// Hard limit on the number of plain events; plain-event sets are bitmasks.
pub const MAX_PLAIN_EVENTS: usize = 64;

/// Largest controllable-event count for which the command lattice is built
/// without an explicit override.
pub const DEFAULT_MAX_CONTROLLABLE: usize = 16;

/// Index of an event inside an [`EventTable`].
///
/// Plain events occupy the ids `0..plain_count`, command events follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub u32);

impl EventId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Set of events, ordered by id.
pub type EventSet = BTreeSet<EventId>;

/// A set of plain events stored as a bitmask over plain-event indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PlainSet(pub u64);

impl PlainSet {
    pub const EMPTY: PlainSet = PlainSet(0);

    pub fn singleton(ev: EventId) -> Self {
        debug_assert!(ev.index() < MAX_PLAIN_EVENTS);
        PlainSet(1u64 << ev.0)
    }

    pub fn contains(self, ev: EventId) -> bool {
        ev.index() < MAX_PLAIN_EVENTS && self.0 & (1u64 << ev.0) != 0
    }

    pub fn insert(&mut self, ev: EventId) {
        self.0 |= 1u64 << ev.0;
    }

    pub fn union(self, other: PlainSet) -> PlainSet {
        PlainSet(self.0 | other.0)
    }

    pub fn intersect(self, other: PlainSet) -> PlainSet {
        PlainSet(self.0 & other.0)
    }

    pub fn minus(self, other: PlainSet) -> PlainSet {
        PlainSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: PlainSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = EventId> {
        let bits = self.0;
        (0..MAX_PLAIN_EVENTS as u32)
            .filter(move |i| bits & (1u64 << i) != 0)
            .map(EventId)
    }
}

impl FromIterator<EventId> for PlainSet {
    fn from_iter<I: IntoIterator<Item = EventId>>(iter: I) -> Self {
        let mut set = PlainSet::EMPTY;
        for ev in iter {
            set.insert(ev);
        }
        set
    }
}

/// Attribute flags of a plain event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EventFlags {
    pub controllable: bool,
    pub observable: bool,
    pub attacker_observable: bool,
    pub attacker_controllable: bool,
}

/// Declaration of one plain event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventDecl {
    pub name: String,
    pub flags: EventFlags,
}

impl EventDecl {
    pub fn new(name: impl Into<String>, flags: EventFlags) -> Self {
        EventDecl {
            name: name.into(),
            flags,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum EventKind {
    Plain(EventFlags),
    Command(PlainSet),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct EventInfo {
    name: String,
    kind: EventKind,
}

/// The plain alphabet together with the full command alphabet.
///
/// Every command is a set of plain events containing all uncontrollable
/// events; the table holds one command per subset of the controllable
/// events. Commands are ordered by their sorted member-name list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventTable {
    events: Vec<EventInfo>,
    plain_count: usize,
    by_name: HashMap<String, EventId>,
    by_mask: HashMap<PlainSet, EventId>,
    controllable: PlainSet,
    observable: PlainSet,
    attacker_observable: PlainSet,
    attacker_controllable: PlainSet,
}

impl EventTable {
    /// Builds the table, refusing more than [`DEFAULT_MAX_CONTROLLABLE`]
    /// controllable events.
    pub fn new(decls: &[EventDecl]) -> Result<Self> {
        Self::with_limit(decls, DEFAULT_MAX_CONTROLLABLE)
    }

    /// Builds the table with an explicit bound on the number of controllable
    /// events (the command lattice has `2^|controllable|` members).
    pub fn with_limit(decls: &[EventDecl], max_controllable: usize) -> Result<Self> {
        if decls.len() > MAX_PLAIN_EVENTS {
            return Err(ModelError::config(format!(
                "at most {MAX_PLAIN_EVENTS} plain events are supported, got {}",
                decls.len()
            )));
        }
        let mut by_name = HashMap::new();
        let mut events = Vec::with_capacity(decls.len());
        let mut controllable = PlainSet::EMPTY;
        let mut observable = PlainSet::EMPTY;
        let mut attacker_observable = PlainSet::EMPTY;
        let mut attacker_controllable = PlainSet::EMPTY;
        for (i, decl) in decls.iter().enumerate() {
            let id = EventId(i as u32);
            if decl.name.is_empty() || decl.name.contains(['{', '}', ',']) {
                return Err(ModelError::config(format!(
                    "invalid event name {:?}",
                    decl.name
                )));
            }
            if by_name.insert(decl.name.clone(), id).is_some() {
                return Err(ModelError::config(format!(
                    "event {:?} declared twice",
                    decl.name
                )));
            }
            let f = decl.flags;
            if f.attacker_controllable && !f.controllable {
                return Err(ModelError::config(format!(
                    "event {:?} is attacker-controllable but not controllable",
                    decl.name
                )));
            }
            if f.attacker_controllable && !f.attacker_observable {
                return Err(ModelError::config(format!(
                    "event {:?} is attacker-controllable but not attacker-observable",
                    decl.name
                )));
            }
            let bit = PlainSet::singleton(id);
            if f.controllable {
                controllable = controllable.union(bit);
            }
            if f.observable {
                observable = observable.union(bit);
            }
            if f.attacker_observable {
                attacker_observable = attacker_observable.union(bit);
            }
            if f.attacker_controllable {
                attacker_controllable = attacker_controllable.union(bit);
            }
            events.push(EventInfo {
                name: decl.name.clone(),
                kind: EventKind::Plain(f),
            });
        }
        let plain_count = events.len();
        if controllable.len() > max_controllable {
            return Err(ModelError::config(format!(
                "{} controllable events would yield 2^{} commands; raise the limit to allow this",
                controllable.len(),
                controllable.len()
            )));
        }

        let all = PlainSet(if plain_count == 64 {
            u64::MAX
        } else {
            (1u64 << plain_count) - 1
        });
        let uncontrollable = all.minus(controllable);
        let ctrl_bits: Vec<EventId> = controllable.iter().collect();
        let mut commands: Vec<(Vec<String>, PlainSet)> = (0u64..(1u64 << ctrl_bits.len()))
            .map(|choice| {
                let mut mask = uncontrollable;
                for (j, ev) in ctrl_bits.iter().enumerate() {
                    if choice & (1 << j) != 0 {
                        mask.insert(*ev);
                    }
                }
                let mut names: Vec<String> = mask
                    .iter()
                    .map(|e| events[e.index()].name.clone())
                    .collect();
                names.sort();
                (names, mask)
            })
            .collect();
        commands.sort();
        let mut by_mask = HashMap::new();
        for (names, mask) in commands {
            let id = EventId(events.len() as u32);
            let name = format!("{{{}}}", names.join(","));
            by_name.insert(name.clone(), id);
            by_mask.insert(mask, id);
            events.push(EventInfo {
                name,
                kind: EventKind::Command(mask),
            });
        }

        Ok(EventTable {
            events,
            plain_count,
            by_name,
            by_mask,
            controllable,
            observable,
            attacker_observable,
            attacker_controllable,
        })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn plain_count(&self) -> usize {
        self.plain_count
    }

    pub fn plain_events(&self) -> impl Iterator<Item = EventId> + '_ {
        (0..self.plain_count as u32).map(EventId)
    }

    pub fn commands(&self) -> impl Iterator<Item = EventId> + '_ {
        (self.plain_count as u32..self.events.len() as u32).map(EventId)
    }

    pub fn command_count(&self) -> usize {
        self.events.len() - self.plain_count
    }

    pub fn is_command(&self, ev: EventId) -> bool {
        ev.index() >= self.plain_count
    }

    pub fn is_plain(&self, ev: EventId) -> bool {
        ev.index() < self.plain_count
    }

    pub fn name(&self, ev: EventId) -> &str {
        &self.events[ev.index()].name
    }

    pub fn lookup(&self, name: &str) -> Option<EventId> {
        self.by_name.get(name).copied()
    }

    /// Flags of a plain event; `None` for commands.
    pub fn flags(&self, ev: EventId) -> Option<EventFlags> {
        match self.events.get(ev.index())?.kind {
            EventKind::Plain(f) => Some(f),
            EventKind::Command(_) => None,
        }
    }

    /// Members of a command event.
    pub fn command_members(&self, ev: EventId) -> Option<PlainSet> {
        match self.events.get(ev.index())?.kind {
            EventKind::Command(m) => Some(m),
            EventKind::Plain(_) => None,
        }
    }

    /// The command whose member set is exactly `members`.
    pub fn command_for(&self, members: PlainSet) -> Option<EventId> {
        self.by_mask.get(&members).copied()
    }

    /// Sorted member names of a command, used for ordering and display.
    pub fn command_member_names(&self, ev: EventId) -> Vec<&str> {
        let mut names: Vec<&str> = self
            .command_members(ev)
            .map(|m| m.iter().map(|e| self.name(e)).collect())
            .unwrap_or_default();
        names.sort();
        names
    }

    pub fn all_plain(&self) -> PlainSet {
        self.plain_events().collect()
    }

    pub fn controllable(&self) -> PlainSet {
        self.controllable
    }

    pub fn uncontrollable(&self) -> PlainSet {
        self.all_plain().minus(self.controllable)
    }

    pub fn observable(&self) -> PlainSet {
        self.observable
    }

    pub fn unobservable(&self) -> PlainSet {
        self.all_plain().minus(self.observable)
    }

    pub fn attacker_observable(&self) -> PlainSet {
        self.attacker_observable
    }

    pub fn attacker_controllable(&self) -> PlainSet {
        self.attacker_controllable
    }

    /// The event declarations this table was built from.
    pub fn decls(&self) -> Vec<EventDecl> {
        self.events[..self.plain_count]
            .iter()
            .map(|info| match info.kind {
                EventKind::Plain(f) => EventDecl::new(info.name.clone(), f),
                EventKind::Command(_) => unreachable!(),
            })
            .collect()
    }

    /// Converts a plain set to an ordered event set.
    pub fn plain_to_set(&self, set: PlainSet) -> EventSet {
        set.iter().collect()
    }

    /// `Σ`: every plain event.
    pub fn sigma(&self) -> EventSet {
        self.plain_events().collect()
    }

    /// `Σ ∪ Γ`: every event in the table.
    pub fn sigma_gamma(&self) -> EventSet {
        (0..self.events.len() as u32).map(EventId).collect()
    }

    pub fn format_string(&self, events: &[EventId]) -> String {
        events
            .iter()
            .map(|e| self.name(*e))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for EventTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.plain_events().map(|e| self.name(e)).collect();
        write!(
            f,
            "Σ = {{{}}}, |Γ| = {}",
            names.join(","),
            self.command_count()
        )
    }
}
