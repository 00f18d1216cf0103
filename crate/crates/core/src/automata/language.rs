//! Language comparisons between deterministic automata.
//!
//! All comparisons are over generated (prefix-closed) languages, so the
//! marking is ignored except by [`isomorphic`].

use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, HashMap, VecDeque};

use super::automaton::{Automaton, StateId};
use super::event::EventId;

/// A string accepted by one automaton and rejected by the other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distinction {
    pub word: Vec<EventId>,
    /// `true` when `word` is in the first automaton's language.
    pub in_first: bool,
}

type Pair = (StateId, StateId);

/// Breadth-first walk over the synchronized pair graph. `check` returns the
/// first event that exposes a difference between two paired states.
fn search(
    a: &Automaton,
    b: &Automaton,
    check: impl Fn(StateId, StateId) -> Option<(EventId, bool)>,
) -> Option<Distinction> {
    let start = (a.initial(), b.initial());
    let mut parent: HashMap<Pair, Option<(Pair, EventId)>> = HashMap::from([(start, None)]);
    let mut queue = VecDeque::from([start]);
    while let Some(pair) = queue.pop_front() {
        if let Some((ev, in_first)) = check(pair.0, pair.1) {
            let mut word = vec![ev];
            let mut cur = pair;
            while let Some(Some((prev, e))) = parent.get(&cur) {
                word.push(*e);
                cur = *prev;
            }
            word.reverse();
            return Some(Distinction { word, in_first });
        }
        for (ev, ta) in a.transitions_from(pair.0) {
            if let Some(tb) = b.step(pair.1, *ev) {
                let next = (*ta, tb);
                if let Entry::Vacant(slot) = parent.entry(next) {
                    slot.insert(Some((pair, *ev)));
                    queue.push_back(next);
                }
            }
        }
    }
    None
}

/// Shortest string in exactly one of the two languages, if any.
pub fn distinguishing_string(a: &Automaton, b: &Automaton) -> Option<Distinction> {
    search(a, b, |qa, qb| {
        let ea = a.transitions_from(qa);
        let eb = b.transitions_from(qb);
        let only_a = ea.keys().find(|e| !eb.contains_key(e));
        let only_b = eb.keys().find(|e| !ea.contains_key(e));
        match (only_a, only_b) {
            (Some(x), Some(y)) if y < x => Some((*y, false)),
            (Some(x), _) => Some((*x, true)),
            (None, Some(y)) => Some((*y, false)),
            (None, None) => None,
        }
    })
}

pub fn language_equal(a: &Automaton, b: &Automaton) -> bool {
    distinguishing_string(a, b).is_none()
}

/// Shortest string of `L(a)` missing from `L(b)`, or `None` when
/// `L(a) ⊆ L(b)`.
pub fn inclusion_witness(a: &Automaton, b: &Automaton) -> Option<Vec<EventId>> {
    search(a, b, |qa, qb| {
        a.transitions_from(qa)
            .keys()
            .find(|e| b.step(qb, **e).is_none())
            .map(|e| (*e, true))
    })
    .map(|d| d.word)
}

pub fn language_included(a: &Automaton, b: &Automaton) -> bool {
    inclusion_witness(a, b).is_none()
}

/// Structural isomorphism of the accessible parts, respecting marking and
/// roles but not labels.
pub fn isomorphic(a: &Automaton, b: &Automaton) -> bool {
    let mut map: HashMap<StateId, StateId> = HashMap::from([(a.initial(), b.initial())]);
    let mut used: BTreeSet<StateId> = BTreeSet::from([b.initial()]);
    let mut queue = VecDeque::from([a.initial()]);
    while let Some(qa) = queue.pop_front() {
        let qb = map[&qa];
        if a.is_marked(qa) != b.is_marked(qb) || a.role(qa) != b.role(qb) {
            return false;
        }
        let ea = a.transitions_from(qa);
        let eb = b.transitions_from(qb);
        if ea.len() != eb.len() {
            return false;
        }
        for (ev, ta) in ea {
            let Some(tb) = eb.get(ev) else {
                return false;
            };
            match map.get(ta) {
                Some(m) if m == tb => {}
                Some(_) => return false,
                None => {
                    if !used.insert(*tb) {
                        return false;
                    }
                    map.insert(*ta, *tb);
                    queue.push_back(*ta);
                }
            }
        }
    }
    true
}

/// All strings of the language up to `max_len` events, in length-then-id
/// order. Intended for small test oracles.
pub fn strings_up_to(a: &Automaton, max_len: usize) -> BTreeSet<Vec<EventId>> {
    let mut out = BTreeSet::new();
    let mut frontier = vec![(Vec::new(), a.initial())];
    out.insert(Vec::new());
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (word, q) in frontier {
            for (ev, t) in a.transitions_from(q) {
                let mut w = word.clone();
                w.push(*ev);
                out.insert(w.clone());
                next.push((w, *t));
            }
        }
        frontier = next;
    }
    out
}
