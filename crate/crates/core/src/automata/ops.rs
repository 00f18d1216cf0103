//! Composition, trimming and subset construction.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::automaton::{Automaton, Builder, StateId, StateRole};
use super::event::{EventId, EventSet};
use super::label::StateLabel;
use crate::error::{ModelError, Result};

/// `Ac(a)`: the part of `a` reachable from its initial state.
///
/// States are renumbered in breadth-first order.
pub fn accessible(a: &Automaton) -> Automaton {
    accessible_with_map(a).0
}

/// Like [`accessible`], also returning the original id of each kept state.
pub fn accessible_with_map(a: &Automaton) -> (Automaton, Vec<StateId>) {
    let mut order = vec![a.initial()];
    let mut new_id: HashMap<StateId, StateId> = HashMap::from([(a.initial(), StateId(0))]);
    let mut i = 0;
    while i < order.len() {
        let q = order[i];
        for t in a.transitions_from(q).values() {
            if !new_id.contains_key(t) {
                new_id.insert(*t, StateId(order.len() as u32));
                order.push(*t);
            }
        }
        i += 1;
    }
    let mut b = Builder::new(a.table().clone(), a.alphabet().clone());
    for q in &order {
        let id = b.state(a.label(*q).clone(), a.role(*q));
        if a.is_marked(*q) {
            b.mark(id);
        }
    }
    for q in &order {
        for (e, t) in a.transitions_from(*q) {
            b.transition(new_id[q], *e, new_id[t]);
        }
    }
    (b.build(StateId(0)), order)
}

/// A synchronous product together with the component state of every
/// product state.
#[derive(Debug, Clone)]
pub struct Product {
    pub automaton: Automaton,
    pub components: Vec<Vec<StateId>>,
}

impl Product {
    pub fn component(&self, q: StateId, which: usize) -> StateId {
        self.components[q.index()][which]
    }
}

/// Synchronous product of one or more automata over one event table.
///
/// Shared events synchronize, private events interleave. The marked set is
/// the product of the marked sets and only accessible states are built.
pub fn sync_product(parts: &[&Automaton]) -> Result<Automaton> {
    Ok(sync_product_map(parts)?.automaton)
}

pub fn sync_product_map(parts: &[&Automaton]) -> Result<Product> {
    let first = parts
        .first()
        .ok_or_else(|| ModelError::config("synchronous product of zero automata"))?;
    for p in &parts[1..] {
        if !first.same_table(p) {
            return Err(ModelError::config(
                "synchronous product operands use different event tables",
            ));
        }
    }
    let alphabet: EventSet = parts
        .iter()
        .flat_map(|p| p.alphabet().iter().copied())
        .collect();
    let mut b = Builder::new(first.table().clone(), alphabet.clone());
    let mut index: HashMap<Vec<StateId>, StateId> = HashMap::new();
    let mut components: Vec<Vec<StateId>> = Vec::new();
    let mut queue = VecDeque::new();

    let mut intern = |tuple: Vec<StateId>,
                      b: &mut Builder,
                      components: &mut Vec<Vec<StateId>>,
                      queue: &mut VecDeque<StateId>|
     -> StateId {
        if let Some(id) = index.get(&tuple) {
            return *id;
        }
        let label = if parts.len() == 1 {
            parts[0].label(tuple[0]).clone()
        } else {
            StateLabel::Tuple(
                parts
                    .iter()
                    .zip(&tuple)
                    .map(|(p, q)| p.label(*q).clone())
                    .collect(),
            )
        };
        let role = StateRole::combine(parts.iter().zip(&tuple).map(|(p, q)| p.role(*q)));
        let id = b.state(label, role);
        if parts.iter().zip(&tuple).all(|(p, q)| p.is_marked(*q)) {
            b.mark(id);
        }
        index.insert(tuple.clone(), id);
        components.push(tuple);
        queue.push_back(id);
        id
    };

    let init: Vec<StateId> = parts.iter().map(|p| p.initial()).collect();
    let start = intern(init, &mut b, &mut components, &mut queue);
    while let Some(id) = queue.pop_front() {
        let tuple = components[id.index()].clone();
        // Candidate events: everything defined in some component.
        let candidates: BTreeSet<EventId> = parts
            .iter()
            .zip(&tuple)
            .flat_map(|(p, q)| p.transitions_from(*q).keys().copied())
            .collect();
        'events: for ev in candidates {
            let mut next = Vec::with_capacity(parts.len());
            for (p, q) in parts.iter().zip(&tuple) {
                if p.alphabet().contains(&ev) {
                    match p.step(*q, ev) {
                        Some(t) => next.push(t),
                        None => continue 'events,
                    }
                } else {
                    next.push(*q);
                }
            }
            let target = intern(next, &mut b, &mut components, &mut queue);
            b.transition(id, ev, target);
        }
    }
    Ok(Product {
        automaton: b.build(start),
        components,
    })
}

/// `UR(q)`: states reachable from `q` through events in `hidden` only,
/// including `q` itself.
pub fn unobservable_reach(a: &Automaton, q: StateId, hidden: &EventSet) -> BTreeSet<StateId> {
    unobservable_reach_set(a, std::iter::once(q), hidden)
}

pub fn unobservable_reach_set(
    a: &Automaton,
    from: impl IntoIterator<Item = StateId>,
    hidden: &EventSet,
) -> BTreeSet<StateId> {
    let mut seen: BTreeSet<StateId> = BTreeSet::new();
    let mut stack: Vec<StateId> = Vec::new();
    for q in from {
        if seen.insert(q) {
            stack.push(q);
        }
    }
    while let Some(q) = stack.pop() {
        for (e, t) in a.transitions_from(q) {
            if hidden.contains(e) && seen.insert(*t) {
                stack.push(*t);
            }
        }
    }
    seen
}

/// Subset construction result: the projected automaton and the source states
/// making up each subset state.
#[derive(Debug, Clone)]
pub struct Projection {
    pub automaton: Automaton,
    pub members: Vec<Vec<StateId>>,
}

/// `P_K(a)`: subset construction over the kept events.
///
/// Kept events move between unobservable-reach closures; every other event
/// of the alphabet becomes a self-loop wherever some member state enables it.
/// A subset is marked when any of its members is. Members sharing one role
/// pass it on to the subset.
pub fn project(a: &Automaton, kept: &EventSet) -> Automaton {
    project_with_members(a, kept).automaton
}

pub fn project_with_members(a: &Automaton, kept: &EventSet) -> Projection {
    let hidden: EventSet = a.alphabet().difference(kept).copied().collect();
    let mut b = Builder::new(a.table().clone(), a.alphabet().clone());
    let mut index: HashMap<Vec<StateId>, StateId> = HashMap::new();
    let mut members: Vec<Vec<StateId>> = Vec::new();
    let mut queue = VecDeque::new();

    let mut intern = |set: BTreeSet<StateId>,
                      b: &mut Builder,
                      members: &mut Vec<Vec<StateId>>,
                      queue: &mut VecDeque<StateId>|
     -> StateId {
        let key: Vec<StateId> = set.into_iter().collect();
        if let Some(id) = index.get(&key) {
            return *id;
        }
        let label = StateLabel::set(key.iter().map(|q| a.label(*q).clone()).collect());
        let first_role = a.role(key[0]);
        let role = if key.iter().all(|q| a.role(*q) == first_role) {
            first_role
        } else {
            StateRole::Plain
        };
        let id = b.state(label, role);
        if key.iter().any(|q| a.is_marked(*q)) {
            b.mark(id);
        }
        index.insert(key.clone(), id);
        members.push(key);
        queue.push_back(id);
        id
    };

    let init = unobservable_reach(a, a.initial(), &hidden);
    let start = intern(init, &mut b, &mut members, &mut queue);
    while let Some(id) = queue.pop_front() {
        let set = members[id.index()].clone();
        let enabled: BTreeSet<EventId> = set
            .iter()
            .flat_map(|q| a.transitions_from(*q).keys().copied())
            .collect();
        for ev in enabled {
            if kept.contains(&ev) {
                let image: Vec<StateId> = set.iter().filter_map(|q| a.step(*q, ev)).collect();
                let closure = unobservable_reach_set(a, image, &hidden);
                let target = intern(closure, &mut b, &mut members, &mut queue);
                b.transition(id, ev, target);
            } else {
                b.transition(id, ev, id);
            }
        }
    }
    Projection {
        automaton: b.build(start),
        members,
    }
}

/// Sub-automaton without the states selected by `remove`, or `None` when the
/// initial state is removed. Remaining states keep their ids' relative order.
pub fn remove_states(a: &Automaton, mut remove: impl FnMut(StateId) -> bool) -> Option<Automaton> {
    if remove(a.initial()) {
        return None;
    }
    let keep: Vec<bool> = a.states().map(|q| !remove(q)).collect();
    let mut b = Builder::new(a.table().clone(), a.alphabet().clone());
    let mut map = vec![None; a.state_count()];
    for q in a.states().filter(|q| keep[q.index()]) {
        let id = b.state(a.label(q).clone(), a.role(q));
        if a.is_marked(q) {
            b.mark(id);
        }
        map[q.index()] = Some(id);
    }
    for (q, e, t) in a.transitions() {
        if let (Some(s), Some(d)) = (map[q.index()], map[t.index()]) {
            b.transition(s, e, d);
        }
    }
    let init = map[a.initial().index()].expect("initial kept");
    Some(b.build(init))
}

/// Restricts `plant` by a supervisor: `Ac(plant || supervisor)`.
///
/// When every product state has a distinct plant component the plant's labels
/// and roles are kept, so the result reads as a sub-automaton of the plant.
pub fn restrict(plant: &Automaton, supervisor: &Automaton) -> Result<Automaton> {
    let product = sync_product_map(&[plant, supervisor])?;
    let mut seen = BTreeSet::new();
    let injective = product.components.iter().all(|c| seen.insert(c[0]));
    let roles: Vec<StateRole> = product
        .components
        .iter()
        .map(|c| plant.role(c[0]))
        .collect();
    let a = &product.automaton;
    let mut b = Builder::new(a.table().clone(), a.alphabet().clone());
    for q in a.states() {
        let comps = &product.components[q.index()];
        let label = if injective {
            plant.label(comps[0]).clone()
        } else {
            a.label(q).clone()
        };
        let id = b.state(label, roles[q.index()]);
        debug_assert_eq!(id, q);
        if plant.is_marked(comps[0]) {
            b.mark(id);
        }
    }
    for (q, e, t) in a.transitions() {
        b.transition(q, e, t);
    }
    Ok(b.build(a.initial()))
}
