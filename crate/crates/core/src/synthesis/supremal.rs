//! Supremal safe supervisor synthesis under partial observation.
//!
//! Works on the observer of `plant × requirement`. With every controllable
//! event observable, a supervisor is a policy over observer states, so the
//! supremal solution is the greatest set of observer states from which no
//! uncontrollable sequence escapes the requirement.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::automata::{Automaton, Builder, EventId, EventSet, StateId, StateLabel, StateRole};
use crate::error::{ModelError, Result};

/// Which events a synthesized supervisor may disable and which it observes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlConstraint {
    pub controllable: EventSet,
    pub observable: EventSet,
}

impl ControlConstraint {
    pub fn new(controllable: EventSet, observable: EventSet) -> Result<Self> {
        if let Some(ev) = controllable.difference(&observable).next() {
            return Err(ModelError::config(format!(
                "controllable event #{} is not observable; no supremal supervisor is guaranteed",
                ev.0
            )));
        }
        Ok(ControlConstraint {
            controllable,
            observable,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    To(usize),
    Unsafe,
}

/// Reachable part of `plant × requirement`, with moves the requirement
/// refuses recorded as unsafe exits.
struct SafetyProduct {
    pairs: Vec<(StateId, StateId)>,
    moves: Vec<BTreeMap<EventId, Move>>,
}

fn safety_product(plant: &Automaton, requirement: &Automaton) -> SafetyProduct {
    let mut index = HashMap::new();
    let mut pairs = vec![(plant.initial(), requirement.initial())];
    let mut moves = vec![BTreeMap::new()];
    index.insert(pairs[0], 0usize);
    let mut i = 0;
    while i < pairs.len() {
        let (p, r) = pairs[i];
        let mut out = BTreeMap::new();
        for (ev, pt) in plant.transitions_from(p) {
            let next = if requirement.alphabet().contains(ev) {
                match requirement.step(r, *ev) {
                    Some(rt) => (*pt, rt),
                    None => {
                        out.insert(*ev, Move::Unsafe);
                        continue;
                    }
                }
            } else {
                (*pt, r)
            };
            let id = *index.entry(next).or_insert_with(|| {
                pairs.push(next);
                moves.push(BTreeMap::new());
                pairs.len() - 1
            });
            out.insert(*ev, Move::To(id));
        }
        moves[i] = out;
        i += 1;
    }
    SafetyProduct { pairs, moves }
}

struct ObsNode {
    members: Vec<usize>,
    /// Some uncontrollable event leaves the requirement from a member.
    doomed: bool,
    /// Controllable events with an unsafe exit from some member.
    forbidden: BTreeSet<EventId>,
    /// Observable successors.
    next: BTreeMap<EventId, usize>,
}

/// Synthesizes the supremal supervisor `R` such that `plant || R` stays
/// within `requirement`, respecting `cc`.
///
/// `R` is defined over the plant's alphabet. Unobservable events are
/// self-loops; uncontrollable observable events the plant cannot execute
/// lead to an absorbing sink, so `R` never disables an uncontrollable event.
/// Returns `None` when no safe supervisor exists or, with
/// `need_marker_reachable`, when no marked plant state stays reachable.
pub fn supremal_safe(
    plant: &Automaton,
    requirement: &Automaton,
    cc: &ControlConstraint,
    need_marker_reachable: bool,
) -> Result<Option<Automaton>> {
    if !plant.same_table(requirement) {
        return Err(ModelError::config(
            "plant and requirement use different event tables",
        ));
    }
    if cc.controllable.difference(&cc.observable).next().is_some() {
        return Err(ModelError::config("controllable events must be observable"));
    }
    let h = safety_product(plant, requirement);
    let hidden: EventSet = plant
        .alphabet()
        .difference(&cc.observable)
        .copied()
        .collect();

    let closure = |seed: Vec<usize>| -> Vec<usize> {
        let mut seen: BTreeSet<usize> = seed.iter().copied().collect();
        let mut stack = seed;
        while let Some(x) = stack.pop() {
            for (ev, m) in &h.moves[x] {
                if let (true, Move::To(t)) = (hidden.contains(ev), m) {
                    if seen.insert(*t) {
                        stack.push(*t);
                    }
                }
            }
        }
        seen.into_iter().collect()
    };

    let mut nodes: Vec<ObsNode> = Vec::new();
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    let root = closure(vec![0]);
    index.insert(root.clone(), 0);
    nodes.push(ObsNode {
        members: root,
        doomed: false,
        forbidden: BTreeSet::new(),
        next: BTreeMap::new(),
    });
    queue.push_back(0usize);
    while let Some(n) = queue.pop_front() {
        let mut doomed = false;
        let mut forbidden = BTreeSet::new();
        let mut targets: BTreeMap<EventId, Vec<usize>> = BTreeMap::new();
        for x in &nodes[n].members {
            for (ev, m) in &h.moves[*x] {
                match m {
                    Move::Unsafe if cc.controllable.contains(ev) => {
                        forbidden.insert(*ev);
                    }
                    Move::Unsafe => doomed = true,
                    Move::To(t) if !hidden.contains(ev) => targets.entry(*ev).or_default().push(*t),
                    Move::To(_) => {}
                }
            }
        }
        let mut next = BTreeMap::new();
        for (ev, seed) in targets {
            let set = closure(seed);
            let id = match index.get(&set) {
                Some(id) => *id,
                None => {
                    let id = nodes.len();
                    index.insert(set.clone(), id);
                    nodes.push(ObsNode {
                        members: set,
                        doomed: false,
                        forbidden: BTreeSet::new(),
                        next: BTreeMap::new(),
                    });
                    queue.push_back(id);
                    id
                }
            };
            next.insert(ev, id);
        }
        let node = &mut nodes[n];
        node.doomed = doomed;
        node.forbidden = forbidden;
        node.next = next;
    }

    // Backward propagation of badness along uncontrollable observations.
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (n, node) in nodes.iter().enumerate() {
        for (ev, t) in &node.next {
            if !cc.controllable.contains(ev) {
                preds[*t].push(n);
            }
        }
    }
    let mut bad = vec![false; nodes.len()];
    let mut work: Vec<usize> = (0..nodes.len()).filter(|n| nodes[*n].doomed).collect();
    for n in &work {
        bad[*n] = true;
    }
    while let Some(n) = work.pop() {
        for p in &preds[n] {
            if !bad[*p] {
                bad[*p] = true;
                work.push(*p);
            }
        }
    }
    if bad[0] {
        return Ok(None);
    }

    let allowed = |n: usize, ev: EventId, t: usize| -> bool {
        !bad[t] && (!cc.controllable.contains(&ev) || !nodes[n].forbidden.contains(&ev))
    };
    let mut order = vec![0usize];
    let mut new_id: HashMap<usize, usize> = HashMap::from([(0, 0)]);
    let mut i = 0;
    while i < order.len() {
        let n = order[i];
        i += 1;
        for (ev, t) in &nodes[n].next {
            if allowed(n, *ev, *t) && !new_id.contains_key(t) {
                new_id.insert(*t, order.len());
                order.push(*t);
            }
        }
    }
    if need_marker_reachable {
        let reaches_marker = order.iter().any(|n| {
            nodes[*n]
                .members
                .iter()
                .any(|x| plant.is_marked(h.pairs[*x].0))
        });
        if !reaches_marker {
            return Ok(None);
        }
    }

    let alphabet = plant.alphabet().clone();
    let mut b = Builder::new(plant.table().clone(), alphabet.clone());
    for k in 0..order.len() {
        let q = b.state(StateLabel::Index(k), StateRole::Plain);
        b.mark(q);
    }
    let mut sink = None;
    for (k, n) in order.iter().enumerate() {
        let q = StateId(k as u32);
        for ev in &alphabet {
            if hidden.contains(ev) {
                b.transition(q, *ev, q);
                continue;
            }
            match nodes[*n].next.get(ev) {
                Some(t) if allowed(*n, *ev, *t) => {
                    b.transition(q, *ev, StateId(new_id[t] as u32));
                }
                Some(_) => {}
                None if !cc.controllable.contains(ev) => {
                    let s = *sink.get_or_insert_with(|| {
                        let s = b.state(StateLabel::Dump, StateRole::Plain);
                        b.mark(s);
                        s
                    });
                    b.transition(q, *ev, s);
                }
                None => {}
            }
        }
    }
    if let Some(s) = sink {
        for ev in &alphabet {
            b.transition(s, *ev, s);
        }
    }
    Ok(Some(b.build(StateId(0))))
}
