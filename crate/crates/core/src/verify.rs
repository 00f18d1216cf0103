//! Independent checks on supervisors and attackers.
//!
//! Bipartite arguments are structures with control and reaction roles, such
//! as `BT(S)`, an extracted `OS` or `BPNS`. Plain supervisors go through
//! [`build_bt`] first.

use std::collections::VecDeque;

use serde::Serialize;

use crate::attack::{
    build_bt, build_bt_attacked, build_ce, build_ce_attacked, AttackContext, CommandLattice,
};
use crate::automata::language::distinguishing_string;
use crate::automata::ops::{accessible, project, sync_product};
use crate::automata::{Automaton, Builder, EventId, EventSet, StateId, StateRole};
use crate::error::Result;
use crate::synthesis::procedures::{damage_product, synthesize_attacker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
}

/// Result of one check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub outcome: Outcome,
    /// Event names of the demonstrating string.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<String>>,
    /// Which property was checked and on which composition.
    pub context: String,
    #[serde(skip)]
    pub witness_ids: Option<Vec<EventId>>,
}

impl Verdict {
    fn new(pass: bool, context: impl Into<String>) -> Self {
        Verdict {
            outcome: if pass { Outcome::Pass } else { Outcome::Fail },
            witness: None,
            context: context.into(),
            witness_ids: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    fn with_witness(mut self, a: &Automaton, word: Vec<EventId>) -> Self {
        let table = a.table();
        self.witness = Some(word.iter().map(|e| table.name(*e).to_string()).collect());
        self.witness_ids = Some(word);
        self
    }
}

/// Shortest string from the initial state to a state satisfying `goal`.
pub fn shortest_path_to(a: &Automaton, goal: impl Fn(StateId) -> bool) -> Option<Vec<EventId>> {
    let mut parent: Vec<Option<(StateId, EventId)>> = vec![None; a.state_count()];
    let mut seen = vec![false; a.state_count()];
    let mut queue = VecDeque::from([a.initial()]);
    seen[a.initial().index()] = true;
    while let Some(q) = queue.pop_front() {
        if goal(q) {
            let mut word = Vec::new();
            let mut cur = q;
            while let Some((p, e)) = parent[cur.index()] {
                word.push(e);
                cur = p;
            }
            word.reverse();
            return Some(word);
        }
        for (e, t) in a.transitions_from(q) {
            if !seen[t.index()] {
                seen[t.index()] = true;
                parent[t.index()] = Some((q, *e));
                queue.push_back(*t);
            }
        }
    }
    None
}

/// `attacker` never drives the attacked bipartite supervisor `bts_a` into
/// its detect state in `G || CE^A || BT(S)^A || A`. A failing verdict
/// carries the shortest detecting string.
pub fn check_covert(
    g: &Automaton,
    ce_a: &Automaton,
    bts_a: &Automaton,
    attacker: &Automaton,
) -> Result<Verdict> {
    let p = damage_product(g, &[ce_a, bts_a, attacker])?;
    let detected = |q: StateId| bts_a.role(p.component(q, 2)) == StateRole::Detect;
    let context = "covertness on G || CE^A || BT(S)^A || A";
    Ok(match shortest_path_to(&p.automaton, detected) {
        None => Verdict::new(true, context),
        Some(w) => Verdict::new(false, context).with_witness(&p.automaton, w),
    })
}

/// The attacked closed loop reaches a damage state of `g` (its marked
/// states). A passing verdict carries the shortest damaging string.
pub fn check_damage(
    g: &Automaton,
    ce_a: &Automaton,
    bts_a: &Automaton,
    attacker: &Automaton,
) -> Result<Verdict> {
    let p = damage_product(g, &[ce_a, bts_a, attacker])?;
    let a = &p.automaton;
    let context = "damage reachability on G || CE^A || BT(S)^A || A";
    Ok(match shortest_path_to(a, |q| a.is_marked(q)) {
        None => Verdict::new(false, context),
        Some(w) => Verdict::new(true, context).with_witness(a, w),
    })
}

/// Synthesizes the supremal covert damage-reachable attacker against the
/// bipartite supervisor `bt`, or `None` when `bt` is resilient.
pub fn resilience_attack(
    g: &Automaton,
    bt: &Automaton,
    ctx: &AttackContext,
) -> Result<Option<Automaton>> {
    let lattice = CommandLattice::new(ctx.table().clone());
    let ce_a = build_ce_attacked(&lattice, ctx);
    let bt_a = build_bt_attacked(bt, ctx);
    synthesize_attacker(g, &ce_a, &bt_a, ctx)
}

/// No covert damage-reachable actuator attacker exists against the plain
/// supervisor `s`.
///
/// A failing verdict carries a shortest damaging string of the closed loop
/// under the synthesized attacker; [`replay_attack`] confirms it.
pub fn check_resilient(g: &Automaton, s: &Automaton, ctx: &AttackContext) -> Result<Verdict> {
    check_resilient_bipartite(g, &build_bt(s)?, ctx)
}

/// [`check_resilient`] for a bipartite supervisor such as an extracted `OS`.
pub fn check_resilient_bipartite(
    g: &Automaton,
    bt: &Automaton,
    ctx: &AttackContext,
) -> Result<Verdict> {
    let context = "resilience via attacker synthesis on G || CE^A || BT(S)^A";
    let Some(attacker) = resilience_attack(g, bt, ctx)? else {
        return Ok(Verdict::new(true, context));
    };
    let lattice = CommandLattice::new(ctx.table().clone());
    let ce_a = build_ce_attacked(&lattice, ctx);
    let bt_a = build_bt_attacked(bt, ctx);
    let p = damage_product(g, &[&ce_a, &bt_a, &attacker])?;
    let a = &p.automaton;
    let w = shortest_path_to(a, |q| a.is_marked(q)).ok_or_else(|| {
        crate::error::ModelError::internal("synthesized attacker does not reach damage")
    })?;
    Ok(Verdict::new(false, context).with_witness(a, w))
}

/// Replays `word` against `G`, `CE^A` and `bt^A`: the word must run in all
/// three, end in a damage state of `g`, and never visit the detect state.
pub fn replay_attack(g: &Automaton, bt: &Automaton, ctx: &AttackContext, word: &[EventId]) -> bool {
    let lattice = CommandLattice::new(ctx.table().clone());
    let ce_a = build_ce_attacked(&lattice, ctx);
    let bt_a = build_bt_attacked(bt, ctx);
    let parts = [g, &ce_a, &bt_a];
    let mut state: Vec<StateId> = parts.iter().map(|a| a.initial()).collect();
    for e in word {
        for (a, q) in parts.iter().zip(state.iter_mut()) {
            if a.alphabet().contains(e) {
                match a.step(*q, *e) {
                    Some(t) => *q = t,
                    None => return false,
                }
            }
        }
        if bt_a.role(state[2]) == StateRole::Detect {
            return false;
        }
    }
    g.is_marked(state[0])
}

/// `P_Σo(G || S)` with unobservable self-loops.
pub fn observed_behavior(g: &Automaton, s: &Automaton) -> Result<Automaton> {
    let table = g.table();
    let loop_ = sync_product(&[g, s])?;
    Ok(project(&loop_, &table.plain_to_set(table.observable())))
}

/// The plain supervisors `s` and `s2` are control equivalent for `g`. A
/// failing verdict carries a shortest distinguishing string of the observed
/// closed loops.
pub fn check_equivalent(g: &Automaton, s: &Automaton, s2: &Automaton) -> Result<Verdict> {
    let a = observed_behavior(g, s)?;
    let b = observed_behavior(g, s2)?;
    let context = "control equivalence via P_o(G || S) = P_o(G || S2)";
    Ok(match distinguishing_string(&a, &b) {
        None => Verdict::new(true, context),
        Some(d) => Verdict::new(false, context).with_witness(&a, d.word),
    })
}

/// `P_Σ(L(G || CE || bt))` as a deterministic automaton over `Σ` only.
pub fn observed_closed_loop(g: &Automaton, bt: &Automaton) -> Result<Automaton> {
    let table = g.table();
    let ce = build_ce(&CommandLattice::new(table.clone()));
    let loop_ = sync_product(&[g, &ce, bt])?;
    let sigma = table.sigma();
    Ok(strip_to(&project(&loop_, &sigma), &sigma))
}

/// Drops every transition whose event is outside `keep`.
fn strip_to(a: &Automaton, keep: &EventSet) -> Automaton {
    let mut b = Builder::new(a.table().clone(), keep.clone());
    for q in a.states() {
        let id = b.state(a.label(q).clone(), a.role(q));
        if a.is_marked(q) {
            b.mark(id);
        }
    }
    for (q, e, t) in a.transitions() {
        if keep.contains(&e) {
            b.transition(q, e, t);
        }
    }
    accessible(&b.build(a.initial()))
}

/// Control equivalence of two bipartite supervisors: the plant-event
/// projections of `G || CE || bt` coincide.
pub fn check_equivalent_bipartite(
    g: &Automaton,
    bt: &Automaton,
    bt2: &Automaton,
) -> Result<Verdict> {
    let a = observed_closed_loop(g, bt)?;
    let b = observed_closed_loop(g, bt2)?;
    let context = "control equivalence via P(G || CE || BT(S)) = P(G || CE || BT(S2))";
    Ok(match distinguishing_string(&a, &b) {
        None => Verdict::new(true, context),
        Some(d) => Verdict::new(false, context).with_witness(&a, d.word),
    })
}
