//! The structure encoding every supervisor that is control equivalent to a
//! given one.

use crate::attack::{attach_detect, AttackContext, CommandLattice};
use crate::automata::ops::{project_with_members, sync_product_map};
use crate::automata::{Automaton, Builder, EventId, PlainSet, StateId, StateLabel, StateRole};
use crate::error::{ModelError, Result};

/// One state of the observer `B = P_Σo(G||S)` with its enablement caches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObserverState {
    /// Plant states of the member pairs.
    pub plant_states: Vec<StateId>,
    /// The supervisor state shared by every member pair.
    pub supervisor_state: StateId,
    /// `En_B(q)`.
    pub enabled: PlainSet,
    /// Union of `En_G` over the member plant states.
    pub plant_enabled: PlainSet,
}

/// The observer `B` of the closed loop together with per-state data.
#[derive(Debug, Clone)]
pub struct Observer {
    pub automaton: Automaton,
    pub states: Vec<ObserverState>,
}

/// `B = P_Σo(G||S)`.
pub fn build_b(g: &Automaton, s: &Automaton) -> Result<Observer> {
    let product = sync_product_map(&[g, s])?;
    let table = g.table();
    let projection =
        project_with_members(&product.automaton, &table.plain_to_set(table.observable()));
    let b = projection.automaton;
    let mut states = Vec::with_capacity(b.state_count());
    for q in b.states() {
        let members = &projection.members[q.index()];
        let sup = product.component(members[0], 1);
        if members.iter().any(|m| product.component(*m, 1) != sup) {
            return Err(ModelError::internal(format!(
                "observer state {} mixes supervisor states",
                b.label(q)
            )));
        }
        let plant_states: Vec<StateId> = members.iter().map(|m| product.component(*m, 0)).collect();
        let plant_enabled = plant_states
            .iter()
            .fold(PlainSet::default(), |acc, p| acc.union(g.enabled_plain(*p)));
        states.push(ObserverState {
            plant_states,
            supervisor_state: sup,
            enabled: b.enabled_plain(q),
            plant_enabled,
        });
    }
    Ok(Observer {
        automaton: b,
        states,
    })
}

/// Commands `γ` with `En_B(q) ⊆ γ` and `En_G(q_g) ∩ γ ⊆ En_B(q)` for every
/// member plant state `q_g`.
pub fn admissible_commands(state: &ObserverState, lattice: &CommandLattice) -> Vec<EventId> {
    lattice
        .commands()
        .iter()
        .filter(|c| {
            state.enabled.is_subset(c.members)
                && state
                    .plant_enabled
                    .intersect(c.members)
                    .is_subset(state.enabled)
        })
        .map(|c| c.id)
        .collect()
}

/// `BPS`: every observer state `q` becomes a control state `q^com` offering
/// all admissible commands and a reaction state `q` completed so that every
/// plain event is defined; impossible observations lead to a dump state.
pub fn build_bps(observer: &Observer, lattice: &CommandLattice) -> Result<Automaton> {
    let b = &observer.automaton;
    let table = lattice.table().clone();
    let observable = table.observable();
    let mut out = Builder::new(table.clone(), table.sigma_gamma());
    let com = |out: &mut Builder, q: StateId| {
        out.state(StateLabel::com(b.label(q).clone()), StateRole::Control)
    };
    let init = com(&mut out, b.initial());
    let mut dump = None;
    for q in b.states() {
        let control = com(&mut out, q);
        let reaction = out.state(b.label(q).clone(), StateRole::Reaction);
        let commands = admissible_commands(&observer.states[q.index()], lattice);
        if commands.is_empty() {
            return Err(ModelError::Construction(format!(
                "behavior preservation impossible: no admissible command at {}",
                b.label(q)
            )));
        }
        for cmd in commands {
            out.transition(control, cmd, reaction);
        }
        for ev in table.plain_events() {
            match b.step(q, ev) {
                Some(t) if observable.contains(ev) => {
                    let next = com(&mut out, t);
                    out.transition(reaction, ev, next);
                }
                _ if !observable.contains(ev) => out.transition(reaction, ev, reaction),
                _ => {
                    let d =
                        *dump.get_or_insert_with(|| out.state(StateLabel::Dump, StateRole::Dump));
                    out.transition(reaction, ev, d);
                }
            }
        }
    }
    if let Some(d) = dump {
        for ev in table.sigma_gamma() {
            out.transition(d, ev, d);
        }
    }
    Ok(out.build(init))
}

/// `BPNS = BPS || CE`.
pub fn build_bpns(bps: &Automaton, ce: &Automaton) -> Result<Automaton> {
    Ok(sync_product_map(&[bps, ce])?.automaton)
}

/// `BPNS^A`: the attack completions of [`attach_detect`] applied to `BPNS`.
pub fn build_bpns_attacked(bpns: &Automaton, ctx: &AttackContext) -> Automaton {
    attach_detect(bpns, ctx)
}

/// Upper bound `(2^(|Q|·|Q_s|) + 1)(|Γ| + 1)` on the size of `BPNS`,
/// saturating at `u128::MAX`.
pub fn bpns_state_bound(plant_states: usize, supervisor_states: usize, commands: usize) -> u128 {
    let exp = plant_states.saturating_mul(supervisor_states);
    let subsets = if exp >= 127 { u128::MAX } else { 1u128 << exp };
    subsets
        .saturating_add(1)
        .saturating_mul(commands as u128 + 1)
}
