//! Attacker synthesis, command pruning and the clean-up iteration.

use std::collections::BTreeMap;

use super::supremal::{supremal_safe, ControlConstraint};
use crate::attack::{AttackContext, CommandLattice};
use crate::automata::ops::{accessible, remove_states, restrict, sync_product_map, Product};
use crate::automata::{Automaton, Builder, EventId, StateId, StateLabel, StateRole};
use crate::error::{ModelError, Result};

/// `G || CE^A || BPNS^A` (plus any further components), marked exactly where
/// the plant component is a damage state.
pub fn damage_product(g: &Automaton, rest: &[&Automaton]) -> Result<Product> {
    let mut parts = vec![g];
    parts.extend_from_slice(rest);
    let mut product = sync_product_map(&parts)?;
    let comps = &product.components;
    product.automaton = product
        .automaton
        .with_marking(|q| g.is_marked(comps[q.index()][0]));
    Ok(product)
}

/// The attacker's control constraint: it controls its attackable events and
/// observes its observable events plus every command.
pub fn attacker_constraint(ctx: &AttackContext) -> Result<ControlConstraint> {
    ControlConstraint::new(ctx.control_events(), ctx.observed_events())
}

/// The supervisor-side constraint: commands are controllable, observable
/// events and commands are observed.
pub fn command_constraint(lattice: &CommandLattice) -> Result<ControlConstraint> {
    let table = lattice.table();
    let mut observable = table.plain_to_set(table.observable());
    observable.extend(table.commands());
    ControlConstraint::new(table.commands().collect(), observable)
}

/// Synthesizes the supremal covert, damage-reachable attacker against the
/// bipartite structure `sup_a` (an attacked `BPNS` or an attacked `BT(S)`).
///
/// `g` must be marked at its damage states. Returns `None` when no such
/// attacker exists.
pub fn synthesize_attacker(
    g: &Automaton,
    ce_a: &Automaton,
    sup_a: &Automaton,
    ctx: &AttackContext,
) -> Result<Option<Automaton>> {
    let p = damage_product(g, &[ce_a, sup_a])?;
    let plant = &p.automaton;
    let bad = |q: StateId| sup_a.role(p.component(q, 2)) == StateRole::Detect;
    let Some(requirement) = remove_states(plant, bad) else {
        return Ok(None);
    };
    supremal_safe(plant, &requirement, &attacker_constraint(ctx)?, true)
}

/// Prunes commands of `BPNS^A` so that no string of the attacked closed loop
/// under `attacker` reaches damage. The result is `BPNS^A || R` for the
/// supremal safe command supervisor `R`; `None` when even the initial state
/// is unsafe.
pub fn synthesize_s0a(
    g: &Automaton,
    ce_a: &Automaton,
    bpns_a: &Automaton,
    attacker: &Automaton,
    lattice: &CommandLattice,
) -> Result<Option<Automaton>> {
    Ok(prune_commands(g, ce_a, bpns_a, attacker, lattice)?.s0a)
}

/// [`synthesize_s0a`] together with the size of the attacked closed loop.
#[derive(Debug, Clone)]
pub struct Pruning {
    pub product_states: usize,
    pub product_transitions: usize,
    pub s0a: Option<Automaton>,
}

pub fn prune_commands(
    g: &Automaton,
    ce_a: &Automaton,
    bpns_a: &Automaton,
    attacker: &Automaton,
    lattice: &CommandLattice,
) -> Result<Pruning> {
    let p = damage_product(g, &[ce_a, bpns_a, attacker])?;
    let plant = &p.automaton;
    let mut out = Pruning {
        product_states: plant.state_count(),
        product_transitions: plant.transition_count(),
        s0a: None,
    };
    if plant.is_marked(plant.initial()) {
        return Ok(out);
    }
    let requirement = dump_completed_safe_part(plant);
    if let Some(r) = supremal_safe(bpns_a, &requirement, &command_constraint(lattice)?, false)? {
        out.s0a = Some(restrict(bpns_a, &r)?);
    }
    Ok(out)
}

/// Removes the marked states of `p` and sends every transition `p` leaves
/// undefined to an all-accepting dump. Transitions into marked states stay
/// undefined.
fn dump_completed_safe_part(p: &Automaton) -> Automaton {
    let table = p.table().clone();
    let mut b = Builder::new(table.clone(), p.alphabet().clone());
    let mut map = vec![None; p.state_count()];
    for q in p.states().filter(|q| !p.is_marked(*q)) {
        map[q.index()] = Some(b.state(p.label(q).clone(), p.role(q)));
    }
    let dump = b.state(StateLabel::Dump, StateRole::Dump);
    for q in p.states() {
        let Some(s) = map[q.index()] else { continue };
        for ev in p.alphabet() {
            match p.step(q, *ev) {
                Some(t) => {
                    if let Some(d) = map[t.index()] {
                        b.transition(s, *ev, d);
                    }
                }
                None => b.transition(s, *ev, dump),
            }
        }
    }
    for ev in p.alphabet() {
        b.transition(dump, *ev, dump);
    }
    b.build(map[p.initial().index()].expect("initial is unmarked"))
}

/// Removes the attack-only behavior from `s0a`: command transitions are
/// kept, and after a command `γ` only the events of `γ` remain.
pub fn de_attack(s0a: &Automaton, lattice: &CommandLattice) -> Automaton {
    let table = lattice.table();
    let observable = table.observable();
    let mut b = Builder::new(table.clone(), s0a.alphabet().clone());
    for q in s0a.states() {
        let id = b.state(s0a.label(q).clone(), s0a.role(q));
        debug_assert_eq!(id, q);
        if s0a.is_marked(q) {
            b.mark(id);
        }
    }
    for q in s0a.states() {
        for (ev, r) in s0a.transitions_from(q) {
            let Some(cmd) = lattice.get(*ev) else {
                continue;
            };
            b.transition(q, *ev, *r);
            for sigma in cmd.members.iter() {
                match s0a.step(*r, sigma) {
                    Some(t) if observable.contains(sigma) => b.transition(*r, sigma, t),
                    Some(t) if t == *r => b.transition(*r, sigma, *r),
                    _ => {}
                }
            }
        }
    }
    accessible(&b.build(s0a.initial()))
}

/// Control states without any command.
pub fn commandless_control_states(a: &Automaton) -> Vec<StateId> {
    a.states()
        .filter(|q| a.role(*q) == StateRole::Control && a.enabled_commands(*q).is_empty())
        .collect()
}

/// Outcome of the clean-up iteration.
#[derive(Debug, Clone)]
pub struct Cleanup {
    /// The structure without command-less control states, or `None` when the
    /// initial state had to go.
    pub result: Option<Automaton>,
    pub iterations: usize,
    /// State counts of every intermediate structure, starting with the input.
    pub sizes: Vec<usize>,
}

/// Repeatedly deletes command-less control states and re-synthesizes until
/// every reachable control state offers a command.
pub fn clean_up(s0: &Automaton, lattice: &CommandLattice) -> Result<Cleanup> {
    let cc = command_constraint(lattice)?;
    let bound = s0.state_count() / 2;
    let mut current = s0.clone();
    let mut iterations = 0;
    let mut sizes = vec![s0.state_count()];
    loop {
        let del = commandless_control_states(&current);
        if del.is_empty() {
            return Ok(Cleanup {
                result: Some(current),
                iterations,
                sizes,
            });
        }
        // Losing the initial state ends the procedure without a synthesis
        // step.
        if del.contains(&current.initial()) {
            return Ok(Cleanup {
                result: None,
                iterations,
                sizes,
            });
        }
        if iterations >= bound {
            return Err(ModelError::internal(format!(
                "clean-up exceeded {bound} iterations on a structure of {} states",
                s0.state_count()
            )));
        }
        iterations += 1;
        let Some(requirement) = remove_states(&current, |q| del.contains(&q)) else {
            return Ok(Cleanup {
                result: None,
                iterations,
                sizes,
            });
        };
        let Some(r) = supremal_safe(&current, &requirement, &cc, false)? else {
            return Ok(Cleanup {
                result: None,
                iterations,
                sizes,
            });
        };
        let next = restrict(&current, &r)?;
        if next.state_count() >= current.state_count() {
            return Err(ModelError::internal(
                "clean-up iteration did not shrink the structure",
            ));
        }
        sizes.push(next.state_count());
        current = next;
    }
}

/// Commands offered at each control state, keyed by state.
pub fn command_map(a: &Automaton) -> BTreeMap<StateId, Vec<EventId>> {
    a.states()
        .filter(|q| a.role(*q) == StateRole::Control)
        .map(|q| (q, a.enabled_commands(q)))
        .collect()
}
