//! Extracting concrete supervisors from command-nondeterministic structures.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::attack::CommandLattice;
use crate::automata::ops::{accessible, project, sync_product};
use crate::automata::{Automaton, Builder, EventId, StateId, StateLabel, StateRole};
use crate::error::{ModelError, Result};

/// Environment variable overriding the seed of [`RandomPicker`].
pub const SEED_ENV: &str = "DESO_SEED";

/// Chooses one command out of the nonempty set offered at a control state.
pub trait CommandPicker {
    fn pick(&mut self, a: &Automaton, state: StateId, offered: &[EventId]) -> EventId;
}

/// Picks the command whose sorted member list is smallest.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicographicPicker;

impl CommandPicker for LexicographicPicker {
    fn pick(&mut self, _a: &Automaton, _state: StateId, offered: &[EventId]) -> EventId {
        // Commands are numbered in member-list order.
        *offered.iter().min().expect("nonempty offer")
    }
}

/// Picks uniformly at random from a seeded ChaCha stream.
#[derive(Debug, Clone)]
pub struct RandomPicker {
    rng: ChaCha8Rng,
}

impl RandomPicker {
    pub fn new(seed: u64) -> Self {
        RandomPicker {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uses `DESO_SEED` when it is set to an integer, `default_seed`
    /// otherwise.
    pub fn from_env(default_seed: u64) -> Self {
        let seed = std::env::var(SEED_ENV)
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .unwrap_or(default_seed);
        Self::new(seed)
    }
}

impl CommandPicker for RandomPicker {
    fn pick(&mut self, _a: &Automaton, _state: StateId, offered: &[EventId]) -> EventId {
        *offered.choose(&mut self.rng).expect("nonempty offer")
    }
}

/// Keeps exactly one command at every control state and all plain events,
/// then trims. The result is command-deterministic.
pub fn extract_os(ons: &Automaton, picker: &mut dyn CommandPicker) -> Result<Automaton> {
    let table = ons.table();
    let mut b = ons.to_builder_without_transitions();
    // Walk reachable states in breadth-first order so the picker sees a
    // stable sequence of decisions.
    let mut order = vec![ons.initial()];
    let mut seen = vec![false; ons.state_count()];
    seen[ons.initial().index()] = true;
    let mut i = 0;
    while i < order.len() {
        let q = order[i];
        i += 1;
        let commands = ons.enabled_commands(q);
        let chosen = if ons.role(q) == StateRole::Control || !commands.is_empty() {
            if commands.is_empty() {
                return Err(ModelError::precondition(format!(
                    "control state {} offers no command",
                    ons.label(q)
                )));
            }
            Some(picker.pick(ons, q, &commands))
        } else {
            None
        };
        for (ev, t) in ons.transitions_from(q) {
            let keep = if table.is_command(*ev) {
                Some(*ev) == chosen
            } else {
                true
            };
            if keep {
                b.transition(q, *ev, *t);
                if !seen[t.index()] {
                    seen[t.index()] = true;
                    order.push(*t);
                }
            }
        }
    }
    Ok(accessible(&b.build(ons.initial())))
}

/// Builds a command-deterministic supervisor from `ons` whose language
/// contains `t`.
///
/// A chain automaton for `t` is observed through `Σo ∪ Γ`, completed so it
/// constrains nothing beyond the command choices made along `t`, and composed
/// with `ons`; remaining choices go to `picker`.
pub fn realize_through(
    ons: &Automaton,
    t: &[EventId],
    lattice: &CommandLattice,
    picker: &mut dyn CommandPicker,
) -> Result<Automaton> {
    if ons.run(t).is_none() {
        return Err(ModelError::precondition(format!(
            "string {} is not in the language of the structure",
            lattice.table().format_string(t)
        )));
    }
    let table = lattice.table().clone();
    let observable = table.observable();

    // Chain automaton: position 0 and positions after an observation are
    // control positions, all others reaction positions.
    let mut chain = Builder::new(table.clone(), table.sigma_gamma());
    let mut prev = chain.state(StateLabel::Index(0), StateRole::Control);
    for (i, ev) in t.iter().enumerate() {
        let role = if table.is_plain(*ev) && observable.contains(*ev) {
            StateRole::Control
        } else {
            StateRole::Reaction
        };
        let next = chain.state(StateLabel::Index(i + 1), role);
        chain.transition(prev, *ev, next);
        prev = next;
    }
    let chain = chain.build(StateId(0));
    let mut kept = table.plain_to_set(observable);
    kept.extend(table.commands());
    let observed = project(&chain, &kept);

    // Completion with an observation hub and command execution states.
    let mut nc = observed.to_builder();
    let obs = nc.state(StateLabel::Obs, StateRole::Control);
    let gamma_state = |nc: &mut Builder, cmd: EventId| {
        nc.state(
            StateLabel::Gamma(table.name(cmd).to_string()),
            StateRole::Reaction,
        )
    };
    for cmd in lattice.commands() {
        let q = gamma_state(&mut nc, cmd.id);
        nc.transition(obs, cmd.id, q);
        for ev in cmd.members.iter() {
            if observable.contains(ev) {
                nc.transition(q, ev, obs);
            } else {
                nc.transition(q, ev, q);
            }
        }
    }
    for q in observed.states() {
        match observed.role(q) {
            StateRole::Reaction => {
                for ev in table.plain_events() {
                    if observed.step(q, ev).is_none() {
                        let target = if observable.contains(ev) { obs } else { q };
                        nc.transition(q, ev, target);
                    }
                }
            }
            StateRole::Control if observed.enabled_commands(q).is_empty() => {
                for cmd in lattice.commands() {
                    let g = gamma_state(&mut nc, cmd.id);
                    nc.transition(q, cmd.id, g);
                }
            }
            _ => {}
        }
    }
    let nc = nc.build(observed.initial());
    let ncs = sync_product(&[&nc, ons])?;
    let bt = extract_os(&ncs, picker)?;
    debug_assert!(bt.accepts(t));
    Ok(bt)
}
