//! Supervisors, the bipartite supervisor form, command execution automata and
//! actuator attackers.

use std::fmt;
use std::sync::Arc;

use crate::automata::{
    Automaton, Builder, EventId, EventSet, EventTable, PlainSet, StateId, StateLabel, StateRole,
};
use crate::error::{ModelError, Result};

/// The attack constraint: what the attacker sees and what it may enable or
/// disable.
#[derive(Debug, Clone)]
pub struct AttackContext {
    table: Arc<EventTable>,
}

impl AttackContext {
    pub fn new(table: Arc<EventTable>) -> Self {
        AttackContext { table }
    }

    pub fn table(&self) -> &Arc<EventTable> {
        &self.table
    }

    pub fn attacker_observable(&self) -> PlainSet {
        self.table.attacker_observable()
    }

    pub fn attacker_controllable(&self) -> PlainSet {
        self.table.attacker_controllable()
    }

    /// Events the attacker controls.
    pub fn control_events(&self) -> EventSet {
        self.table.plain_to_set(self.attacker_controllable())
    }

    /// Events the attacker observes: its observable plain events plus every
    /// command.
    pub fn observed_events(&self) -> EventSet {
        let mut set = self.table.plain_to_set(self.attacker_observable());
        set.extend(self.table.commands());
        set
    }
}

/// One command with its observable and unobservable parts split out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Command {
    pub id: EventId,
    pub members: PlainSet,
    pub observable: PlainSet,
    pub unobservable: PlainSet,
}

/// Every command of an event table, in table order.
#[derive(Debug, Clone)]
pub struct CommandLattice {
    table: Arc<EventTable>,
    commands: Vec<Command>,
}

impl CommandLattice {
    pub fn new(table: Arc<EventTable>) -> Self {
        let obs = table.observable();
        let commands = table
            .commands()
            .map(|id| {
                let members = table.command_members(id).expect("command");
                Command {
                    id,
                    members,
                    observable: members.intersect(obs),
                    unobservable: members.minus(obs),
                }
            })
            .collect();
        CommandLattice { table, commands }
    }

    pub fn table(&self) -> &Arc<EventTable> {
        &self.table
    }

    pub fn commands(&self) -> &[Command] {
        &self.commands
    }

    pub fn len(&self) -> usize {
        self.commands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }

    pub fn get(&self, id: EventId) -> Option<&Command> {
        let first = self.commands.first()?.id.index();
        self.commands.get(id.index().checked_sub(first)?)
    }
}

/// Which well-formedness rule a model breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// An uncontrollable event is disabled.
    Controllability,
    /// An unobservable event changes state.
    Observability,
    /// The attacker disables an event it does not control.
    AttackerControllability,
    /// The attacker changes state on an event it cannot see.
    AttackerObservability,
    /// The model uses an event it must not use.
    Alphabet,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Controllability => "controllability",
            Rule::Observability => "observability",
            Rule::AttackerControllability => "attacker-controllability",
            Rule::AttackerObservability => "attacker-observability",
            Rule::Alphabet => "alphabet",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub state: String,
    pub event: String,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} violated at state {} on event {}",
            self.rule.name(),
            self.state,
            self.event
        )
    }
}

/// Checks that `s` never disables an uncontrollable event and that every
/// unobservable event it defines is a self-loop.
pub fn validate_supervisor(s: &Automaton) -> Vec<Violation> {
    let table = s.table();
    let mut out = Vec::new();
    let violation = |q: StateId, ev: EventId, rule| Violation {
        state: s.label(q).to_string(),
        event: table.name(ev).to_string(),
        rule,
    };
    for ev in s.alphabet() {
        if table.is_command(*ev) {
            out.push(Violation {
                state: s.label(s.initial()).to_string(),
                event: table.name(*ev).to_string(),
                rule: Rule::Alphabet,
            });
        }
    }
    let unobservable = table.unobservable();
    for q in s.states() {
        for ev in table.uncontrollable().iter() {
            if s.step(q, ev).is_none() {
                out.push(violation(q, ev, Rule::Controllability));
            }
        }
        for (ev, t) in s.transitions_from(q) {
            if table.is_plain(*ev) && unobservable.contains(*ev) && *t != q {
                out.push(violation(q, *ev, Rule::Observability));
            }
        }
    }
    out
}

/// Checks the attacker's controllability and observability constraints over
/// `Σ ∪ Γ`.
pub fn validate_attacker(a: &Automaton, ctx: &AttackContext) -> Vec<Violation> {
    let table = a.table();
    let controls = ctx.control_events();
    let observed = ctx.observed_events();
    let mut out = Vec::new();
    for q in a.states() {
        for ev in table.sigma_gamma() {
            let defined = a.step(q, ev);
            if defined.is_none() && !controls.contains(&ev) {
                out.push(Violation {
                    state: a.label(q).to_string(),
                    event: table.name(ev).to_string(),
                    rule: Rule::AttackerControllability,
                });
            }
            if let Some(t) = defined {
                if !observed.contains(&ev) && t != q {
                    out.push(Violation {
                        state: a.label(q).to_string(),
                        event: table.name(ev).to_string(),
                        rule: Rule::AttackerObservability,
                    });
                }
            }
        }
    }
    out
}

fn require_valid_supervisor(s: &Automaton) -> Result<()> {
    let violations = validate_supervisor(s);
    if let Some(v) = violations.first() {
        return Err(ModelError::precondition(format!(
            "invalid supervisor: {v} ({} violation(s) in total)",
            violations.len()
        )));
    }
    Ok(())
}

/// `BT(S)`: alternates a control state issuing `En_S(q)` with a reaction
/// state receiving the events of that command.
pub fn build_bt(s: &Automaton) -> Result<Automaton> {
    require_valid_supervisor(s)?;
    let table = s.table().clone();
    let observable = table.observable();
    let mut b = Builder::new(table.clone(), table.sigma_gamma());
    let com = |b: &mut Builder, q: StateId| {
        b.state(StateLabel::com(s.label(q).clone()), StateRole::Control)
    };
    let init = com(&mut b, s.initial());
    for q in s.states() {
        let control = com(&mut b, q);
        let reaction = b.state(s.label(q).clone(), StateRole::Reaction);
        let command = table
            .command_for(s.enabled_plain(q))
            .ok_or_else(|| ModelError::internal("supervisor command missing from table"))?;
        b.transition(control, command, reaction);
        for (ev, t) in s.transitions_from(q) {
            if observable.contains(*ev) {
                let next = com(&mut b, *t);
                b.transition(reaction, *ev, next);
            } else {
                b.transition(reaction, *ev, reaction);
            }
        }
    }
    let bt = b.build(init);
    Ok(crate::automata::ops::accessible(&bt))
}

/// Adds the attack completions to a bipartite structure: at every reaction
/// state, undefined attackable unobservable events become self-loops and
/// undefined observable events lead to a fresh detect sink.
///
/// Serves both `BT(S)^A` and `BPNS^A`.
pub fn attach_detect(bt: &Automaton, ctx: &AttackContext) -> Automaton {
    let table = bt.table().clone();
    let observable = table.observable();
    let self_loops = ctx.attacker_controllable().minus(observable);
    let mut b = bt.to_builder();
    let detect = b.state(StateLabel::Detect, StateRole::Detect);
    for q in bt.states() {
        if bt.role(q) != StateRole::Reaction {
            continue;
        }
        for ev in self_loops.iter() {
            if bt.step(q, ev).is_none() {
                b.transition(q, ev, q);
            }
        }
        for ev in observable.iter() {
            if bt.step(q, ev).is_none() {
                b.transition(q, ev, detect);
            }
        }
    }
    b.build(bt.initial())
}

/// `BT(S)^A`.
pub fn build_bt_attacked(bt: &Automaton, ctx: &AttackContext) -> Automaton {
    attach_detect(bt, ctx)
}

/// `CE`: from its initial state any command may be received; the events of
/// the received command then execute, observable ones closing the cycle.
pub fn build_ce(lattice: &CommandLattice) -> Automaton {
    build_ce_with(lattice, PlainSet::default())
}

/// `CE^A`: like [`build_ce`], with attackable events also executable outside
/// the received command.
pub fn build_ce_attacked(lattice: &CommandLattice, ctx: &AttackContext) -> Automaton {
    build_ce_with(lattice, ctx.attacker_controllable())
}

fn build_ce_with(lattice: &CommandLattice, extra: PlainSet) -> Automaton {
    let table = lattice.table().clone();
    let observable = table.observable();
    let mut b = Builder::new(table.clone(), table.sigma_gamma());
    let init = b.state(StateLabel::CeInit, StateRole::Control);
    for cmd in lattice.commands() {
        let q = b.state(
            StateLabel::Gamma(table.name(cmd.id).to_string()),
            StateRole::Reaction,
        );
        b.transition(init, cmd.id, q);
        for ev in cmd.members.union(extra).iter() {
            if observable.contains(ev) {
                b.transition(q, ev, init);
            } else {
                b.transition(q, ev, q);
            }
        }
    }
    b.build(init)
}

/// Flattens a command-deterministic bipartite structure back into a plain
/// supervisor over `Σ`.
///
/// Each control state becomes one supervisor state enabling the events of
/// its command: unobservable ones as self-loops, observable ones leading to
/// the supervisor state of the next control state.
pub fn to_supervisor(bt: &Automaton) -> Result<Automaton> {
    let table = bt.table().clone();
    let observable = table.observable();
    if !table.is_command(
        *bt.transitions_from(bt.initial())
            .keys()
            .next()
            .ok_or_else(|| {
                ModelError::precondition("bipartite structure has no initial command")
            })?,
    ) {
        return Err(ModelError::precondition(
            "initial state of a bipartite structure must issue a command",
        ));
    }
    let mut b = Builder::new(table.clone(), table.sigma());
    // Supervisor state i corresponds to control state order[i].
    let mut ids: Vec<Option<StateId>> = vec![None; bt.state_count()];
    let mut order: Vec<StateId> = Vec::new();
    fn intern(
        bt: &Automaton,
        b: &mut Builder,
        ids: &mut [Option<StateId>],
        order: &mut Vec<StateId>,
        c: StateId,
    ) -> StateId {
        *ids[c.index()].get_or_insert_with(|| {
            order.push(c);
            b.state(bt.label(c).clone(), StateRole::Plain)
        })
    }
    let init = intern(bt, &mut b, &mut ids, &mut order, bt.initial());
    let mut i = 0;
    while i < order.len() {
        let c = order[i];
        let here = StateId(i as u32);
        i += 1;
        let out = bt.transitions_from(c);
        if out.len() != 1 {
            return Err(ModelError::precondition(format!(
                "control state {} must issue exactly one command, found {} transitions",
                bt.label(c),
                out.len()
            )));
        }
        let (cmd, r) = out.iter().next().map(|(e, t)| (*e, *t)).expect("one");
        let members = table.command_members(cmd).ok_or_else(|| {
            ModelError::precondition(format!("state {} issues a plain event", bt.label(c)))
        })?;
        for ev in members.iter() {
            let Some(t) = bt.step(r, ev) else {
                return Err(ModelError::precondition(format!(
                    "reaction state {} lacks event {} of its command",
                    bt.label(r),
                    table.name(ev)
                )));
            };
            if observable.contains(ev) {
                let next = intern(bt, &mut b, &mut ids, &mut order, t);
                b.transition(here, ev, next);
            } else {
                b.transition(here, ev, here);
            }
        }
    }
    Ok(b.build(init))
}
