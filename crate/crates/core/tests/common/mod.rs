//! Shared fixtures, random instance generators, oracles and invariant checks
//! for the integration tests and the acceptance gate.

#![allow(dead_code)]

use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use deso::attack::{
    build_bt, build_bt_attacked, build_ce, to_supervisor, validate_attacker, AttackContext,
    CommandLattice,
};
use deso::automata::language::{
    distinguishing_string, inclusion_witness, isomorphic, language_equal, language_included,
    strings_up_to,
};
use deso::automata::ops::{accessible, project, sync_product, sync_product_map};
use deso::automata::{
    Automaton, Builder, EventDecl, EventFlags, EventId, EventSet, EventTable, StateId, StateLabel,
    StateRole,
};
use deso::io::document::{automaton_from_doc, automaton_to_doc};
use deso::io::{parse_problem, serialize_problem, Options, Problem};
use deso::preserving::bpns_state_bound;
use deso::synthesis::{
    damage_product, extract_os, realize_through, run_pipeline, LexicographicPicker, PipelineOutput,
    RandomPicker,
};
use deso::verify::{
    check_covert, check_damage, check_equivalent, check_resilient, check_resilient_bipartite,
    replay_attack, resilience_attack,
};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

pub fn fixture() -> Problem {
    parse_problem(include_str!("../../fixtures/running_example.json")).unwrap()
}

pub fn unreachable_damage() -> Problem {
    parse_problem(include_str!("../../fixtures/unreachable_damage.json")).unwrap()
}

pub fn ev(p: &Problem, name: &str) -> EventId {
    p.table
        .lookup(name)
        .unwrap_or_else(|| panic!("no event {name}"))
}

/// Parses a space-separated word such as `{a,b,c} a {b,c}`.
pub fn word(table: &EventTable, text: &str) -> Vec<EventId> {
    text.split_whitespace()
        .map(|t| table.lookup(t).unwrap_or_else(|| panic!("no event {t}")))
        .collect()
}

pub fn command_names(a: &Automaton, q: StateId) -> BTreeSet<String> {
    a.enabled_commands(q)
        .iter()
        .map(|c| a.table().name(*c).to_string())
        .collect()
}

pub fn names(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

// Random instances --------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_events: usize,
    pub max_controllable: usize,
    pub max_plant_states: usize,
    pub max_supervisor_states: usize,
    pub density: f64,
}

impl Shape {
    /// Micro instances: at most 4 plant states, 4 events, 2 controllable.
    pub const MICRO: Shape = Shape {
        max_events: 4,
        max_controllable: 2,
        max_plant_states: 4,
        max_supervisor_states: 3,
        density: 0.4,
    };

    /// Larger instances where obfuscation more often has room to work.
    pub const MEDIUM: Shape = Shape {
        max_events: 6,
        max_controllable: 3,
        max_plant_states: 8,
        max_supervisor_states: 3,
        density: 0.3,
    };
}

pub fn random_table(rng: &mut ChaCha8Rng, shape: Shape) -> Arc<EventTable> {
    let n = rng.random_range(2..=shape.max_events);
    let mut controllable = 0;
    let decls: Vec<EventDecl> = (0..n)
        .map(|i| {
            // The first event is always controllable.
            let c = i == 0 || (controllable < shape.max_controllable && rng.random_bool(0.5));
            if c {
                controllable += 1;
            }
            let oa = rng.random_bool(0.6);
            let flags = EventFlags {
                controllable: c,
                observable: rng.random_bool(0.6),
                attacker_observable: oa,
                attacker_controllable: c && oa && rng.random_bool(0.6),
            };
            EventDecl::new(format!("{}", (b'a' + i as u8) as char), flags)
        })
        .collect();
    Arc::new(EventTable::new(&decls).unwrap())
}

/// Random automaton over the plain events with `Index` labels.
pub fn random_automaton(
    rng: &mut ChaCha8Rng,
    table: &Arc<EventTable>,
    states: usize,
    density: f64,
) -> Automaton {
    let mut b = Builder::new(table.clone(), table.sigma());
    for i in 0..states {
        let q = b.state(StateLabel::Index(i), StateRole::Plain);
        if rng.random_bool(0.3) {
            b.mark(q);
        }
    }
    for i in 0..states {
        for e in table.plain_events() {
            if rng.random_bool(density) {
                let t = rng.random_range(0..states);
                b.transition(StateId(i as u32), e, StateId(t as u32));
            }
        }
    }
    b.build(StateId(0))
}

/// Random valid supervisor: every state enables all uncontrollable events
/// and a random subset of controllable ones; unobservable events loop.
pub fn random_supervisor(
    rng: &mut ChaCha8Rng,
    table: &Arc<EventTable>,
    states: usize,
) -> Automaton {
    let observable = table.observable();
    let controllable = table.controllable();
    let mut b = Builder::new(table.clone(), table.sigma());
    for i in 0..states {
        b.state(StateLabel::atom(format!("s{i}")), StateRole::Plain);
    }
    for i in 0..states {
        let q = StateId(i as u32);
        for e in table.plain_events() {
            if controllable.contains(e) && !rng.random_bool(0.6) {
                continue;
            }
            let t = if observable.contains(e) {
                StateId(rng.random_range(0..states) as u32)
            } else {
                q
            };
            b.transition(q, e, t);
        }
    }
    accessible(&b.build(StateId(0)))
}

pub fn random_problem(seed: u64, shape: Shape) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = random_table(&mut rng, shape);
    let n = rng.random_range(2..=shape.max_plant_states);
    let plant = random_automaton(&mut rng, &table, n, shape.density);
    let m = rng.random_range(1..=shape.max_supervisor_states);
    let supervisor = random_supervisor(&mut rng, &table, m);
    // Mostly place damage where the unattacked closed loop never goes, so
    // that attacks, pruning and clean-up all get exercised.
    let closed = sync_product_map(&[&plant, &supervisor]).unwrap();
    let visited: BTreeSet<StateId> = closed.components.iter().map(|c| c[0]).collect();
    let safe: Vec<StateId> = plant.states().filter(|q| !visited.contains(q)).collect();
    let damage: Vec<StateId> = if !safe.is_empty() && rng.random_bool(0.9) {
        vec![safe[rng.random_range(0..safe.len())]]
    } else if rng.random_bool(0.8) {
        vec![StateId(rng.random_range(1..n) as u32)]
    } else {
        Vec::new()
    };
    let plant = plant.with_marking(|q| damage.contains(&q));
    Problem {
        table,
        plant,
        supervisor,
        damage,
        options: Options::default(),
    }
}

/// A random valid variation of `s`: toggles a controllable event, redirects
/// an observable transition, or moves an observable edge onto a copy of its
/// target state.
pub fn mutate_supervisor(rng: &mut ChaCha8Rng, s: &Automaton) -> Automaton {
    let table = s.table().clone();
    let observable = table.observable();
    let n = s.state_count();
    let pick = StateId(rng.random_range(0..n) as u32);
    let mut edges: Vec<(StateId, EventId, StateId)> = s.transitions().collect();
    let mut with_copy = false;
    match rng.random_range(0..3) {
        0 => {
            let controllable: Vec<EventId> = table.controllable().iter().collect();
            if !controllable.is_empty() {
                let e = controllable[rng.random_range(0..controllable.len())];
                if s.step(pick, e).is_some() {
                    edges.retain(|(q, f, _)| !(*q == pick && *f == e));
                } else if observable.contains(e) {
                    edges.push((pick, e, StateId(rng.random_range(0..n) as u32)));
                } else {
                    edges.push((pick, e, pick));
                }
            }
        }
        1 => {
            let to = StateId(rng.random_range(0..n) as u32);
            if let Some(edge) = edges
                .iter_mut()
                .find(|(q, e, _)| *q == pick && observable.contains(*e))
            {
                edge.2 = to;
            }
        }
        _ => {
            let copy = StateId(n as u32);
            let incoming = edges
                .iter()
                .position(|(_, e, t)| observable.contains(*e) && *t == pick);
            if let Some(i) = incoming {
                edges[i].2 = copy;
                with_copy = true;
                for (e, t) in s.transitions_from(pick) {
                    let t = if observable.contains(*e) { *t } else { copy };
                    edges.push((copy, *e, t));
                }
            }
        }
    }
    let mut b = Builder::new(table.clone(), table.sigma());
    for q in s.states() {
        b.state(s.label(q).clone(), StateRole::Plain);
    }
    if with_copy {
        b.state(StateLabel::atom("copy"), StateRole::Plain);
    }
    for (q, e, t) in edges {
        b.transition(q, e, t);
    }
    accessible(&b.build(s.initial()))
}

// Brute-force oracle for the behavior-preserving structure ----------------

/// Observation skeleton of a bipartite string: the command issued at each
/// control point and the observation that closes each cycle.
fn skeleton(table: &EventTable, t: &[EventId]) -> (Vec<EventId>, Vec<EventId>) {
    let observable = table.observable();
    let mut commands = Vec::new();
    let mut observations = Vec::new();
    for e in t {
        if table.is_command(*e) {
            commands.push(*e);
        } else if observable.contains(*e) {
            observations.push(*e);
        }
    }
    (commands, observations)
}

/// The path-policy supervisor for a skeleton: it issues the skeleton's
/// commands along the skeleton's observation path and behaves like `s` as
/// soon as the observations leave that path. Histories `s` cannot produce go
/// to a permissive sink.
///
/// Any control equivalent supervisor generating a string with this skeleton
/// agrees with this one on every history the closed loop can produce, so
/// the string is realizable by some control equivalent supervisor exactly
/// when this supervisor is control equivalent.
pub fn path_policy_supervisor(
    s: &Automaton,
    commands: &[EventId],
    observations: &[EventId],
) -> Automaton {
    let table = s.table().clone();
    let observable = table.observable();
    let mut b = Builder::new(table.clone(), table.sigma());
    let path: Vec<StateId> = (0..commands.len())
        .map(|i| b.state(StateLabel::atom(format!("p{i}")), StateRole::Plain))
        .collect();
    let copy: Vec<StateId> = s
        .states()
        .map(|q| {
            b.state(
                StateLabel::Tuple(vec![StateLabel::atom("s"), s.label(q).clone()]),
                StateRole::Plain,
            )
        })
        .collect();
    let sink = b.state(StateLabel::Dump, StateRole::Plain);
    for (q, e, t) in s.transitions() {
        b.transition(copy[q.index()], e, copy[t.index()]);
    }
    for e in table.plain_events() {
        b.transition(sink, e, sink);
    }
    // S state reached by the observation prefix of length i.
    let mut s_state = Some(s.initial());
    for (i, cmd) in commands.iter().enumerate() {
        let members = table.command_members(*cmd).unwrap();
        for e in members.iter() {
            let target = if !observable.contains(e) {
                path[i]
            } else if observations.get(i) == Some(&e) && i + 1 < commands.len() {
                path[i + 1]
            } else {
                match s_state.and_then(|q| s.step(q, e)) {
                    Some(t) => copy[t.index()],
                    None => sink,
                }
            };
            b.transition(path[i], e, target);
        }
        s_state = s_state.and_then(|q| observations.get(i).and_then(|o| s.step(q, *o)));
    }
    let init = if commands.is_empty() {
        copy[s.initial().index()]
    } else {
        path[0]
    };
    accessible(&b.build(init))
}

/// Strings of length at most `depth` realizable by some supervisor control
/// equivalent to `p.supervisor`, by brute force over path policies.
pub fn realizable_strings(p: &Problem, depth: usize) -> BTreeSet<Vec<EventId>> {
    let lattice = CommandLattice::new(p.table.clone());
    let ce = build_ce(&lattice);
    let mut policies: HashMap<(Vec<EventId>, Vec<EventId>), Option<Automaton>> = HashMap::new();
    strings_up_to(&ce, depth)
        .into_iter()
        .filter(|t| {
            let key = skeleton(&p.table, t);
            let bt = policies.entry(key.clone()).or_insert_with(|| {
                let sp = path_policy_supervisor(&p.supervisor, &key.0, &key.1);
                let ok = check_equivalent(&p.plant, &p.supervisor, &sp)
                    .unwrap()
                    .passed();
                ok.then(|| build_bt(&sp).unwrap())
            });
            bt.as_ref().is_some_and(|bt| bt.accepts(t))
        })
        .collect()
}

// Attack families ---------------------------------------------------------

/// Shortest marked string of `a` whose plant-event projection equals
/// `pattern`, with commands free.
pub fn marked_with_projection(a: &Automaton, pattern: &[EventId]) -> Option<Vec<EventId>> {
    let table = a.table();
    let start = (a.initial(), 0usize);
    type Node = (StateId, usize);
    let mut parent: HashMap<Node, Option<(Node, EventId)>> = HashMap::from([(start, None)]);
    let mut queue = VecDeque::from([start]);
    while let Some((q, k)) = queue.pop_front() {
        if k == pattern.len() && a.is_marked(q) {
            let mut w = Vec::new();
            let mut cur = (q, k);
            while let Some(Some((prev, e))) = parent.get(&cur) {
                w.push(*e);
                cur = *prev;
            }
            w.reverse();
            return Some(w);
        }
        for (e, t) in a.transitions_from(q) {
            let next = if table.is_command(*e) {
                (*t, k)
            } else if k < pattern.len() && pattern[k] == *e {
                (*t, k + 1)
            } else {
                continue;
            };
            if let Entry::Vacant(slot) = parent.entry(next) {
                slot.insert(Some(((q, k), *e)));
                queue.push_back(next);
            }
        }
    }
    None
}

pub fn plain_projection(table: &EventTable, w: &[EventId]) -> Vec<EventId> {
    w.iter().copied().filter(|e| table.is_plain(*e)).collect()
}

// Invariant checks --------------------------------------------------------

fn is_bipartite_prefix(table: &EventTable, w: &[EventId]) -> bool {
    let observable = table.observable();
    let mut expect_command = true;
    for e in w {
        if expect_command {
            if !table.is_command(*e) {
                return false;
            }
            expect_command = false;
        } else if table.is_command(*e) {
            return false;
        } else if observable.contains(*e) {
            expect_command = true;
        }
    }
    true
}

/// Projection: deterministic output, hidden events only as self-loops, and
/// the membership rules checked by bounded enumeration.
pub fn projection_rules(a: &Automaton, kept: &EventSet) -> Check {
    let p = project(a, kept);
    for (q, e, t) in p.transitions() {
        ensure!(
            kept.contains(&e) || q == t,
            "hidden event {e:?} moves {q:?}"
        );
    }
    let table = a.table();
    let mut images = BTreeSet::new();
    for s in strings_up_to(a, 8) {
        if s.len() <= 6 {
            ensure!(
                p.accepts(&s),
                "string {:?} of a rejected by its projection",
                s
            );
        }
        let image: Vec<EventId> = s.iter().copied().filter(|e| kept.contains(e)).collect();
        ensure!(p.accepts(&image), "projected image {:?} rejected", image);
        images.insert(image);
    }
    for w in strings_up_to(&p, 2) {
        if w.iter().all(|e| kept.contains(e)) {
            ensure!(
                images.contains(&w),
                "observation {} has no preimage",
                table.format_string(&w)
            );
        }
    }
    Ok(())
}

pub fn product_associative(a: &Automaton, b: &Automaton, c: &Automaton) -> Check {
    let left = sync_product(&[&sync_product(&[a, b]).unwrap(), c]).unwrap();
    let right = sync_product(&[a, &sync_product(&[b, c]).unwrap()]).unwrap();
    let flat = sync_product(&[a, b, c]).unwrap();
    ensure!(
        language_equal(&left, &right),
        "(a||b)||c differs from a||(b||c)"
    );
    ensure!(
        language_equal(&left, &flat),
        "nested product differs from flat product"
    );
    Ok(())
}

pub fn accessible_idempotent(a: &Automaton) -> Check {
    let once = accessible(a);
    ensure!(
        isomorphic(&accessible(&once), &once),
        "accessible is not idempotent"
    );
    Ok(())
}

pub fn language_equal_sound(a: &Automaton, b: &Automaton) -> Check {
    ensure!(language_equal(a, a), "not reflexive");
    ensure!(
        language_equal(a, b) == language_equal(b, a),
        "not symmetric"
    );
    let bound = a.state_count() * b.state_count() + 1;
    let bounded = strings_up_to(a, bound) == strings_up_to(b, bound);
    ensure!(
        bounded == language_equal(a, b),
        "language_equal disagrees with enumeration up to {bound}"
    );
    Ok(())
}

/// Bipartite supervisor shape, containment in `CE`, and conservativeness of
/// the attack encoding.
pub fn bipartite_shape(s: &Automaton, ctx: &AttackContext) -> Check {
    let table = s.table();
    let bt = build_bt(s).map_err(|e| e.to_string())?;
    for q in bt.states() {
        let out = bt.transitions_from(q);
        match bt.role(q) {
            StateRole::Control => ensure!(
                out.len() == 1 && out.keys().all(|e| table.is_command(*e)),
                "control state {} does not issue exactly one command",
                bt.label(q)
            ),
            StateRole::Reaction => ensure!(
                out.keys().all(|e| table.is_plain(*e)),
                "reaction state {} issues a command",
                bt.label(q)
            ),
            r => return Err(format!("unexpected role {r:?} in BT(S)")),
        }
    }
    for w in strings_up_to(&bt, 6) {
        ensure!(
            is_bipartite_prefix(table, &w),
            "{} breaks command/observation alternation",
            table.format_string(&w)
        );
    }
    let lattice = CommandLattice::new(table.clone());
    ensure!(
        language_included(&bt, &build_ce(&lattice)),
        "L(BT(S)) is not contained in L(CE)"
    );
    let bt_a = build_bt_attacked(&bt, ctx);
    for (q, e, t) in bt.transitions() {
        ensure!(
            bt_a.step(q, e) == Some(t),
            "attack encoding removed a transition"
        );
    }
    // Strings of BT(S)^A using only original transitions are exactly L(BT(S)).
    let conservative: BTreeSet<Vec<EventId>> = strings_up_to(&bt_a, 6)
        .into_iter()
        .filter(|w| {
            let mut q = bt.initial();
            w.iter().all(|e| match bt.step(q, *e) {
                Some(t) => {
                    q = t;
                    true
                }
                None => false,
            })
        })
        .collect();
    ensure!(
        conservative == strings_up_to(&bt, 6),
        "attack encoding is not conservative"
    );
    Ok(())
}

/// Sampled extractions from BPNS are control equivalent; oracle mutations
/// are contained in BPNS exactly when they are control equivalent.
pub fn bpns_encodes_equivalents(p: &Problem, out: &PipelineOutput, seed: u64) -> Check {
    let g = &p.plant;
    let bt = build_bt(&p.supervisor).unwrap();
    let mut picker = RandomPicker::new(seed);
    for _ in 0..4 {
        let os = extract_os(&out.bpns, &mut picker).map_err(|e| e.to_string())?;
        let s2 = to_supervisor(&os).map_err(|e| e.to_string())?;
        ensure!(
            check_equivalent(g, &p.supervisor, &s2).unwrap().passed(),
            "extraction from BPNS is not control equivalent"
        );
    }
    ensure!(language_included(&bt, &out.bpns), "L(BT(S)) not in L(BPNS)");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..4 {
        let s2 = mutate_supervisor(&mut rng, &p.supervisor);
        let equivalent = check_equivalent(g, &p.supervisor, &s2).unwrap().passed();
        let bt2 = build_bt(&s2).unwrap();
        let inside = language_included(&bt2, &out.bpns);
        ensure!(
            equivalent == inside,
            "mutation equivalent={equivalent} but contained in BPNS={inside}"
        );
    }
    Ok(())
}

/// The four shape facts of the de-attacked structure.
pub fn de_attack_shape(s0: &Automaton) -> Check {
    let table = s0.table();
    let observable = table.observable();
    for q in s0.states() {
        let out = s0.transitions_from(q);
        let has_cmd = out.keys().any(|e| table.is_command(*e));
        let has_plain = out.keys().any(|e| table.is_plain(*e));
        ensure!(
            !(has_cmd && has_plain),
            "state {} mixes commands and events",
            s0.label(q)
        );
        match s0.role(q) {
            StateRole::Reaction => {
                ensure!(!has_cmd, "reaction state {} issues a command", s0.label(q));
                for (e, t) in out {
                    if observable.contains(*e) {
                        ensure!(
                            s0.role(*t) == StateRole::Control,
                            "observation at {} does not reach a control state",
                            s0.label(q)
                        );
                    } else {
                        ensure!(*t == q, "unobservable event at {} moves", s0.label(q));
                    }
                }
            }
            StateRole::Control => {
                ensure!(!has_plain, "control state {} has plant events", s0.label(q));
                for t in out.values() {
                    ensure!(
                        s0.role(*t) == StateRole::Reaction,
                        "command at {} does not reach a reaction state",
                        s0.label(q)
                    );
                }
            }
            r => return Err(format!("unexpected role {r:?} in S0")),
        }
    }
    Ok(())
}

/// Containment chain, clean-up monotonicity and bounds, shape facts, and
/// sampled extractions from ONS.
pub fn pipeline_invariants(p: &Problem, out: &PipelineOutput, seed: u64) -> Check {
    let r = &out.report;
    let bound = bpns_state_bound(
        p.plant.state_count(),
        p.supervisor.state_count(),
        out.lattice.len(),
    );
    ensure!(
        (out.bpns.state_count() as u128) <= bound,
        "BPNS has {} states, bound {bound}",
        out.bpns.state_count()
    );
    ensure!(
        r.cleanup_iterations <= r.cleanup_iteration_bound,
        "{} clean-up iterations exceed {}",
        r.cleanup_iterations,
        r.cleanup_iteration_bound
    );
    ensure!(
        r.cleanup_sizes.windows(2).all(|w| w[1] < w[0]),
        "clean-up sizes {:?} not strictly decreasing",
        r.cleanup_sizes
    );
    if let (Some(s0a), Some(s0)) = (&out.s0a, &out.s0) {
        ensure!(
            language_included(s0a, &out.bpns_a),
            "L(S0^A) not in L(BPNS^A)"
        );
        ensure!(language_included(s0, s0a), "L(S0) not in L(S0^A)");
        ensure!(language_included(s0, &out.bpns), "L(S0) not in L(BPNS)");
        de_attack_shape(s0)?;
        if let Some(ons) = &out.ons {
            ensure!(language_included(ons, s0), "L(ONS) not in L(S0)");
        }
    }
    if let Some(ons) = &out.ons {
        ensure!(language_included(ons, &out.bpns), "L(ONS) not in L(BPNS)");
        let os = out.os.as_ref().ok_or("ONS without OS")?;
        ensure!(language_included(os, ons), "L(OS) not in L(ONS)");
        let mut picker = RandomPicker::new(seed);
        for k in 0..3 {
            let os = if k == 0 {
                os.clone()
            } else {
                extract_os(ons, &mut picker).map_err(|e| e.to_string())?
            };
            ensure!(
                check_resilient_bipartite(&p.plant, &os, &out.ctx)
                    .unwrap()
                    .passed(),
                "extraction from ONS is not resilient"
            );
            let s2 = to_supervisor(&os).map_err(|e| e.to_string())?;
            ensure!(
                check_equivalent(&p.plant, &p.supervisor, &s2)
                    .unwrap()
                    .passed(),
                "extraction from ONS is not control equivalent"
            );
        }
    }
    Ok(())
}

/// Strings `u γ` with `u` in `L(ONS)` ending at a control state and `γ` a
/// command offered there by BPNS but pruned from ONS.
pub fn pruned_extensions(out: &PipelineOutput, limit: usize) -> Vec<Vec<EventId>> {
    let Some(ons) = &out.ons else {
        return Vec::new();
    };
    let bpns = &out.bpns;
    let start = (ons.initial(), bpns.initial());
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([(start, Vec::new())]);
    let mut found = Vec::new();
    while let Some(((q, r), u)) = queue.pop_front() {
        let offered: BTreeSet<EventId> = ons.enabled_commands(q).into_iter().collect();
        for c in bpns.enabled_commands(r) {
            if !offered.contains(&c) && found.len() < limit {
                let mut t = u.clone();
                t.push(c);
                found.push(t);
            }
        }
        for (e, q2) in ons.transitions_from(q) {
            let r2 = bpns.step(r, *e).expect("ONS inside BPNS");
            if seen.insert((*q2, r2)) {
                let mut u2 = u.clone();
                u2.push(*e);
                queue.push_back(((*q2, r2), u2));
            }
        }
    }
    found
}

/// Supervisors from BPNS realizing a pruned command are control equivalent
/// but not resilient; with an empty ONS every extraction from BPNS fails.
/// Returns how many such supervisors were checked.
pub fn pruned_commands_are_attackable(
    p: &Problem,
    out: &PipelineOutput,
    seed: u64,
    limit: usize,
) -> Result<usize, String> {
    let mut picker = RandomPicker::new(seed);
    let mut checked = 0;
    let candidates: Vec<Automaton> = if out.report.attacker_empty {
        Vec::new()
    } else if out.ons.is_none() {
        (0..limit.min(3))
            .map(|_| extract_os(&out.bpns, &mut picker).unwrap())
            .collect()
    } else {
        pruned_extensions(out, limit)
            .iter()
            .map(|t| {
                let bt = realize_through(&out.bpns, t, &out.lattice, &mut picker).unwrap();
                assert!(bt.accepts(t));
                bt
            })
            .collect()
    };
    for bt in candidates {
        if let Some(ons) = &out.ons {
            ensure!(!language_included(&bt, ons), "mutation stays inside ONS");
        }
        let s2 = to_supervisor(&bt).map_err(|e| e.to_string())?;
        ensure!(
            check_equivalent(&p.plant, &p.supervisor, &s2)
                .unwrap()
                .passed(),
            "supervisor realized from BPNS is not control equivalent"
        );
        ensure!(
            !check_resilient(&p.plant, &s2, &out.ctx).unwrap().passed(),
            "supervisor outside ONS is resilient"
        );
        checked += 1;
    }
    Ok(checked)
}

/// Failing resilience verdicts carry replayable witnesses and the internal
/// attacker is valid, covert and damage-reachable.
pub fn resilience_witnesses(p: &Problem, out: &PipelineOutput) -> Check {
    let ctx = &out.ctx;
    let v = check_resilient(&p.plant, &p.supervisor, ctx).unwrap();
    if v.passed() {
        return Ok(());
    }
    let w = v
        .witness_ids
        .as_ref()
        .ok_or("failing verdict without witness")?;
    let bt = build_bt(&p.supervisor).unwrap();
    ensure!(
        replay_attack(&p.plant, &bt, ctx, w),
        "witness {} does not replay",
        p.table.format_string(w)
    );
    let attacker = resilience_attack(&p.plant, &bt, ctx)
        .unwrap()
        .ok_or("no attacker behind a failing verdict")?;
    let violations = validate_attacker(&attacker, ctx);
    ensure!(violations.is_empty(), "attacker invalid: {}", violations[0]);
    let bt_a = build_bt_attacked(&bt, ctx);
    ensure!(
        check_covert(&p.plant, &out.ce_a, &bt_a, &attacker)
            .unwrap()
            .passed(),
        "synthesized attacker is not covert"
    );
    let d = check_damage(&p.plant, &out.ce_a, &bt_a, &attacker).unwrap();
    ensure!(d.passed(), "synthesized attacker does not reach damage");
    let dw = d.witness_ids.unwrap();
    let loop_ = damage_product(&p.plant, &[&out.ce_a, &bt_a, &attacker]).unwrap();
    let end = loop_
        .automaton
        .run(&dw)
        .ok_or("damage witness does not run")?;
    ensure!(
        loop_.automaton.is_marked(end),
        "damage witness ends unmarked"
    );
    Ok(())
}

/// The equivalence verdict matches a direct comparison of `L(G||S)` and
/// `L(G||S2)`: bounded enumeration up to length 8, and an exact
/// distinguishing string when the difference lies deeper.
pub fn equivalence_matches_closed_loops(p: &Problem, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..3 {
        let s2 = mutate_supervisor(&mut rng, &p.supervisor);
        let verdict = check_equivalent(&p.plant, &p.supervisor, &s2).unwrap();
        let l1 = sync_product(&[&p.plant, &p.supervisor]).unwrap();
        let l2 = sync_product(&[&p.plant, &s2]).unwrap();
        let bounded_equal = strings_up_to(&l1, 8) == strings_up_to(&l2, 8);
        if verdict.passed() {
            ensure!(bounded_equal, "equivalent verdict but closed loops differ");
        } else if bounded_equal {
            let d = distinguishing_string(&l1, &l2).ok_or("verdict fails but languages agree")?;
            ensure!(d.word.len() > 8, "missed short difference");
        }
        if !verdict.passed() {
            let w = verdict.witness_ids.as_ref().ok_or("fail without witness")?;
            let o1 = deso::verify::observed_behavior(&p.plant, &p.supervisor).unwrap();
            let o2 = deso::verify::observed_behavior(&p.plant, &s2).unwrap();
            ensure!(
                o1.accepts(w) != o2.accepts(w),
                "equivalence witness does not separate"
            );
        }
    }
    Ok(())
}

/// Problems and every artifact survive a serialization round trip.
pub fn round_trips(p: &Problem, out: &PipelineOutput) -> Check {
    let again = parse_problem(&serialize_problem(p)).map_err(|e| e.to_string())?;
    ensure!(
        isomorphic(&again.plant, &p.plant),
        "plant changed in round trip"
    );
    ensure!(
        isomorphic(&again.supervisor, &p.supervisor),
        "supervisor changed in round trip"
    );
    let mut artifacts = vec![&out.bps, &out.bpns, &out.bpns_a, &out.ce_a];
    artifacts.extend(out.ons.iter());
    artifacts.extend(out.os.iter());
    artifacts.extend(out.attacker.iter());
    for a in artifacts {
        let doc = automaton_to_doc(a, None);
        let text = serde_json::to_string(&doc).unwrap();
        let (_, back) =
            automaton_from_doc(&serde_json::from_str(&text).unwrap()).map_err(|e| e.to_string())?;
        ensure!(isomorphic(&back, a), "automaton changed in round trip");
    }
    Ok(())
}

/// Every structural property on one random micro instance.
pub fn all_invariants(seed: u64) -> Check {
    invariants_on(seed, Shape::MICRO)
}

pub fn invariants_on(seed: u64, shape: Shape) -> Check {
    let p = random_problem(seed, shape);
    let ctx = AttackContext::new(p.table.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    let a = random_automaton(&mut rng, &p.table, 3, 0.5);
    let b = random_automaton(&mut rng, &p.table, 3, 0.5);
    let c = random_automaton(&mut rng, &p.table, 2, 0.5);
    let kept: EventSet = p
        .table
        .plain_events()
        .filter(|_| rng.random_bool(0.5))
        .collect();
    projection_rules(&a, &kept)?;
    product_associative(&a, &b, &c)?;
    accessible_idempotent(&a)?;
    language_equal_sound(&a, &c)?;
    bipartite_shape(&p.supervisor, &ctx)?;
    let out = run_pipeline(&p, &mut LexicographicPicker, false).map_err(|e| e.to_string())?;
    bpns_encodes_equivalents(&p, &out, seed)?;
    pipeline_invariants(&p, &out, seed)?;
    pruned_commands_are_attackable(&p, &out, seed, 3)?;
    resilience_witnesses(&p, &out)?;
    equivalence_matches_closed_loops(&p, seed)?;
    round_trips(&p, &out)?;
    Ok(())
}

/// `L(BPNS)` strings up to `depth` against the brute-force union over
/// control equivalent supervisors; returns the number of mismatches.
pub fn oracle_mismatches(p: &Problem, depth: usize) -> usize {
    let out = run_pipeline(p, &mut LexicographicPicker, false).unwrap();
    let bpns = strings_up_to(&out.bpns, depth);
    let oracle = realizable_strings(p, depth);
    bpns.symmetric_difference(&oracle).count()
}

pub fn inclusion_gap(a: &Automaton, b: &Automaton) -> Option<Vec<EventId>> {
    inclusion_witness(a, b)
}

/// Plant-event patterns of the three attack families on the fixture.
pub const ATTACK_FAMILIES: [(&str, &str); 3] = [
    ("enable e, then a d c", "e a d c"),
    ("b a c, then e a", "b a c e a"),
    ("a c d, then e a", "a c d e a"),
];

/// For each family, a marked string of `G || CE^A || BPNS^A || A` with that
/// plant projection, if any.
pub fn attack_family_witnesses(
    p: &Problem,
    out: &PipelineOutput,
) -> Vec<(String, Option<Vec<EventId>>)> {
    let Some(attacker) = &out.attacker else {
        return ATTACK_FAMILIES
            .iter()
            .map(|(n, _)| (n.to_string(), None))
            .collect();
    };
    let loop_ = damage_product(&p.plant, &[&out.ce_a, &out.bpns_a, attacker]).unwrap();
    ATTACK_FAMILIES
        .iter()
        .map(|(name, pattern)| {
            let w = marked_with_projection(&loop_.automaton, &word(&p.table, pattern));
            (name.to_string(), w)
        })
        .collect()
}
