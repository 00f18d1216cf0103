//! End-to-end obfuscation run.

use std::time::Instant;

use serde::Serialize;

use super::extract::{extract_os, CommandPicker};
use super::procedures::{clean_up, de_attack, prune_commands, synthesize_attacker};
use crate::attack::{build_ce, build_ce_attacked, AttackContext, CommandLattice};
use crate::automata::Automaton;
use crate::error::{ModelError, Result};
use crate::io::Problem;
use crate::preserving::{
    bpns_state_bound, build_b, build_bpns, build_bpns_attacked, build_bps, Observer,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Size {
    pub states: usize,
    pub transitions: usize,
}

impl Size {
    pub fn of(a: &Automaton) -> Self {
        Size {
            states: a.state_count(),
            transitions: a.transition_count(),
        }
    }
}

/// Overall result of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// An obfuscated supervisor was produced.
    Obfuscated,
    /// No covert damage-reachable attacker exists against any control
    /// equivalent supervisor; the full structure is returned.
    AlreadyResilient,
    /// No resilient control equivalent supervisor exists.
    NoResilientSupervisor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageSize {
    pub stage: String,
    #[serde(flatten)]
    pub size: Size,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub millis: f64,
}

/// Structured record of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesisReport {
    pub outcome: Outcome,
    /// Sizes in pipeline order.
    pub sizes: Vec<StageSize>,
    pub cleanup_iterations: usize,
    pub cleanup_iteration_bound: usize,
    /// State count after each clean-up iteration, starting with `S0`.
    pub cleanup_sizes: Vec<usize>,
    pub bpns_state_bound: String,
    pub attacker_empty: bool,
    pub ons_empty: bool,
    pub messages: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<StageTiming>>,
}

impl SynthesisReport {
    pub fn size(&self, stage: &str) -> Option<Size> {
        self.sizes.iter().find(|s| s.stage == stage).map(|s| s.size)
    }
}

/// Every artifact of a run.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub lattice: CommandLattice,
    pub ctx: AttackContext,
    pub observer: Observer,
    pub bps: Automaton,
    pub ce: Automaton,
    pub ce_a: Automaton,
    pub bpns: Automaton,
    pub bpns_a: Automaton,
    pub attacker: Option<Automaton>,
    pub s0a: Option<Automaton>,
    pub s0: Option<Automaton>,
    pub ons: Option<Automaton>,
    pub os: Option<Automaton>,
    pub report: SynthesisReport,
}

struct Clock {
    enabled: bool,
    last: Instant,
    stages: Vec<StageTiming>,
}

impl Clock {
    fn lap(&mut self, stage: &str) {
        if self.enabled {
            let now = Instant::now();
            self.stages.push(StageTiming {
                stage: stage.to_string(),
                millis: (now - self.last).as_secs_f64() * 1e3,
            });
            self.last = now;
        }
    }
}

/// Runs the whole construction on a problem.
///
/// With `timings` set, the report carries wall-clock time per stage; without
/// it the report is a pure function of the input.
pub fn run_pipeline(
    problem: &Problem,
    picker: &mut dyn CommandPicker,
    timings: bool,
) -> Result<PipelineOutput> {
    let mut clock = Clock {
        enabled: timings,
        last: Instant::now(),
        stages: Vec::new(),
    };
    let table = problem.table.clone();
    let lattice = CommandLattice::new(table.clone());
    let ctx = AttackContext::new(table.clone());
    let g = &problem.plant;
    let mut sizes: Vec<(String, Size)> = Vec::new();
    let mut messages = Vec::new();

    let observer = build_b(g, &problem.supervisor)?;
    sizes.push(("B".into(), Size::of(&observer.automaton)));
    let bps = build_bps(&observer, &lattice)?;
    sizes.push(("BPS".into(), Size::of(&bps)));
    let ce = build_ce(&lattice);
    let ce_a = build_ce_attacked(&lattice, &ctx);
    let bpns = build_bpns(&bps, &ce)?;
    sizes.push(("BPNS".into(), Size::of(&bpns)));
    let bound = bpns_state_bound(
        g.state_count(),
        problem.supervisor.state_count(),
        lattice.len(),
    );
    if bpns.state_count() as u128 > bound {
        return Err(ModelError::internal(format!(
            "BPNS has {} states, above the bound {bound}",
            bpns.state_count()
        )));
    }
    let bpns_a = build_bpns_attacked(&bpns, &ctx);
    sizes.push(("BPNS^A".into(), Size::of(&bpns_a)));
    clock.lap("behavior-preserving structure");

    let attacker = synthesize_attacker(g, &ce_a, &bpns_a, &ctx)?;
    clock.lap("attacker synthesis");
    let mut report = SynthesisReport {
        outcome: Outcome::Obfuscated,
        sizes: Vec::new(),
        cleanup_iterations: 0,
        cleanup_iteration_bound: 0,
        cleanup_sizes: Vec::new(),
        bpns_state_bound: bound.to_string(),
        attacker_empty: attacker.is_none(),
        ons_empty: false,
        messages: Vec::new(),
        timings: None,
    };
    let (s0a, s0, ons) = match &attacker {
        None => {
            messages.push(
                "no covert damage-reachable attacker exists: the input supervisor is already resilient"
                    .to_string(),
            );
            report.outcome = Outcome::AlreadyResilient;
            (None, None, Some(bpns.clone()))
        }
        Some(att) => {
            sizes.push(("A".into(), Size::of(att)));
            let pruning = prune_commands(g, &ce_a, &bpns_a, att, &lattice)?;
            sizes.push((
                "P".into(),
                Size {
                    states: pruning.product_states,
                    transitions: pruning.product_transitions,
                },
            ));
            clock.lap("command pruning");
            match pruning.s0a {
                None => (None, None, None),
                Some(s0a) => {
                    sizes.push(("S0^A".into(), Size::of(&s0a)));
                    let s0 = de_attack(&s0a, &lattice);
                    sizes.push(("S0".into(), Size::of(&s0)));
                    let cleanup = clean_up(&s0, &lattice)?;
                    clock.lap("clean-up");
                    report.cleanup_iterations = cleanup.iterations;
                    report.cleanup_iteration_bound = s0.state_count() / 2;
                    report.cleanup_sizes = cleanup.sizes.clone();
                    (Some(s0a), Some(s0), cleanup.result)
                }
            }
        }
    };
    let os = match &ons {
        Some(ons) => {
            sizes.push(("ONS".into(), Size::of(ons)));
            let os = extract_os(ons, picker)?;
            sizes.push(("OS".into(), Size::of(&os)));
            clock.lap("extraction");
            Some(os)
        }
        None => {
            messages.push("no resilient control equivalent supervisor exists".to_string());
            report.outcome = Outcome::NoResilientSupervisor;
            report.ons_empty = true;
            None
        }
    };
    report.sizes = sizes
        .into_iter()
        .map(|(stage, size)| StageSize { stage, size })
        .collect();
    report.messages = messages;
    if timings {
        report.timings = Some(clock.stages);
    }
    Ok(PipelineOutput {
        lattice,
        ctx,
        observer,
        bps,
        ce,
        ce_a,
        bpns,
        bpns_a,
        attacker,
        s0a,
        s0,
        ons,
        os,
        report,
    })
}
