use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use deso::attack::{
    build_bt, build_bt_attacked, build_ce, build_ce_attacked, to_supervisor, validate_attacker,
    AttackContext, CommandLattice,
};
use deso::automata::{Automaton, EventTable};
use deso::io::document::automaton_to_doc;
use deso::io::{
    export_dot, parse_automaton, parse_problem, AutomatonDoc, DotStyle, ParseError, PickerPolicy,
    Problem,
};
use deso::preserving::{build_b, build_bpns, build_bpns_attacked, build_bps};
use deso::synthesis::{
    run_pipeline, synthesize_attacker, CommandPicker, LexicographicPicker, Outcome, RandomPicker,
    SynthesisReport,
};
use deso::verify::{
    check_covert, check_damage, check_equivalent, check_resilient, resilience_attack, Verdict,
};
use deso::ModelError;

#[derive(Parser)]
#[command(
    name = "deso",
    version,
    about = "Supervisor obfuscation against covert actuator attackers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a problem file and list every violation.
    Validate { file: PathBuf },
    /// Build one intermediate structure.
    Build {
        kind: BuildKind,
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Synthesize the attacker encoding all covert damage strings against
    /// the behavior-preserving structure.
    AttackSynth {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the full pipeline and emit ONS, OS and a report.
    Obfuscate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Output file, or directory when several inputs are given.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Record per-stage wall-clock times (makes output nondeterministic).
        #[arg(long)]
        timings: bool,
        #[arg(long)]
        picker: Option<PickerArg>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a property of a supervisor.
    Verify {
        property: Property,
        file: PathBuf,
        /// `original` or a path to a supervisor document.
        #[arg(long, default_value = "original")]
        supervisor: String,
        /// Second supervisor for equivalence.
        #[arg(long)]
        other: Option<PathBuf>,
        /// Attacker document for covert and damage; synthesized when absent.
        #[arg(long)]
        attacker: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Render an automaton document as Graphviz DOT.
    ExportDot {
        artifact: PathBuf,
        #[arg(long)]
        compact: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BuildKind {
    Bt,
    BtAttacked,
    Ce,
    CeAttacked,
    B,
    Bps,
    Bpns,
    BpnsAttacked,
}

#[derive(Clone, Copy, ValueEnum)]
enum Property {
    Resilience,
    Equivalence,
    Covert,
    Damage,
}

#[derive(Clone, Copy, ValueEnum)]
enum PickerArg {
    Lexicographic,
    Random,
}

/// Failure carrying its exit status.
#[derive(Debug)]
enum Failure {
    Internal(String),
    Validation(Vec<String>),
    NoAttacker(String),
    EmptyOns(String),
    /// Already printed; only the status remains.
    Reported(u8),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Internal(_) => 1,
            Failure::Validation(_) => 2,
            Failure::NoAttacker(_) => 3,
            Failure::EmptyOns(_) => 4,
            Failure::Reported(c) => *c,
        }
    }

    fn report(&self) {
        match self {
            Failure::Internal(m) => eprintln!("error: {m}"),
            Failure::Validation(v) => {
                for line in v {
                    eprintln!("invalid: {line}");
                }
            }
            Failure::NoAttacker(m) | Failure::EmptyOns(m) => eprintln!("{m}"),
            Failure::Reported(_) => {}
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Config(_) | ModelError::Precondition(_) => {
                Failure::Validation(vec![e.to_string()])
            }
            _ => Failure::Internal(e.to_string()),
        }
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Validation(e.violations().iter().map(|v| v.to_string()).collect())
    }
}

type CliResult<T> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Internal(format!("cannot read {}: {e}", path.display())))
}

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::Internal(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn load_problem(path: &Path) -> CliResult<Problem> {
    Ok(parse_problem(&read(path)?)?)
}

/// Loads an automaton document and checks it speaks the problem's events.
fn load_on(path: &Path, table: &Arc<EventTable>) -> CliResult<Automaton> {
    let (t, a) = parse_automaton(&read(path)?)?;
    if *t != **table {
        return Err(Failure::Validation(vec![format!(
            "{}: event declarations differ from the problem file",
            path.display()
        )]));
    }
    Ok(a)
}

/// A plain supervisor, or the flattening of a bipartite one.
fn load_supervisor(choice: &str, problem: &Problem) -> CliResult<Automaton> {
    if choice == "original" {
        return Ok(problem.supervisor.clone());
    }
    let a = load_on(Path::new(choice), &problem.table)?;
    if a.alphabet().iter().any(|e| problem.table.is_command(*e)) {
        Ok(to_supervisor(&a)?)
    } else {
        Ok(a)
    }
}

fn picker_for(
    problem: &Problem,
    picker: Option<PickerArg>,
    seed: Option<u64>,
) -> Box<dyn CommandPicker> {
    let policy = match picker {
        Some(PickerArg::Lexicographic) => PickerPolicy::Lexicographic,
        Some(PickerArg::Random) => PickerPolicy::Random,
        None => problem.options.picker,
    };
    match policy {
        PickerPolicy::Lexicographic => Box::new(LexicographicPicker),
        PickerPolicy::Random => Box::new(match seed {
            Some(s) => RandomPicker::new(s),
            None => RandomPicker::from_env(problem.options.seed),
        }),
    }
}

fn validate(file: &Path) -> CliResult<()> {
    let p = load_problem(file)?;
    eprintln!(
        "ok: {} events, {} commands, plant {} states, supervisor {} states",
        p.table.plain_count(),
        p.table.commands().count(),
        p.plant.state_count(),
        p.supervisor.state_count()
    );
    Ok(())
}

fn build(kind: BuildKind, file: &Path, output: Option<&Path>) -> CliResult<()> {
    let p = load_problem(file)?;
    let lattice = CommandLattice::new(p.table.clone());
    let ctx = AttackContext::new(p.table.clone());
    let (name, a) = match kind {
        BuildKind::Bt => ("BT", build_bt(&p.supervisor)?),
        BuildKind::BtAttacked => ("BT^A", build_bt_attacked(&build_bt(&p.supervisor)?, &ctx)),
        BuildKind::Ce => ("CE", build_ce(&lattice)),
        BuildKind::CeAttacked => ("CE^A", build_ce_attacked(&lattice, &ctx)),
        BuildKind::B => ("B", build_b(&p.plant, &p.supervisor)?.automaton),
        BuildKind::Bps => (
            "BPS",
            build_bps(&build_b(&p.plant, &p.supervisor)?, &lattice)?,
        ),
        BuildKind::Bpns | BuildKind::BpnsAttacked => {
            let bps = build_bps(&build_b(&p.plant, &p.supervisor)?, &lattice)?;
            let bpns = build_bpns(&bps, &build_ce(&lattice))?;
            if matches!(kind, BuildKind::Bpns) {
                ("BPNS", bpns)
            } else {
                ("BPNS^A", build_bpns_attacked(&bpns, &ctx))
            }
        }
    };
    eprintln!(
        "{name}: {} states, {} transitions",
        a.state_count(),
        a.transition_count()
    );
    emit(output, &to_json(&automaton_to_doc(&a, Some(name))))
}

fn attack_synth(file: &Path, output: Option<&Path>) -> CliResult<()> {
    let p = load_problem(file)?;
    let lattice = CommandLattice::new(p.table.clone());
    let ctx = AttackContext::new(p.table.clone());
    let bps = build_bps(&build_b(&p.plant, &p.supervisor)?, &lattice)?;
    let bpns_a = build_bpns_attacked(&build_bpns(&bps, &build_ce(&lattice))?, &ctx);
    let ce_a = build_ce_attacked(&lattice, &ctx);
    match synthesize_attacker(&p.plant, &ce_a, &bpns_a, &ctx)? {
        None => Err(Failure::NoAttacker(
            "no covert damage-reachable attacker exists".into(),
        )),
        Some(a) => {
            eprintln!(
                "attacker: {} states, {} transitions",
                a.state_count(),
                a.transition_count()
            );
            emit(output, &to_json(&automaton_to_doc(&a, Some("A"))))
        }
    }
}

#[derive(Serialize)]
struct ObfuscationDoc {
    report: SynthesisReport,
    ons: Option<AutomatonDoc>,
    os: Option<AutomatonDoc>,
}

fn obfuscate_one(
    file: &Path,
    picker: Option<PickerArg>,
    seed: Option<u64>,
    timings: bool,
) -> CliResult<(String, Outcome, String)> {
    let p = load_problem(file)?;
    let mut pk = picker_for(&p, picker, seed);
    let out = run_pipeline(&p, pk.as_mut(), timings)?;
    let r = &out.report;
    let mut summary = format!("{}: {:?}", file.display(), r.outcome);
    for s in &r.sizes {
        summary.push_str(&format!(", {} {}", s.stage, s.size.states));
    }
    summary.push_str(&format!(
        ", clean-up iterations {} (bound {})",
        r.cleanup_iterations, r.cleanup_iteration_bound
    ));
    for m in &r.messages {
        summary.push_str(&format!("\n  {m}"));
    }
    let doc = ObfuscationDoc {
        report: out.report.clone(),
        ons: out.ons.as_ref().map(|a| automaton_to_doc(a, Some("ONS"))),
        os: out.os.as_ref().map(|a| automaton_to_doc(a, Some("OS"))),
    };
    Ok((to_json(&doc), out.report.outcome, summary))
}

fn obfuscate(
    files: &[PathBuf],
    output: Option<&Path>,
    jobs: usize,
    timings: bool,
    picker: Option<PickerArg>,
    seed: Option<u64>,
) -> CliResult<()> {
    let run = |f: &PathBuf| obfuscate_one(f, picker, seed, timings);
    let results: Vec<CliResult<(String, Outcome, String)>> = if files.len() > 1 && jobs > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Failure::Internal(e.to_string()))?
            .install(|| files.par_iter().map(run).collect())
    } else {
        files.iter().map(run).collect()
    };
    if files.len() > 1 {
        if let Some(dir) = output {
            fs::create_dir_all(dir)
                .map_err(|e| Failure::Internal(format!("cannot create {}: {e}", dir.display())))?;
        }
    }
    let mut status: Option<u8> = None;
    for (file, res) in files.iter().zip(results) {
        let failure = match res {
            Err(f) => Some(f),
            Ok((json, outcome, summary)) => {
                eprintln!("{summary}");
                let target = match output {
                    Some(o) if files.len() > 1 => {
                        let stem = file
                            .file_stem()
                            .and_then(|s| s.to_str())
                            .unwrap_or("problem");
                        Some(o.join(format!("{stem}.obfuscated.json")))
                    }
                    Some(o) => Some(o.to_path_buf()),
                    None => None,
                };
                emit(target.as_deref(), &json)?;
                match outcome {
                    Outcome::Obfuscated => None,
                    Outcome::AlreadyResilient => Some(Failure::NoAttacker(format!(
                        "{}: input supervisor is already resilient",
                        file.display()
                    ))),
                    Outcome::NoResilientSupervisor => Some(Failure::EmptyOns(format!(
                        "{}: no resilient control equivalent supervisor exists",
                        file.display()
                    ))),
                }
            }
        };
        if let Some(f) = failure {
            f.report();
            status.get_or_insert(f.code());
        }
    }
    match status {
        Some(c) => Err(Failure::Reported(c)),
        None => Ok(()),
    }
}

fn verify(
    property: Property,
    file: &Path,
    supervisor: &str,
    other: Option<&Path>,
    attacker: Option<&Path>,
    output: Option<&Path>,
) -> CliResult<()> {
    let p = load_problem(file)?;
    let ctx = AttackContext::new(p.table.clone());
    let lattice = CommandLattice::new(p.table.clone());
    let s = load_supervisor(supervisor, &p)?;
    let verdict: Verdict = match property {
        Property::Resilience => check_resilient(&p.plant, &s, &ctx)?,
        Property::Equivalence => {
            let Some(o) = other else {
                return Err(Failure::Validation(vec![
                    "equivalence needs --other <supervisor>".into(),
                ]));
            };
            let s2 = load_supervisor(o.to_str().unwrap_or_default(), &p)?;
            check_equivalent(&p.plant, &s, &s2)?
        }
        Property::Covert | Property::Damage => {
            let bt = build_bt(&s)?;
            let att = match attacker {
                Some(path) => {
                    let a = load_on(path, &p.table)?;
                    let v = validate_attacker(&a, &ctx);
                    if !v.is_empty() {
                        return Err(Failure::Validation(
                            v.iter().map(|x| x.to_string()).collect(),
                        ));
                    }
                    a
                }
                None => resilience_attack(&p.plant, &bt, &ctx)?.ok_or_else(|| {
                    Failure::NoAttacker(
                        "no attacker given and no covert damage-reachable attacker exists".into(),
                    )
                })?,
            };
            let bt_a = build_bt_attacked(&bt, &ctx);
            let ce_a = build_ce_attacked(&lattice, &ctx);
            if matches!(property, Property::Covert) {
                check_covert(&p.plant, &ce_a, &bt_a, &att)?
            } else {
                check_damage(&p.plant, &ce_a, &bt_a, &att)?
            }
        }
    };
    eprintln!("{}: {:?}", verdict.context, verdict.outcome);
    emit(output, &to_json(&verdict))
}

fn export(artifact: &Path, compact: bool, output: Option<&Path>) -> CliResult<()> {
    let (_, a) = parse_automaton(&read(artifact)?)?;
    let name = artifact
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("automaton");
    let style = if compact {
        DotStyle::Compact
    } else {
        DotStyle::Labels
    };
    emit(output, &export_dot(&a, name, style))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Validate { file } => validate(&file),
        Command::Build { kind, file, output } => build(kind, &file, output.as_deref()),
        Command::AttackSynth { file, output } => attack_synth(&file, output.as_deref()),
        Command::Obfuscate {
            files,
            output,
            jobs,
            timings,
            picker,
            seed,
        } => obfuscate(&files, output.as_deref(), jobs, timings, picker, seed),
        Command::Verify {
            property,
            file,
            supervisor,
            other,
            attacker,
            output,
        } => verify(
            property,
            &file,
            &supervisor,
            other.as_deref(),
            attacker.as_deref(),
            output.as_deref(),
        ),
        Command::ExportDot {
            artifact,
            compact,
            output,
        } => export(&artifact, compact, output.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            f.report();
            ExitCode::from(f.code())
        }
    }
}
