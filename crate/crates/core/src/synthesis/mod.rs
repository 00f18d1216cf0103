//! Attacker synthesis, command pruning, clean-up and extraction.

pub mod extract;
pub mod pipeline;
pub mod procedures;
pub mod supremal;

pub use extract::{extract_os, realize_through, CommandPicker, LexicographicPicker, RandomPicker};
pub use pipeline::{run_pipeline, Outcome, PipelineOutput, Size, StageSize, SynthesisReport};
pub use procedures::{
    attacker_constraint, clean_up, command_constraint, damage_product, de_attack, prune_commands,
    synthesize_attacker, synthesize_s0a, Cleanup, Pruning,
};
pub use supremal::{supremal_safe, ControlConstraint};
