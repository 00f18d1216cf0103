//! Graphviz export.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::automata::{Automaton, StateId, StateRole};

/// Rendering profile.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DotStyle {
    /// Full state labels.
    #[default]
    Labels,
    /// Numeric node names, for large structures.
    Compact,
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders `a` as a DOT digraph. Nodes appear in state-id order and parallel
/// edges are merged into one comma-separated label.
pub fn export_dot(a: &Automaton, name: &str, style: DotStyle) -> String {
    let table = a.table();
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(name)).unwrap();
    out.push_str("  rankdir=LR;\n  node [fontname=\"Helvetica\"];\n");
    out.push_str("  __start [shape=point];\n");
    for q in a.states() {
        let label = match style {
            DotStyle::Labels => a.label(q).to_string(),
            DotStyle::Compact => q.0.to_string(),
        };
        let mut attrs = vec![format!("label=\"{}\"", escape(&label))];
        match a.role(q) {
            StateRole::Control => attrs.push("shape=box".into()),
            StateRole::Detect => {
                attrs.push("shape=octagon".into());
                attrs.push("color=red".into());
            }
            StateRole::Dump => {
                attrs.push("shape=box".into());
                attrs.push("style=dashed".into());
                attrs.push("color=gray".into());
            }
            StateRole::Reaction | StateRole::Plain => attrs.push("shape=ellipse".into()),
        }
        if a.is_marked(q) {
            attrs.push("peripheries=2".into());
        }
        writeln!(out, "  n{} [{}];", q.0, attrs.join(", ")).unwrap();
    }
    writeln!(out, "  __start -> n{};", a.initial().0).unwrap();
    for q in a.states() {
        let mut grouped: BTreeMap<StateId, Vec<&str>> = BTreeMap::new();
        for (e, t) in a.transitions_from(q) {
            grouped.entry(*t).or_default().push(table.name(*e));
        }
        for (t, names) in grouped {
            writeln!(
                out,
                "  n{} -> n{} [label=\"{}\"];",
                q.0,
                t.0,
                escape(&names.join(", "))
            )
            .unwrap();
        }
    }
    out.push_str("}\n");
    out
}
