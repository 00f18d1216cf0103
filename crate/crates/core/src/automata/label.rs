use std::cmp::Ordering;
use std::fmt;

/// Structured, canonical name of a state.
///
/// Subset labels are kept sorted and deduplicated so that two labels are equal
/// exactly when they denote the same structure.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StateLabel {
    /// A named state of a plant or supervisor.
    Atom(String),
    /// A state produced by synthesis, numbered in discovery order.
    Index(usize),
    /// A subset-construction state.
    Set(Vec<StateLabel>),
    /// A product state.
    Tuple(Vec<StateLabel>),
    /// The control state `q^com` attached to a reaction state `q`.
    Com(Box<StateLabel>),
    /// The command-execution state `q^γ`; holds the command's display name.
    Gamma(String),
    /// The initial state of a command execution automaton.
    CeInit,
    Detect,
    Dump,
    Obs,
}

impl StateLabel {
    pub fn atom(name: impl Into<String>) -> Self {
        StateLabel::Atom(name.into())
    }

    /// Builds a subset label, sorting and deduplicating the members.
    pub fn set(mut members: Vec<StateLabel>) -> Self {
        members.sort();
        members.dedup();
        StateLabel::Set(members)
    }

    pub fn com(inner: StateLabel) -> Self {
        StateLabel::Com(Box::new(inner))
    }

    fn rank(&self) -> u8 {
        match self {
            StateLabel::Atom(_) => 0,
            StateLabel::Index(_) => 1,
            StateLabel::Set(_) => 2,
            StateLabel::Tuple(_) => 3,
            StateLabel::Com(_) => 4,
            StateLabel::Gamma(_) => 5,
            StateLabel::CeInit => 6,
            StateLabel::Detect => 7,
            StateLabel::Dump => 8,
            StateLabel::Obs => 9,
        }
    }
}

/// Numeric-aware comparison so that `9 < 10`.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

impl Ord for StateLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        use StateLabel::*;
        match (self, other) {
            (Atom(a), Atom(b)) => natural_cmp(a, b),
            (Index(a), Index(b)) => a.cmp(b),
            (Set(a), Set(b)) | (Tuple(a), Tuple(b)) => a.cmp(b),
            (Com(a), Com(b)) => a.cmp(b),
            (Gamma(a), Gamma(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for StateLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn write_joined(f: &mut fmt::Formatter<'_>, items: &[StateLabel]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateLabel::Atom(s) => f.write_str(s),
            StateLabel::Index(i) => write!(f, "{i}"),
            StateLabel::Set(items) => {
                f.write_str("{")?;
                write_joined(f, items)?;
                f.write_str("}")
            }
            StateLabel::Tuple(items) => {
                f.write_str("(")?;
                write_joined(f, items)?;
                f.write_str(")")
            }
            StateLabel::Com(inner) => write!(f, "{inner}^com"),
            StateLabel::Gamma(cmd) => write!(f, "q^{cmd}"),
            StateLabel::CeInit => f.write_str("q_ce^init"),
            StateLabel::Detect => f.write_str("q^detect"),
            StateLabel::Dump => f.write_str("q^dump"),
            StateLabel::Obs => f.write_str("q^obs"),
        }
    }
}
