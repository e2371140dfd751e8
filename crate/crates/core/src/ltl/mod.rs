//! Linear-time temporal logic: abstract syntax, concrete syntax, lasso-trace
//! semantics and a bounded equivalence check.

mod equiv;
mod eval;
mod parser;
mod print;
pub mod random;
mod trace;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use equiv::{equivalent, equivalent_with_cap, Bound, EquivError, EquivStatus, EquivVerdict, DEFAULT_ATOM_CAP};
pub use eval::{evaluate, EvalError};
pub use parser::{parse, validate_fragment, ParseError, Token};
pub use print::{print, PrintMode};
pub use trace::{LassoTrace, Letter, TraceError};

/// An LTL formula.
///
/// `W`, `R`, `F` and `G` are kept as first-class variants so that printing
/// reproduces what was parsed; evaluation rewrites them into the core
/// operators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(String),
    True,
    False,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    WeakUntil(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
    Finally(Box<Formula>),
    Globally(Box<Formula>),
}

/// Returns true if `name` is a legal atomic proposition (`[a-z_][a-z0-9_]*`)
/// and not one of the reserved constants.
pub fn is_atom_name(name: &str) -> bool {
    let mut chars = name.chars();
    let head_ok = matches!(chars.next(), Some(c) if c.is_ascii_lowercase() || c == '_');
    head_ok
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        && name != "true"
        && name != "false"
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Formula {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(f: Formula, g: Formula) -> Formula {
        Formula::And(Box::new(f), Box::new(g))
    }

    pub fn or(f: Formula, g: Formula) -> Formula {
        Formula::Or(Box::new(f), Box::new(g))
    }

    pub fn implies(f: Formula, g: Formula) -> Formula {
        Formula::Implies(Box::new(f), Box::new(g))
    }

    pub fn iff(f: Formula, g: Formula) -> Formula {
        Formula::Iff(Box::new(f), Box::new(g))
    }

    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }

    pub fn until(f: Formula, g: Formula) -> Formula {
        Formula::Until(Box::new(f), Box::new(g))
    }

    pub fn weak_until(f: Formula, g: Formula) -> Formula {
        Formula::WeakUntil(Box::new(f), Box::new(g))
    }

    pub fn release(f: Formula, g: Formula) -> Formula {
        Formula::Release(Box::new(f), Box::new(g))
    }

    pub fn finally(f: Formula) -> Formula {
        Formula::Finally(Box::new(f))
    }

    pub fn globally(f: Formula) -> Formula {
        Formula::Globally(Box::new(f))
    }

    /// Immediate subformulas, left to right.
    pub fn children(&self) -> Vec<&Formula> {
        use Formula::*;
        match self {
            Atom(_) | True | False => vec![],
            Not(f) | Next(f) | Finally(f) | Globally(f) => vec![f],
            And(f, g) | Or(f, g) | Implies(f, g) | Iff(f, g) | Until(f, g) | WeakUntil(f, g) | Release(f, g) => {
                vec![f, g]
            }
        }
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Formula::size).sum::<usize>()
    }

    /// Nesting depth of `X` operators.
    pub fn next_depth(&self) -> usize {
        let below = self.children().into_iter().map(Formula::next_depth).max().unwrap_or(0);
        match self {
            Formula::Next(_) => below + 1,
            _ => below,
        }
    }

    /// True if the formula uses no operator whose meaning depends on an
    /// unbounded suffix (`U W R F G`).
    pub fn is_until_free(&self) -> bool {
        use Formula::*;
        match self {
            Until(..) | WeakUntil(..) | Release(..) | Finally(_) | Globally(_) => false,
            _ => self.children().into_iter().all(Formula::is_until_free),
        }
    }

    /// The set of atomic propositions, sorted.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        if let Formula::Atom(name) = self {
            out.insert(name.clone());
        }
        for child in self.children() {
            child.collect_atoms(out);
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self, PrintMode::Minimal))
    }
}

impl std::str::FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

// Formulas travel as their minimal-parens concrete syntax.
impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&print(self, PrintMode::Minimal))
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}
