//! Scripted human-in-the-loop runs against the shipped mock.

#![allow(dead_code)]

use specloop_core::ltl::{equivalent, parse, print, Bound, PrintMode};
use specloop_core::session::{SessionState, Settings, Workbench};

pub struct Workflow {
    pub name: &'static str,
    pub nl: &'static str,
    /// Final formula of the first translate.
    pub initial: &'static str,
    /// The user's correction: (fragment, formula text).
    pub edit: (&'static str, &'static str),
    /// What the expert meant.
    pub intended: &'static str,
}

pub const WORKFLOWS: [Workflow; 3] = [
    Workflow {
        name: "operator precedence",
        nl: "a holds until b holds or always a holds",
        initial: "(a U (b | G(a)))",
        edit: ("a holds until b holds", "(a U b)"),
        intended: "(a U b) | G a",
    },
    Workflow {
        name: "next two steps",
        nl: "Whenever a holds, b must hold in the next two steps.",
        initial: "G((a -> X(X(b))))",
        edit: ("b must hold in the next two steps", "b | X b"),
        intended: "G (a -> (b | X b))",
    },
    Workflow {
        name: "as well",
        nl: "whenever a holds, b holds as well",
        initial: "G(a & b)",
        edit: ("b holds as well", "-> b"),
        intended: "G(a -> b)",
    },
];

pub struct Outcome {
    pub loops: usize,
    /// Displayed final formula after each translate.
    pub finals: Vec<String>,
    pub state: SessionState,
}

pub fn equivalent_to_intent(final_text: &str, intended: &str) -> bool {
    let (f, g) = (parse(final_text).unwrap(), parse(intended).unwrap());
    equivalent(&f, &g, Bound::default()).unwrap().is_equivalent()
}

/// Same formula up to parentheses and spacing.
pub fn written_as_intended(final_text: &str, intended: &str) -> bool {
    let canonical = |t: &str| print(&parse(t).unwrap(), PrintMode::Minimal);
    canonical(final_text) == canonical(intended)
}

/// Translates, applies the correction while the shown formula is not the
/// one the expert wrote, and approves once it is. Gives up after
/// `max_loops` translates.
pub fn run(w: &Workflow, bench: &Workbench, max_loops: usize) -> Outcome {
    let mut state = SessionState::new(w.nl, Settings::default()).unwrap();
    let mut finals = Vec::new();
    for loop_no in 1..=max_loops {
        state.translate(bench).unwrap();
        let shown = state.final_.as_ref().unwrap().formula_text.clone();
        finals.push(shown.clone());
        if written_as_intended(&shown, w.intended) {
            state.approve().unwrap();
            return Outcome { loops: loop_no, finals, state };
        }
        let (fragment, formula) = w.edit;
        if state.find(fragment).is_some() {
            state.edit(fragment, formula).unwrap();
        } else {
            state.add(fragment, formula).unwrap();
        }
    }
    Outcome { loops: max_loops + 1, finals, state }
}
