//! Bounded semantic equivalence.
//!
//! Every lasso trace over the union alphabet with prefix length at most
//! `max_prefix` and loop length in `1..=max_loop` is covered. Rather than
//! evaluating each trace from scratch, the search evaluates every loop once,
//! then extends prefixes backwards one letter at a time: the truth values of
//! all subformulas at a prefix position depend only on the letter there and
//! on the values at the following position, so traces that reach an
//! already-seen value vector need not be extended again. The verdict is the
//! same as plain enumeration; only the witness order differs (shorter
//! prefixes first).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::eval::Program;
use super::{evaluate, Formula, LassoTrace, Letter};

pub const DEFAULT_ATOM_CAP: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Bound {
    pub max_prefix: usize,
    pub max_loop: usize,
}

impl Default for Bound {
    fn default() -> Self {
        Bound { max_prefix: 3, max_loop: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquivStatus {
    EquivalentUpToBound,
    Distinguished,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivVerdict {
    pub status: EquivStatus,
    /// Present iff `status` is `Distinguished`; satisfies exactly one side.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<LassoTrace>,
}

impl EquivVerdict {
    pub fn is_equivalent(&self) -> bool {
        self.status == EquivStatus::EquivalentUpToBound
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error("loop bound must be at least 1")]
    EmptyLoopBound,
    #[error("{size} propositions exceed the enumeration cap of {cap}")]
    AlphabetTooLarge { size: usize, cap: usize },
}

/// Bounded equivalence with the default alphabet cap.
pub fn equivalent(f: &Formula, g: &Formula, bound: Bound) -> Result<EquivVerdict, EquivError> {
    equivalent_with_cap(f, g, bound, DEFAULT_ATOM_CAP)
}

pub fn equivalent_with_cap(f: &Formula, g: &Formula, bound: Bound, cap: usize) -> Result<EquivVerdict, EquivError> {
    if bound.max_loop == 0 {
        return Err(EquivError::EmptyLoopBound);
    }
    let alphabet: Vec<String> = f.atoms().union(&g.atoms()).cloned().collect();
    if alphabet.len() > cap {
        return Err(EquivError::AlphabetTooLarge { size: alphabet.len(), cap });
    }

    let mut program = Program::default();
    let lookup = |name: &str| alphabet.iter().position(|a| a == name);
    let rf = program.compile(f, &lookup).expect("alphabet covers both formulas");
    let rg = program.compile(g, &lookup).expect("alphabet covers both formulas");

    let letters: Vec<Letter> = (0..1u64 << alphabet.len()).map(Letter).collect();
    let make = |prefix: Vec<Letter>, cycle: Vec<Letter>| {
        LassoTrace::from_letters(alphabet.clone(), prefix, cycle).expect("letters drawn from alphabet")
    };
    let found = |trace: LassoTrace| {
        debug_assert_ne!(evaluate(f, &trace), evaluate(g, &trace));
        Ok(EquivVerdict { status: EquivStatus::Distinguished, witness: Some(trace) })
    };

    // Loops only. `frontier` keeps one representative trace per distinct
    // value vector at position 0.
    let mut seen: HashSet<Vec<bool>> = HashSet::new();
    let mut frontier: Vec<(Vec<bool>, Vec<Letter>, Vec<Letter>)> = Vec::new();
    for q in 1..=bound.max_loop {
        let mut word = vec![0usize; q];
        loop {
            let cycle: Vec<Letter> = word.iter().map(|&i| letters[i]).collect();
            let trace = make(Vec::new(), cycle);
            let start = program.run(&trace).swap_remove(0);
            if start[rf] != start[rg] {
                return found(trace);
            }
            if seen.insert(start.clone()) {
                frontier.push((start, Vec::new(), trace.cycle().to_vec()));
            }
            if !advance(&mut word, letters.len()) {
                break;
            }
        }
    }

    let mut scratch = Vec::with_capacity(program.nodes.len());
    for _ in 0..bound.max_prefix {
        let mut next_frontier = Vec::new();
        for (state, prefix, cycle) in &frontier {
            for &letter in &letters {
                program.step(letter, state, &mut scratch);
                if scratch[rf] != scratch[rg] || !seen.contains(&scratch) {
                    let mut longer = Vec::with_capacity(prefix.len() + 1);
                    longer.push(letter);
                    longer.extend_from_slice(prefix);
                    if scratch[rf] != scratch[rg] {
                        return found(make(longer, cycle.clone()));
                    }
                    seen.insert(scratch.clone());
                    next_frontier.push((scratch.clone(), longer, cycle.clone()));
                }
            }
        }
        frontier = next_frontier;
    }

    Ok(EquivVerdict { status: EquivStatus::EquivalentUpToBound, witness: None })
}

// Little-endian odometer over `base` symbols; false once it wraps around.
fn advance(word: &mut [usize], base: usize) -> bool {
    for digit in word.iter_mut() {
        *digit += 1;
        if *digit < base {
            return true;
        }
        *digit = 0;
    }
    false
}
