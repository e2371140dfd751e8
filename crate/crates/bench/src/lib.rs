//! Shared inputs for the criterion benchmarks.

use rand::rngs::StdRng;
use rand::SeedableRng;
use specloop_core::ltl::{random, Formula, LassoTrace};

pub const ATOMS: [&str; 3] = ["a", "b", "c"];

pub const CORPUS: &[&str] = &[
    "G((!((g0 & g1)) U a))",
    "a U (b | G a)",
    "(a U b) | G a",
    "G(a -> X(X(b)))",
    "G(a -> (b | X b))",
    "G(a -> F(b)) -> G(F(c))",
    "(b U (b & !a)) | G b",
    "G(!(a & b))",
    "a R b <-> !(!a U !b)",
    "G(t_p0 -> X(s_p1))",
];

pub const PRECEDENCE_COMPLETION: &str = "\"a holds until b holds\" is a U b.\nExplanation dictionary: {\"a holds until b holds\": \"a U b\", \"always a holds\": \"G(a)\", \"b holds or always a holds\": \"b | G(a)\"}\nSo, the final LTL translation is: (a U (b | G(a))).";
pub const ALTERNATIVE_COMPLETION: &str = "\"a holds until b holds\" is a U b.\nExplanation dictionary: {\"a holds until b holds\": \"a U b\", \"always a holds\": \"G(a)\"}\nSo, the final LTL translation is: ((a U b) | G(a)).";

pub fn formulas(seed: u64, count: usize, max_nodes: usize) -> Vec<Formula> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count).map(|_| random::formula(&mut rng, &ATOMS, max_nodes)).collect()
}

pub fn lassos(seed: u64, count: usize, max_prefix: usize, max_loop: usize) -> Vec<LassoTrace> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count).map(|_| random::lasso(&mut rng, &ATOMS, max_prefix, max_loop)).collect()
}

/// `n` completions, two thirds agreeing on the final formula.
pub fn completions(n: usize) -> Vec<String> {
    (0..n).map(|i| if i % 3 == 2 { ALTERNATIVE_COMPLETION } else { PRECEDENCE_COMPLETION }.to_string()).collect()
}
