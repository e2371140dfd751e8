//! Brute-force LTL semantics used as an independent reference.
//!
//! The lasso is unrolled into a finite word of length
//! `p + q * (size(f) + 1)` and every operator is evaluated directly from its
//! textbook definition by scanning a window of the word. From position `i`
//! every distinct future position is reached within `max(i, p) + q`, so each
//! temporal operator looks at most that far; nesting depth is bounded by the
//! formula size, which bounds the unrolling.

#![allow(dead_code)]

use specloop_core::ltl::{Formula, LassoTrace};

pub struct Unrolled {
    word: Vec<Vec<String>>,
    p: usize,
    q: usize,
}

impl Unrolled {
    pub fn new(trace: &LassoTrace, formula_size: usize) -> Unrolled {
        let p = trace.prefix().len();
        let q = trace.cycle().len();
        let len = p + q * (formula_size + 1);
        let word = (0..len)
            .map(|k| {
                let letter = trace.at(k);
                trace
                    .alphabet()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| letter.contains(*i))
                    .map(|(_, n)| n.clone())
                    .collect()
            })
            .collect();
        Unrolled { word, p, q }
    }

    fn window(&self, i: usize) -> std::ops::Range<usize> {
        i..i.max(self.p) + self.q
    }

    pub fn holds(&self, f: &Formula, i: usize) -> bool {
        use Formula::*;
        assert!(i < self.word.len(), "unrolling too short at {i}");
        match f {
            True => true,
            False => false,
            Atom(name) => self.word[i].iter().any(|n| n == name),
            Not(g) => !self.holds(g, i),
            And(g, h) => self.holds(g, i) && self.holds(h, i),
            Or(g, h) => self.holds(g, i) || self.holds(h, i),
            Implies(g, h) => !self.holds(g, i) || self.holds(h, i),
            Iff(g, h) => self.holds(g, i) == self.holds(h, i),
            Next(g) => self.holds(g, i + 1),
            Until(g, h) => self.until(g, h, i),
            Finally(g) => self.window(i).any(|k| self.holds(g, k)),
            Globally(g) => self.window(i).all(|k| self.holds(g, k)),
            WeakUntil(g, h) => self.until(g, h, i) || self.window(i).all(|k| self.holds(g, k)),
            // h must hold at every position up to and including the first g.
            Release(g, h) => {
                for k in self.window(i) {
                    if !self.holds(h, k) {
                        return false;
                    }
                    if self.holds(g, k) {
                        return true;
                    }
                }
                true
            }
        }
    }

    fn until(&self, g: &Formula, h: &Formula, i: usize) -> bool {
        for k in self.window(i) {
            if self.holds(h, k) {
                return true;
            }
            if !self.holds(g, k) {
                return false;
            }
        }
        false
    }
}

pub fn brute_force(f: &Formula, trace: &LassoTrace) -> bool {
    Unrolled::new(trace, f.size()).holds(f, 0)
}

/// Direct recursive evaluation for formulas without `U W R F G`, reading
/// only the first `next_depth + 1` positions.
pub fn until_free(f: &Formula, trace: &LassoTrace) -> bool {
    fn go(f: &Formula, word: &[Vec<bool>], names: &[String], i: usize) -> bool {
        use Formula::*;
        match f {
            True => true,
            False => false,
            Atom(n) => word[i][names.iter().position(|m| m == n).unwrap()],
            Not(g) => !go(g, word, names, i),
            And(g, h) => go(g, word, names, i) && go(h, word, names, i),
            Or(g, h) => go(g, word, names, i) || go(h, word, names, i),
            Implies(g, h) => !go(g, word, names, i) || go(h, word, names, i),
            Iff(g, h) => go(g, word, names, i) == go(h, word, names, i),
            Next(g) => go(g, word, names, i + 1),
            _ => panic!("not until-free"),
        }
    }
    let depth = f.next_depth();
    let word: Vec<Vec<bool>> =
        (0..=depth).map(|k| (0..trace.alphabet().len()).map(|a| trace.at(k).contains(a)).collect()).collect();
    go(f, &word, trace.alphabet(), 0)
}

/// Plain enumeration of every lasso over `alphabet` within the bound;
/// returns whether some trace separates the two formulas.
pub fn naive_distinguishable(f: &Formula, g: &Formula, max_prefix: usize, max_loop: usize) -> bool {
    use specloop_core::ltl::Letter;
    let alphabet: Vec<String> = f.atoms().union(&g.atoms()).cloned().collect();
    let letters = 1u64 << alphabet.len();
    let words = |len: usize| -> Vec<Vec<Letter>> {
        let mut out = vec![vec![]];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|w| (0..letters).map(move |l| [w.clone(), vec![Letter(l)]].concat()))
                .collect();
        }
        out
    };
    for p in 0..=max_prefix {
        for q in 1..=max_loop {
            for prefix in words(p) {
                for cycle in words(q) {
                    let t = LassoTrace::from_letters(alphabet.clone(), prefix.clone(), cycle).unwrap();
                    if brute_force(f, &t) != brute_force(g, &t) {
                        return true;
                    }
                }
            }
        }
    }
    false
}
