//! Lasso-trace semantics.
//!
//! A formula is rewritten into the core operators (`! & | -> <-> X U` plus
//! constants), shared subformulas are merged, and every node is evaluated
//! over the `prefix + loop` distinct positions of the trace. `U` on the loop
//! is the least fixpoint of its one-step expansion.

use std::collections::HashMap;

use thiserror::Error;

use super::{Formula, LassoTrace, Letter};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("formula mentions `{0}`, which is not in the trace alphabet")]
    UnknownAtom(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Node {
    Const(bool),
    Atom(usize),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Implies(usize, usize),
    Iff(usize, usize),
    Next(usize),
    Until(usize, usize),
}

/// Hash-consed core-operator DAG. Children always precede parents.
#[derive(Debug, Default)]
pub(crate) struct Program {
    pub(crate) nodes: Vec<Node>,
    index: HashMap<Node, usize>,
}

impl Program {
    fn intern(&mut self, node: Node) -> usize {
        if let Some(&i) = self.index.get(&node) {
            return i;
        }
        self.nodes.push(node);
        self.index.insert(node, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    /// Adds `f` to the program; `atom_index` resolves proposition names.
    pub(crate) fn compile(
        &mut self,
        f: &Formula,
        atom_index: &dyn Fn(&str) -> Option<usize>,
    ) -> Result<usize, EvalError> {
        use Formula::*;
        let mut go = |g: &Formula| self.compile(g, atom_index);
        let node = match f {
            True => Node::Const(true),
            False => Node::Const(false),
            Atom(name) => Node::Atom(atom_index(name).ok_or_else(|| EvalError::UnknownAtom(name.clone()))?),
            Not(g) => Node::Not(go(g)?),
            And(g, h) => Node::And(go(g)?, go(h)?),
            Or(g, h) => Node::Or(go(g)?, go(h)?),
            Implies(g, h) => Node::Implies(go(g)?, go(h)?),
            Iff(g, h) => Node::Iff(go(g)?, go(h)?),
            Next(g) => Node::Next(go(g)?),
            Until(g, h) => Node::Until(go(g)?, go(h)?),
            // F g == true U g
            Finally(g) => {
                let g = go(g)?;
                let t = self.intern(Node::Const(true));
                Node::Until(t, g)
            }
            // G g == !F !g
            Globally(g) => {
                let g = go(g)?;
                return Ok(self.globally(g));
            }
            // g W h == (g U h) | G g
            WeakUntil(g, h) => {
                let (g, h) = (go(g)?, go(h)?);
                let until = self.intern(Node::Until(g, h));
                let always = self.globally(g);
                Node::Or(until, always)
            }
            // g R h == !(!g U !h)
            Release(g, h) => {
                let (g, h) = (go(g)?, go(h)?);
                let ng = self.intern(Node::Not(g));
                let nh = self.intern(Node::Not(h));
                let until = self.intern(Node::Until(ng, nh));
                Node::Not(until)
            }
        };
        Ok(self.intern(node))
    }

    fn globally(&mut self, g: usize) -> usize {
        let t = self.intern(Node::Const(true));
        let ng = self.intern(Node::Not(g));
        let eventually = self.intern(Node::Until(t, ng));
        self.intern(Node::Not(eventually))
    }

    /// Value of every node at one position, given the letter there and the
    /// values at the successor position. Only valid on prefix positions,
    /// where `next` is already exact.
    pub(crate) fn step(&self, letter: Letter, next: &[bool], out: &mut Vec<bool>) {
        out.clear();
        for node in &self.nodes {
            let v = match *node {
                Node::Const(b) => b,
                Node::Atom(i) => letter.contains(i),
                Node::Not(a) => !out[a],
                Node::And(a, b) => out[a] && out[b],
                Node::Or(a, b) => out[a] || out[b],
                Node::Implies(a, b) => !out[a] || out[b],
                Node::Iff(a, b) => out[a] == out[b],
                Node::Next(a) => next[a],
                Node::Until(a, b) => out[b] || (out[a] && next[out.len()]),
            };
            out.push(v);
        }
    }

    /// Values of every node at every distinct position of `trace`, indexed
    /// `[position][node]`.
    pub(crate) fn run(&self, trace: &LassoTrace) -> Vec<Vec<bool>> {
        let n = trace.len();
        let p = trace.prefix().len();
        let width = self.nodes.len();
        let mut val = vec![vec![false; width]; n];
        for (k, node) in self.nodes.iter().enumerate() {
            let pointwise = |val: &Vec<Vec<bool>>, pos: usize| -> bool {
                let row = &val[pos];
                match *node {
                    Node::Const(b) => b,
                    Node::Atom(i) => trace.letter(pos).contains(i),
                    Node::Not(a) => !row[a],
                    Node::And(a, b) => row[a] && row[b],
                    Node::Or(a, b) => row[a] || row[b],
                    Node::Implies(a, b) => !row[a] || row[b],
                    Node::Iff(a, b) => row[a] == row[b],
                    Node::Next(a) => val[trace.successor(pos)][a],
                    Node::Until(..) => unreachable!(),
                }
            };
            match *node {
                Node::Until(a, b) => {
                    // Least fixpoint on the loop: start from false and apply
                    // the expansion until nothing changes.
                    loop {
                        let mut changed = false;
                        for pos in (p..n).rev() {
                            let v = val[pos][b] || (val[pos][a] && val[trace.successor(pos)][k]);
                            if v != val[pos][k] {
                                val[pos][k] = v;
                                changed = true;
                            }
                        }
                        if !changed {
                            break;
                        }
                    }
                    for pos in (0..p).rev() {
                        val[pos][k] = val[pos][b] || (val[pos][a] && val[pos + 1][k]);
                    }
                }
                _ => {
                    for pos in 0..n {
                        val[pos][k] = pointwise(&val, pos);
                    }
                }
            }
        }
        val
    }
}

/// Decides whether the infinite unrolling of `trace` satisfies `f` at
/// position 0.
pub fn evaluate(f: &Formula, trace: &LassoTrace) -> Result<bool, EvalError> {
    let mut program = Program::default();
    let root = program.compile(f, &|name| trace.index_of(name))?;
    Ok(program.run(trace)[0][root])
}
