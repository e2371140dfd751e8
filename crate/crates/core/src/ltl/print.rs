use serde::{Deserialize, Serialize};

use super::Formula;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PrintMode {
    /// Parentheses only where precedence or associativity demands them.
    #[default]
    Minimal,
    /// Every compound subformula is parenthesized.
    Full,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Assoc {
    Left,
    Right,
}

// Binding strength: larger binds tighter. Mirrors the parser's table.
const IFF: u8 = 1;
const IMPLIES: u8 = 2;
const OR: u8 = 3;
const AND: u8 = 4;
const TEMPORAL: u8 = 5;
const UNARY: u8 = 6;
const LEAF: u8 = 7;

fn level(f: &Formula) -> u8 {
    use Formula::*;
    match f {
        Atom(_) | True | False => LEAF,
        Not(_) | Next(_) | Finally(_) | Globally(_) => UNARY,
        Until(..) | WeakUntil(..) | Release(..) => TEMPORAL,
        And(..) => AND,
        Or(..) => OR,
        Implies(..) => IMPLIES,
        Iff(..) => IFF,
    }
}

fn binary(f: &Formula) -> Option<(&Formula, &'static str, &Formula, Assoc)> {
    use Formula::*;
    Some(match f {
        And(l, r) => (&**l, "&", &**r, Assoc::Left),
        Or(l, r) => (&**l, "|", &**r, Assoc::Left),
        Iff(l, r) => (&**l, "<->", &**r, Assoc::Left),
        Implies(l, r) => (&**l, "->", &**r, Assoc::Right),
        Until(l, r) => (&**l, "U", &**r, Assoc::Right),
        WeakUntil(l, r) => (&**l, "W", &**r, Assoc::Right),
        Release(l, r) => (&**l, "R", &**r, Assoc::Right),
        _ => return None,
    })
}

/// Prints a formula in concrete syntax using the canonical single-character
/// operators.
pub fn print(f: &Formula, mode: PrintMode) -> String {
    let mut out = String::new();
    match mode {
        PrintMode::Minimal => write_minimal(f, &mut out),
        PrintMode::Full => write_full(f, &mut out),
    }
    out
}

fn write_leaf_or_unary(f: &Formula, out: &mut String, recurse: fn(&Formula, &mut String)) -> bool {
    use Formula::*;
    match f {
        Atom(name) => out.push_str(name),
        True => out.push_str("true"),
        False => out.push_str("false"),
        Not(g) => {
            out.push('!');
            recurse(g, out);
        }
        Next(g) | Finally(g) | Globally(g) => {
            out.push_str(match f {
                Next(_) => "X ",
                Finally(_) => "F ",
                _ => "G ",
            });
            recurse(g, out);
        }
        _ => return false,
    }
    true
}

fn write_minimal(f: &Formula, out: &mut String) {
    fn operand(f: &Formula, out: &mut String) {
        if level(f) < UNARY {
            out.push('(');
            write_minimal(f, out);
            out.push(')');
        } else {
            write_minimal(f, out);
        }
    }

    if write_leaf_or_unary(f, out, operand) {
        return;
    }
    let (lhs, op, rhs, assoc) = binary(f).expect("non-unary node is binary");
    let own = level(f);
    let wrap_lhs = level(lhs) < own || (level(lhs) == own && assoc == Assoc::Right);
    let wrap_rhs = level(rhs) < own || (level(rhs) == own && assoc == Assoc::Left);
    write_wrapped(lhs, wrap_lhs, out);
    out.push(' ');
    out.push_str(op);
    out.push(' ');
    write_wrapped(rhs, wrap_rhs, out);
}

fn write_wrapped(f: &Formula, wrap: bool, out: &mut String) {
    if wrap {
        out.push('(');
    }
    write_minimal(f, out);
    if wrap {
        out.push(')');
    }
}

fn write_full(f: &Formula, out: &mut String) {
    if matches!(f, Formula::Atom(_) | Formula::True | Formula::False) {
        write_leaf_or_unary(f, out, write_full);
        return;
    }
    out.push('(');
    if !write_leaf_or_unary(f, out, write_full) {
        let (lhs, op, rhs, _) = binary(f).expect("non-unary node is binary");
        write_full(lhs, out);
        out.push(' ');
        out.push_str(op);
        out.push(' ');
        write_full(rhs, out);
    }
    out.push(')');
}
