//! Recursive-descent parser for the concrete LTL syntax.
//!
//! Precedence, tightest first:
//!
//! | level | operators          | associativity |
//! |-------|--------------------|---------------|
//! | 1     | `! X F G` (prefix) |               |
//! | 2     | `U W R`            | right         |
//! | 3     | `&` `&&`           | left          |
//! | 4     | `\|` `\|\|`        | left          |
//! | 5     | `->`               | right         |
//! | 6     | `<->`              | left          |

use std::fmt;

use thiserror::Error;

use super::{is_atom_name, Formula};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Implies,
    Iff,
    Next,
    Finally,
    Globally,
    Until,
    WeakUntil,
    Release,
    LParen,
    RParen,
}

impl Token {
    fn is_binary(&self) -> bool {
        matches!(
            self,
            Token::And | Token::Or | Token::Implies | Token::Iff | Token::Until | Token::WeakUntil | Token::Release
        )
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Token::Ident(name) => return write!(f, "atom `{name}`"),
            Token::True => "`true`",
            Token::False => "`false`",
            Token::Not => "`!`",
            Token::And => "`&`",
            Token::Or => "`|`",
            Token::Implies => "`->`",
            Token::Iff => "`<->`",
            Token::Next => "`X`",
            Token::Finally => "`F`",
            Token::Globally => "`G`",
            Token::Until => "`U`",
            Token::WeakUntil => "`W`",
            Token::Release => "`R`",
            Token::LParen => "`(`",
            Token::RParen => "`)`",
        };
        f.write_str(s)
    }
}

/// A syntax error. `position` is a byte offset into the input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at offset {position}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub position: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl ParseError {
    fn new(position: usize, expected: &[&str], found: impl Into<String>) -> ParseError {
        ParseError { position, expected: expected.iter().map(|s| s.to_string()).collect(), found: found.into() }
    }
}

const OPERAND: &[&str] = &["atom", "`true`", "`false`", "`(`", "`!`", "`X`", "`F`", "`G`"];
const END: &str = "end of input";

fn tokenize(input: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let rest = &input[i..];
        let (tok, len) = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'(' => (Token::LParen, 1),
            b')' => (Token::RParen, 1),
            b'!' => (Token::Not, 1),
            b'&' if rest.starts_with("&&") => (Token::And, 2),
            b'&' => (Token::And, 1),
            b'|' if rest.starts_with("||") => (Token::Or, 2),
            b'|' => (Token::Or, 1),
            b'-' if rest.starts_with("->") => (Token::Implies, 2),
            b'<' if rest.starts_with("<->") => (Token::Iff, 3),
            b'1' => (Token::True, 1),
            b'0' => (Token::False, 1),
            b'X' => (Token::Next, 1),
            b'F' => (Token::Finally, 1),
            b'G' => (Token::Globally, 1),
            b'U' => (Token::Until, 1),
            b'W' => (Token::WeakUntil, 1),
            b'R' => (Token::Release, 1),
            c if c.is_ascii_lowercase() || c == b'_' => {
                let len =
                    rest.bytes().take_while(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || *b == b'_').count();
                let word = &rest[..len];
                let tok = match word {
                    "true" => Token::True,
                    "false" => Token::False,
                    _ => {
                        debug_assert!(is_atom_name(word));
                        Token::Ident(word.to_string())
                    }
                };
                (tok, len)
            }
            _ => {
                let ch = rest.chars().next().unwrap_or('?');
                return Err(ParseError::new(start, &["a token"], format!("unexpected character `{ch}`")));
            }
        };
        out.push((tok, start));
        i += len;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn found(&self) -> String {
        self.peek().map(|t| t.to_string()).unwrap_or_else(|| END.to_string())
    }

    fn bump(&mut self) {
        self.pos += 1;
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.implies()?;
        while self.peek() == Some(&Token::Iff) {
            self.bump();
            let rhs = self.implies()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.peek() == Some(&Token::Implies) {
            self.bump();
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Token::Or) {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.temporal()?;
        while self.peek() == Some(&Token::And) {
            self.bump();
            let rhs = self.temporal()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn temporal(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        let ctor: fn(Formula, Formula) -> Formula = match self.peek() {
            Some(Token::Until) => Formula::until,
            Some(Token::WeakUntil) => Formula::weak_until,
            Some(Token::Release) => Formula::release,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.temporal()?;
        Ok(ctor(lhs, rhs))
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let ctor: fn(Formula) -> Formula = match self.peek() {
            Some(Token::Not) => Formula::not,
            Some(Token::Next) => Formula::next,
            Some(Token::Finally) => Formula::finally,
            Some(Token::Globally) => Formula::globally,
            _ => return self.primary(),
        };
        self.bump();
        Ok(ctor(self.unary()?))
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        let f = match self.peek() {
            Some(Token::Ident(name)) => Formula::Atom(name.clone()),
            Some(Token::True) => Formula::True,
            Some(Token::False) => Formula::False,
            Some(Token::LParen) => {
                self.bump();
                let inner = self.iff()?;
                if self.peek() != Some(&Token::RParen) {
                    return Err(ParseError::new(
                        self.offset(),
                        &["`)`", "`&`", "`|`", "`->`", "`<->`", "`U`", "`W`", "`R`"],
                        self.found(),
                    ));
                }
                self.bump();
                return Ok(inner);
            }
            _ => return Err(ParseError::new(self.offset(), OPERAND, self.found())),
        };
        self.bump();
        Ok(f)
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.pos < self.tokens.len() {
            return Err(ParseError::new(
                self.offset(),
                &[END, "`&`", "`|`", "`->`", "`<->`", "`U`", "`W`", "`R`"],
                self.found(),
            ));
        }
        Ok(())
    }
}

/// Parses a formula in concrete syntax.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(ParseError::new(text.len(), OPERAND, END));
    }
    let mut parser = Parser { tokens, pos: 0, end: text.len() };
    let f = parser.iff()?;
    parser.finish()?;
    Ok(f)
}

/// Accepts either a whole formula or a formula with a single leading
/// binary-operator hole, such as `-> b` or `& X c`.
pub fn validate_fragment(text: &str) -> Result<(), ParseError> {
    let whole = match parse(text) {
        Ok(_) => return Ok(()),
        Err(e) => e,
    };
    let tokens = tokenize(text)?;
    match tokens.first() {
        Some((tok, _)) if tok.is_binary() => {
            let mut parser = Parser { tokens, pos: 1, end: text.len() };
            parser.iff()?;
            parser.finish()
        }
        _ => Err(whole),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: &str) -> Formula {
        Formula::atom(n)
    }

    #[test]
    fn grant_example() {
        let f = parse("G((!((g0 & g1)) U a))").unwrap();
        let want = Formula::globally(Formula::until(Formula::not(Formula::and(a("g0"), a("g1"))), a("a")));
        assert_eq!(f, want);
    }

    #[test]
    fn double_char_operators_and_next() {
        let f = parse("b -> X ((c U a) || G c)").unwrap();
        let want = Formula::implies(
            a("b"),
            Formula::next(Formula::or(Formula::until(a("c"), a("a")), Formula::globally(a("c")))),
        );
        assert_eq!(f, want);
    }

    #[test]
    fn single_atom() {
        assert_eq!(parse("a").unwrap(), a("a"));
    }

    #[test]
    fn until_binds_tighter_than_or() {
        // a U b | G a : `U` (level 2) groups before `|` (level 4).
        let f = parse("a U b | G a").unwrap();
        assert_eq!(f, Formula::or(Formula::until(a("a"), a("b")), Formula::globally(a("a"))));
    }

    #[test]
    fn associativity() {
        assert_eq!(parse("a -> b -> c").unwrap(), Formula::implies(a("a"), Formula::implies(a("b"), a("c"))));
        assert_eq!(parse("a U b U c").unwrap(), Formula::until(a("a"), Formula::until(a("b"), a("c"))));
        assert_eq!(parse("a & b & c").unwrap(), Formula::and(Formula::and(a("a"), a("b")), a("c")));
        assert_eq!(parse("a <-> b <-> c").unwrap(), Formula::iff(Formula::iff(a("a"), a("b")), a("c")));
        assert_eq!(
            parse("a | b & c -> d <-> e").unwrap(),
            Formula::iff(Formula::implies(Formula::or(a("a"), Formula::and(a("b"), a("c"))), a("d")), a("e"))
        );
    }

    #[test]
    fn unary_binds_tightest() {
        assert_eq!(parse("! a U b").unwrap(), Formula::until(Formula::not(a("a")), a("b")));
        assert_eq!(parse("G a -> F b").unwrap(), Formula::implies(Formula::globally(a("a")), Formula::finally(a("b"))));
        assert_eq!(parse("GFa").unwrap(), Formula::globally(Formula::finally(a("a"))));
    }

    #[test]
    fn constants() {
        assert_eq!(parse("true U 1").unwrap(), Formula::until(Formula::True, Formula::True));
        assert_eq!(parse("false | 0").unwrap(), Formula::or(Formula::False, Formula::False));
    }

    #[test]
    fn errors_carry_position_and_expectations() {
        let err = parse("").unwrap_err();
        assert_eq!(err.position, 0);
        assert_eq!(err.found, "end of input");

        let err = parse("a & ").unwrap_err();
        assert_eq!(err.position, 4);
        assert!(err.expected.contains(&"atom".to_string()));

        let err = parse("(a | b").unwrap_err();
        assert_eq!(err.position, 6);
        assert!(err.expected.contains(&"`)`".to_string()));

        let err = parse("a b").unwrap_err();
        assert_eq!(err.position, 2);
        assert_eq!(err.found, "atom `b`");

        let err = parse("a $ b").unwrap_err();
        assert_eq!(err.position, 2);

        let err = parse("A").unwrap_err();
        assert_eq!(err.position, 0);
        assert!(err.to_string().contains("offset 0"));
    }

    #[test]
    fn fragments() {
        assert!(validate_fragment("-> b").is_ok());
        assert!(validate_fragment("t_p0").is_ok());
        assert!(validate_fragment("b | X b").is_ok());
        assert!(validate_fragment("& (c U d)").is_ok());
        assert!(validate_fragment("U b").is_ok());
        assert!(validate_fragment("-> -> b").is_err());
        assert!(validate_fragment("b ->").is_err());
        assert!(validate_fragment("").is_err());
        assert!(validate_fragment("G").is_err());
    }
}
