//! The `{"fragment": "formula", ...}` dictionaries used for given
//! translations and explanation dictionaries.
//!
//! Rendering always produces double-quoted JSON-style strings. Reading is
//! lenient: single or double quotes, unquoted keys and values, trailing
//! commas and missing braces are all accepted. A malformed entry is skipped
//! up to the next top-level comma without disturbing its neighbours.

use std::fmt::Write;

/// Renders entries in insertion order; `{}` when empty.
pub fn render<'a>(entries: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    let mut out = String::from("{");
    for (i, (k, v)) in entries.into_iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write!(out, "{}: {}", quote(k), quote(v)).unwrap();
    }
    out.push('}');
    out
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skipped {
    pub text: String,
    pub reason: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Lenient {
    pub entries: Vec<(String, String)>,
    pub skipped: Vec<Skipped>,
}

/// Reads a dictionary leniently. Keys and values are trimmed of
/// surrounding whitespace.
pub fn parse(text: &str) -> Lenient {
    let mut body = text.trim();
    if let Some(rest) = body.strip_prefix('{') {
        body = rest;
    }
    if let Some(end) = body.rfind('}') {
        body = &body[..end];
    }
    let chars: Vec<char> = body.chars().collect();
    let mut reader = Reader { chars: &chars, pos: 0 };
    let mut out = Lenient::default();
    loop {
        reader.skip(|c| c.is_whitespace() || c == ',');
        if reader.at_end() {
            break;
        }
        let start = reader.pos;
        match reader.entry() {
            Ok((k, v)) if !k.is_empty() && !v.is_empty() => out.entries.push((k, v)),
            Ok(_) => out.skipped.push(Skipped { text: reader.since(start), reason: "empty key or value" }),
            Err(reason) => {
                reader.skip_entry();
                out.skipped.push(Skipped { text: reader.since(start), reason });
            }
        }
    }
    out
}

struct Reader<'a> {
    chars: &'a [char],
    pos: usize,
}

impl Reader<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip(&mut self, pred: impl Fn(char) -> bool) {
        while self.peek().is_some_and(&pred) {
            self.pos += 1;
        }
    }

    fn since(&self, start: usize) -> String {
        self.chars[start..self.pos.min(self.chars.len())].iter().collect::<String>().trim().to_string()
    }

    fn entry(&mut self) -> Result<(String, String), &'static str> {
        let key = self.token(':')?;
        self.skip(char::is_whitespace);
        if self.peek() != Some(':') {
            return Err("missing `:` after key");
        }
        self.pos += 1;
        self.skip(char::is_whitespace);
        let value = self.token(',')?;
        self.skip(char::is_whitespace);
        match self.peek() {
            None | Some(',') => Ok((key, value)),
            _ => Err("unexpected text after value"),
        }
    }

    /// A quoted string, or raw text up to `stop`.
    fn token(&mut self, stop: char) -> Result<String, &'static str> {
        self.skip(char::is_whitespace);
        match self.peek() {
            Some(q @ ('"' | '\'')) => {
                self.pos += 1;
                let mut out = String::new();
                loop {
                    match self.peek() {
                        None => return Err("unterminated string"),
                        Some('\\') => {
                            self.pos += 1;
                            let escaped = self.peek().ok_or("unterminated string")?;
                            out.push(match escaped {
                                'n' => '\n',
                                't' => '\t',
                                other => other,
                            });
                        }
                        Some(c) if c == q => {
                            self.pos += 1;
                            break;
                        }
                        Some(c) => out.push(c),
                    }
                    self.pos += 1;
                }
                Ok(out.trim().to_string())
            }
            _ => {
                let start = self.pos;
                self.skip(|c| c != stop && c != ',' && c != ':');
                Ok(self.since(start))
            }
        }
    }

    fn skip_entry(&mut self) {
        let mut quote: Option<char> = None;
        while let Some(c) = self.peek() {
            match (quote, c) {
                (None, ',') => break,
                (None, '"' | '\'') => quote = Some(c),
                (Some(q), c) if c == q => quote = None,
                _ => {}
            }
            self.pos += 1;
        }
    }
}
