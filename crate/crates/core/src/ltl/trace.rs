use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::is_atom_name;

/// The set of propositions holding at one position, as a bitmask over the
/// trace's alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Letter(pub u64);

impl Letter {
    pub const EMPTY: Letter = Letter(0);

    pub fn contains(self, index: usize) -> bool {
        self.0 >> index & 1 == 1
    }

    pub fn with(self, index: usize) -> Letter {
        Letter(self.0 | 1 << index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("a lasso trace needs a nonempty loop")]
    EmptyLoop,
    #[error("proposition `{0}` is not in the alphabet")]
    UnknownProposition(String),
    #[error("invalid or duplicate alphabet entry `{0}`")]
    BadAlphabet(String),
    #[error("alphabet of {0} propositions exceeds the 64 supported")]
    AlphabetTooLarge(usize),
}

/// An ultimately periodic trace `prefix · loop^ω` over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LassoTrace {
    alphabet: Vec<String>,
    prefix: Vec<Letter>,
    cycle: Vec<Letter>,
}

impl LassoTrace {
    /// Builds a trace from letters given as bitmasks over `alphabet`.
    pub fn from_letters(alphabet: Vec<String>, prefix: Vec<Letter>, cycle: Vec<Letter>) -> Result<Self, TraceError> {
        if alphabet.len() > 64 {
            return Err(TraceError::AlphabetTooLarge(alphabet.len()));
        }
        let mut seen = BTreeSet::new();
        for name in &alphabet {
            if !is_atom_name(name) || !seen.insert(name.as_str()) {
                return Err(TraceError::BadAlphabet(name.clone()));
            }
        }
        if cycle.is_empty() {
            return Err(TraceError::EmptyLoop);
        }
        let full = if alphabet.len() == 64 { u64::MAX } else { (1u64 << alphabet.len()) - 1 };
        if let Some(bad) = prefix.iter().chain(&cycle).find(|l| l.0 & !full != 0) {
            let index = (bad.0 & !full).trailing_zeros();
            return Err(TraceError::UnknownProposition(format!("#{index}")));
        }
        Ok(LassoTrace { alphabet, prefix, cycle })
    }

    /// Builds a trace from letters given as lists of proposition names.
    pub fn new<S: AsRef<str>>(alphabet: &[S], prefix: &[&[S]], cycle: &[&[S]]) -> Result<Self, TraceError> {
        let alphabet: Vec<String> = alphabet.iter().map(|s| s.as_ref().to_string()).collect();
        let encode = |letters: &[&[S]]| -> Result<Vec<Letter>, TraceError> {
            letters
                .iter()
                .map(|props| {
                    props.iter().try_fold(Letter::EMPTY, |acc, p| {
                        let p = p.as_ref();
                        let index = alphabet
                            .iter()
                            .position(|a| a == p)
                            .ok_or_else(|| TraceError::UnknownProposition(p.to_string()))?;
                        Ok(acc.with(index))
                    })
                })
                .collect()
        };
        let prefix = encode(prefix)?;
        let cycle = encode(cycle)?;
        LassoTrace::from_letters(alphabet, prefix, cycle)
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn prefix(&self) -> &[Letter] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[Letter] {
        &self.cycle
    }

    /// Number of distinct positions, `prefix.len() + loop.len()`.
    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position following `i` among the distinct positions `0..len()`.
    pub fn successor(&self, i: usize) -> usize {
        if i + 1 < self.len() {
            i + 1
        } else {
            self.prefix.len()
        }
    }

    /// Letter at distinct position `i < len()`.
    pub fn letter(&self, i: usize) -> Letter {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[i - self.prefix.len()]
        }
    }

    /// Letter at position `k` of the infinite unrolling.
    pub fn at(&self, k: usize) -> Letter {
        let p = self.prefix.len();
        if k < p {
            self.prefix[k]
        } else {
            self.cycle[(k - p) % self.cycle.len()]
        }
    }

    /// Index of `name` in the alphabet.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.alphabet.iter().position(|a| a == name)
    }

    fn names(&self, letter: Letter) -> Vec<&str> {
        (0..self.alphabet.len()).filter(|&i| letter.contains(i)).map(|i| self.alphabet[i].as_str()).collect()
    }
}

impl fmt::Display for LassoTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let write_letters = |f: &mut fmt::Formatter<'_>, letters: &[Letter]| -> fmt::Result {
            for (i, l) in letters.iter().enumerate() {
                if i > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{{{}}}", self.names(*l).join(","))?;
            }
            Ok(())
        };
        write_letters(f, &self.prefix)?;
        if !self.prefix.is_empty() {
            f.write_str(" ")?;
        }
        f.write_str("(")?;
        write_letters(f, &self.cycle)?;
        f.write_str(")^w")
    }
}

#[derive(Serialize, Deserialize)]
struct TraceDoc {
    alphabet: Vec<String>,
    prefix: Vec<Vec<String>>,
    #[serde(rename = "loop")]
    cycle: Vec<Vec<String>>,
}

impl Serialize for LassoTrace {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let to_names = |ls: &[Letter]| -> Vec<Vec<String>> {
            ls.iter().map(|l| self.names(*l).into_iter().map(str::to_string).collect()).collect()
        };
        TraceDoc { alphabet: self.alphabet.clone(), prefix: to_names(&self.prefix), cycle: to_names(&self.cycle) }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LassoTrace {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = TraceDoc::deserialize(deserializer)?;
        let prefix: Vec<&[String]> = doc.prefix.iter().map(Vec::as_slice).collect();
        let cycle: Vec<&[String]> = doc.cycle.iter().map(Vec::as_slice).collect();
        LassoTrace::new(&doc.alphabet, &prefix, &cycle).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_wrap_into_loop() {
        let t = LassoTrace::new(&["a", "b"], &[&["a"]], &[&[], &["b"]]).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.successor(0), 1);
        assert_eq!(t.successor(2), 1);
        assert_eq!(t.at(5), t.letter(1));
        assert_eq!(t.at(6), t.letter(2));
        assert_eq!(t.to_string(), "{a} ({} {b})^w");
    }

    #[test]
    fn rejects_malformed() {
        let empty: &[&[&str]] = &[];
        assert_eq!(LassoTrace::new(&["a"], &[], empty), Err(TraceError::EmptyLoop));
        assert!(matches!(LassoTrace::new(&["a"], &[], &[&["z"]]), Err(TraceError::UnknownProposition(_))));
        assert!(matches!(LassoTrace::new(&["a", "a"], &[], &[&[]]), Err(TraceError::BadAlphabet(_))));
        assert!(LassoTrace::from_letters(vec!["a".into()], vec![], vec![Letter(2)]).is_err());
    }

    #[test]
    fn json_shape() {
        let t = LassoTrace::new(&["a", "b"], &[&["a", "b"]], &[&[]]).unwrap();
        let json = serde_json::to_value(&t).unwrap();
        assert_eq!(json, serde_json::json!({"alphabet": ["a", "b"], "prefix": [["a", "b"]], "loop": [[]]}));
        let back: LassoTrace = serde_json::from_value(json).unwrap();
        assert_eq!(back, t);
    }
}
