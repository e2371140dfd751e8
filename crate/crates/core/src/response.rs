//! Parsing of raw model completions.
//!
//! A completion continues the interactive prompt after `Explanation:`, so it
//! is expected to hold an explanation, an `Explanation dictionary:` line and
//! a `So, the final LTL translation is:` line. Sampled text is noisy: marker
//! case and the comma after "So" are not enforced, the dictionary is read
//! leniently, and dictionary entries whose value does not parse are dropped
//! one by one with a warning.

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::dict;
use crate::ltl::{self, Formula};

const FINAL_PHRASE: &str = "the final ltl translation is";
const DICT_PHRASE: &str = "explanation dictionary:";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResponseError {
    #[error("completion has no final-translation marker")]
    MissingFinalMarker,
    #[error("final translation `{text}` does not parse: {source}")]
    UnparsableFinal { text: String, source: ltl::ParseError },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ParsedCompletion {
    pub explanation: String,
    pub dictionary: IndexMap<String, Formula>,
    pub final_formula: Formula,
    /// The final translation as the model wrote it.
    pub final_text: String,
    /// Surface text of each dictionary formula, keyed like `dictionary`.
    pub dictionary_text: IndexMap<String, String>,
    pub warnings: Vec<String>,
    pub raw: String,
}

// Byte offset of the last case-insensitive occurrence of `needle`
// (ASCII needle, so offsets line up with the original).
fn rfind_ci(haystack: &str, needle: &str) -> Option<usize> {
    haystack.to_ascii_lowercase().rfind(needle)
}

pub fn parse_completion(raw: &str) -> Result<ParsedCompletion, ResponseError> {
    let final_at = rfind_ci(raw, FINAL_PHRASE).ok_or(ResponseError::MissingFinalMarker)?;
    let final_text = extract_final(&raw[final_at + FINAL_PHRASE.len()..]);
    let final_formula = ltl::parse(&final_text)
        .map_err(|source| ResponseError::UnparsableFinal { text: final_text.clone(), source })?;

    let before_final = strip_so(&raw[..final_at]);
    let (explanation, dict_text) = match rfind_ci(before_final, DICT_PHRASE) {
        Some(at) => (&before_final[..at], &before_final[at + DICT_PHRASE.len()..]),
        None => (before_final, ""),
    };
    let explanation = explanation.trim();
    let explanation = explanation.strip_prefix(crate::prompt::EXPLANATION).unwrap_or(explanation).trim().to_string();

    let mut warnings = Vec::new();
    let mut dictionary = IndexMap::new();
    let mut dictionary_text = IndexMap::new();
    let lenient = dict::parse(dict_text);
    for skipped in lenient.skipped {
        warnings.push(format!("skipped dictionary entry `{}`: {}", skipped.text, skipped.reason));
    }
    for (fragment, text) in lenient.entries {
        if dictionary.contains_key(&fragment) {
            warnings.push(format!("duplicate dictionary entry for `{fragment}` ignored"));
            continue;
        }
        match ltl::parse(&text) {
            Ok(f) => {
                dictionary.insert(fragment.clone(), f);
                dictionary_text.insert(fragment, text);
            }
            Err(e) => warnings.push(format!("dropped `{fragment}`: `{text}` does not parse ({e})")),
        }
    }

    Ok(ParsedCompletion {
        explanation,
        dictionary,
        final_formula,
        final_text,
        dictionary_text,
        warnings,
        raw: raw.to_string(),
    })
}

// Drops a trailing "So," / "So" that introduces the final-translation phrase.
fn strip_so(text: &str) -> &str {
    let trimmed = text.trim_end();
    let lower = trimmed.to_ascii_lowercase();
    for suffix in ["so,", "so"] {
        if lower.ends_with(suffix) {
            return &trimmed[..trimmed.len() - suffix.len()];
        }
    }
    trimmed
}

fn extract_final(after_marker: &str) -> String {
    let rest = after_marker.trim_start_matches([':', ' ', '\t']);
    let line = rest.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    let mut text = line.trim();
    loop {
        let before = text;
        text = text.trim_end_matches("FINISH").trim_end();
        text = text.strip_suffix('.').unwrap_or(text).trim_end();
        if text.len() > 1 && text.starts_with('`') && text.ends_with('`') {
            text = text[1..text.len() - 1].trim();
        }
        if text == before {
            break;
        }
    }
    text.to_string()
}
