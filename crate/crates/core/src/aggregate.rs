//! Vote counting over sampled completions.
//!
//! Candidates are keyed by their minimal-parens print, so `G (a)` and `G a`
//! vote together; no semantic merging is done. Confidence is
//! `votes / runs`: a run whose completion failed to parse still counts in
//! the denominator.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::{print, Formula, PrintMode};
use crate::response::ParsedCompletion;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AggregateError {
    #[error("no completion produced a usable formula")]
    NoCandidate,
    #[error("{parsed} parsed completions exceed {runs} runs")]
    TooManyCompletions { parsed: usize, runs: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoredCandidate {
    pub formula: Formula,
    /// Surface text of the first completion that proposed this candidate.
    pub text: String,
    pub votes: usize,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentResult {
    pub best: ScoredCandidate,
    pub alternatives: Vec<ScoredCandidate>,
}

impl FragmentResult {
    /// `best` followed by the alternatives.
    pub fn candidates(&self) -> impl Iterator<Item = &ScoredCandidate> {
        std::iter::once(&self.best).chain(&self.alternatives)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AggregatedResult {
    #[serde(rename = "final")]
    pub final_: ScoredCandidate,
    pub final_alternatives: Vec<ScoredCandidate>,
    pub sub_translations: IndexMap<String, FragmentResult>,
    pub runs: usize,
    /// Completions that yielded a parseable final formula.
    pub parseable: usize,
}

impl AggregatedResult {
    pub fn final_candidates(&self) -> impl Iterator<Item = &ScoredCandidate> {
        std::iter::once(&self.final_).chain(&self.final_alternatives)
    }
}

/// Collapses runs of whitespace; case is preserved.
pub fn normalize_fragment(fragment: &str) -> String {
    fragment.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Default)]
struct Tally {
    // canonical text -> (formula, first surface text, votes), in first-seen order
    counts: IndexMap<String, (Formula, String, usize)>,
}

impl Tally {
    fn vote(&mut self, formula: &Formula, surface: &str) {
        let key = print(formula, PrintMode::Minimal);
        self.counts.entry(key).or_insert_with(|| (formula.clone(), surface.trim().to_string(), 0)).2 += 1;
    }

    fn ranked(self, runs: usize) -> Vec<ScoredCandidate> {
        let mut out: Vec<ScoredCandidate> = self
            .counts
            .into_values()
            .map(|(formula, text, votes)| ScoredCandidate {
                formula,
                text,
                votes,
                confidence: votes as f64 / runs as f64,
            })
            .collect();
        // Stable: equal votes keep first-seen order.
        out.sort_by_key(|c| std::cmp::Reverse(c.votes));
        out
    }
}

pub fn aggregate(parsed: &[ParsedCompletion], runs: usize) -> Result<AggregatedResult, AggregateError> {
    if parsed.is_empty() {
        return Err(AggregateError::NoCandidate);
    }
    if parsed.len() > runs {
        return Err(AggregateError::TooManyCompletions { parsed: parsed.len(), runs });
    }
    let mut finals = Tally::default();
    let mut fragments: IndexMap<String, Tally> = IndexMap::new();
    for completion in parsed {
        finals.vote(&completion.final_formula, &completion.final_text);
        for (fragment, formula) in &completion.dictionary {
            let surface = completion.dictionary_text.get(fragment).map(String::as_str).unwrap_or_default();
            let surface = if surface.is_empty() { print(formula, PrintMode::Minimal) } else { surface.to_string() };
            fragments.entry(normalize_fragment(fragment)).or_default().vote(formula, &surface);
        }
    }

    let mut ranked = finals.ranked(runs).into_iter();
    let final_ = ranked.next().expect("at least one completion");
    let sub_translations = fragments
        .into_iter()
        .map(|(fragment, tally)| {
            let mut ranked = tally.ranked(runs).into_iter();
            let best = ranked.next().expect("tally entries have a vote");
            (fragment, FragmentResult { best, alternatives: ranked.collect() })
        })
        .collect();
    Ok(AggregatedResult {
        final_,
        final_alternatives: ranked.collect(),
        sub_translations,
        runs,
        parseable: parsed.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::parse_completion;

    fn completion(dict: &str, fin: &str) -> ParsedCompletion {
        parse_completion(&format!("x\nExplanation dictionary: {dict}\nSo, the final LTL translation is: {fin}"))
            .unwrap()
    }

    #[test]
    fn two_to_one_split() {
        let parsed = vec![completion("{}", "G a"), completion("{}", "F a"), completion("{}", "G a")];
        let r = aggregate(&parsed, 3).unwrap();
        assert_eq!(r.final_.text, "G a");
        assert_eq!(r.final_.votes, 2);
        assert_eq!(r.final_.confidence, 2.0 / 3.0);
        assert_eq!(r.final_alternatives.len(), 1);
        assert_eq!(r.final_alternatives[0].text, "F a");
        assert_eq!(r.final_alternatives[0].confidence, 1.0 / 3.0);
    }

    #[test]
    fn single_run() {
        let r = aggregate(&[completion("{}", "a")], 1).unwrap();
        assert_eq!(r.final_.confidence, 1.0);
        assert!(r.final_alternatives.is_empty());
    }

    #[test]
    fn syntactic_variants_merge() {
        let parsed = vec![completion("{}", "G(a)"), completion("{}", "G a"), completion("{}", "F a")];
        let r = aggregate(&parsed, 3).unwrap();
        assert_eq!(r.final_.votes, 2);
        assert_eq!(r.final_.text, "G(a)");
        assert_eq!(r.final_candidates().count(), 2);
    }

    #[test]
    fn ties_break_by_first_occurrence() {
        let parsed = vec![completion("{}", "b"), completion("{}", "a")];
        let r = aggregate(&parsed, 2).unwrap();
        assert_eq!(r.final_.text, "b");
    }

    #[test]
    fn failed_runs_lower_confidence() {
        let r = aggregate(&[completion("{}", "a"), completion("{}", "a")], 3).unwrap();
        assert_eq!(r.final_.confidence, 2.0 / 3.0);
        assert_eq!(r.parseable, 2);
    }

    #[test]
    fn fragments_group_by_normalized_text() {
        let parsed = vec![
            completion(r#"{"b  holds": "b", "x": "a"}"#, "a"),
            completion(r#"{"b holds": "X b"}"#, "a"),
            completion(r#"{"b holds": "(b)"}"#, "a"),
        ];
        let r = aggregate(&parsed, 3).unwrap();
        let b = &r.sub_translations["b holds"];
        assert_eq!(b.best.votes, 2);
        assert_eq!(b.best.text, "b");
        assert_eq!(b.alternatives[0].text, "X b");
        assert_eq!(r.sub_translations.keys().collect::<Vec<_>>(), vec!["b holds", "x"]);
    }

    #[test]
    fn nothing_to_aggregate() {
        assert_eq!(aggregate(&[], 3), Err(AggregateError::NoCandidate));
        assert!(matches!(
            aggregate(&[completion("{}", "a"), completion("{}", "a")], 1),
            Err(AggregateError::TooManyCompletions { .. })
        ));
    }
}
