//! Scripted backend for offline use and tests.
//!
//! Each rule pairs a substring with a list of completions. The substring is
//! matched against the query part of the prompt: the last
//! `Natural Language:` line and the `Given translations:` line after it.
//! The first matching rule answers; its completions are cycled across runs.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{truncate_at_stop, BackendError, CompletionBackend, CompletionBatch, CompletionRequest};
use crate::prompt::{EXPLANATION, NATURAL_LANGUAGE};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockRule {
    #[serde(rename = "match")]
    pub matcher: String,
    pub completions: Vec<String>,
    /// Free-form provenance, ignored by matching.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    id: String,
    rules: Vec<MockRule>,
    latency: Duration,
}

impl MockBackend {
    pub fn new(id: impl Into<String>, rules: Vec<MockRule>) -> Result<MockBackend, BackendError> {
        for (i, rule) in rules.iter().enumerate() {
            if rule.matcher.is_empty() {
                return Err(BackendError::Config(format!("mock rule {i} has an empty matcher")));
            }
            if rule.completions.is_empty() {
                return Err(BackendError::Config(format!("mock rule {i} has no completions")));
            }
        }
        Ok(MockBackend { id: id.into(), rules, latency: Duration::ZERO })
    }

    /// Parses a JSON array of `{match, completions}` objects.
    pub fn from_json(id: impl Into<String>, json: &str) -> Result<MockBackend, BackendError> {
        let rules: Vec<MockRule> =
            serde_json::from_str(json).map_err(|e| BackendError::Config(format!("mock rules: {e}")))?;
        MockBackend::new(id, rules)
    }

    /// Sleeps this long per call; useful for concurrency tests.
    pub fn with_latency(mut self, latency: Duration) -> MockBackend {
        self.latency = latency;
        self
    }

    pub fn rules(&self) -> &[MockRule] {
        &self.rules
    }
}

/// The text rules are matched against.
pub fn query_key(prompt: &str) -> &str {
    let start = prompt.rfind(NATURAL_LANGUAGE).unwrap_or(0);
    let tail = &prompt[start..];
    let tail = tail.strip_suffix(EXPLANATION).unwrap_or(tail);
    tail.trim_end()
}

impl CompletionBackend for MockBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionBatch, BackendError> {
        request.validate()?;
        let key = query_key(&request.prompt);
        let rule = self.rules.iter().find(|r| key.contains(&r.matcher)).ok_or(BackendError::NoRuleMatched)?;
        if !self.latency.is_zero() {
            thread::sleep(self.latency);
        }
        let completions = (0..request.runs)
            .map(|i| truncate_at_stop(&rule.completions[i % rule.completions.len()], &request.stop_token))
            .collect();
        Ok(CompletionBatch { completions, backend_id: self.id.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn backend() -> MockBackend {
        MockBackend::from_json(
            "mock",
            r#"[
                {"match": "\"a holds until b holds\": \"(a U b)\"", "completions": ["fixed"]},
                {"match": "a holds until b holds", "completions": ["c1 FINISH junk", "c2"]}
            ]"#,
        )
        .unwrap()
    }

    fn request(given: &str, runs: usize) -> CompletionRequest {
        let prompt = format!(
            "header\nNatural Language: example\nFINISH\nNatural Language: a holds until b holds or always a holds\nGiven translations: {given}\nExplanation:"
        );
        CompletionRequest { runs, ..CompletionRequest::new(prompt) }
    }

    #[test]
    fn cycles_completions_across_runs() {
        let batch = backend().complete(&request("{}", 3)).unwrap();
        assert_eq!(batch.completions, vec!["c1 ", "c2", "c1 "]);
        assert_eq!(batch.backend_id, "mock");
    }

    #[test]
    fn single_run() {
        assert_eq!(backend().complete(&request("{}", 1)).unwrap().completions.len(), 1);
    }

    #[test]
    fn first_matching_rule_wins() {
        let batch = backend().complete(&request(r#"{"a holds until b holds": "(a U b)"}"#, 2)).unwrap();
        assert_eq!(batch.completions, vec!["fixed", "fixed"]);
    }

    #[test]
    fn only_the_query_is_matched() {
        let b = MockBackend::from_json("m", r#"[{"match": "header", "completions": ["x"]}]"#).unwrap();
        assert_eq!(b.complete(&request("{}", 1)), Err(BackendError::NoRuleMatched));
    }

    #[test]
    fn rejects_bad_rules() {
        assert!(MockBackend::from_json("m", r#"[{"match": "", "completions": ["x"]}]"#).is_err());
        assert!(MockBackend::from_json("m", r#"[{"match": "a", "completions": []}]"#).is_err());
        assert!(MockBackend::from_json("m", "{").is_err());
    }

    #[test]
    fn key_extraction() {
        let key = query_key("h\nNatural Language: s\nGiven translations: {}\nExplanation:");
        assert_eq!(key, "Natural Language: s\nGiven translations: {}");
    }
}
