//! The interactive translation loop as an event-sourced state machine.
//!
//! A session holds the sentence being formalized and its sub-translations.
//! User entries are locked: they are sent to the model as given translations
//! and never overwritten. Model entries are replaced wholesale by each
//! translate. Every successful mutation, and every translate that failed
//! after reaching the backend, appends one history entry holding the action
//! and a snapshot of the resulting state. Replaying the actions from the
//! first entry rebuilds the session exactly.

mod store;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::aggregate::{aggregate, normalize_fragment, AggregateError, AggregatedResult, ScoredCandidate};
use crate::backend::{
    BackendError, BackendRegistry, CompletionRequest, DEFAULT_MAX_TOKENS, DEFAULT_RUNS, DEFAULT_TEMPERATURE,
};
use crate::ltl::{validate_fragment, ParseError};
use crate::prompt::{PromptError, TemplateStore};
use crate::response::parse_completion;

pub use store::{SessionManager, SessionStore};

pub const SCHEMA_VERSION: u32 = 1;
pub const MAX_RUNS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("natural-language input is empty")]
    EmptyInput,
    #[error("fragment text is empty")]
    EmptyFragment,
    #[error("fragment `{0}` already has a sub-translation")]
    DuplicateFragment(String),
    #[error("no sub-translation for fragment `{0}`")]
    UnknownFragment(String),
    #[error("`{text}` is neither a formula nor a formula fragment: {source}")]
    InvalidFormula { text: String, source: ParseError },
    #[error("the result is stale; translate again first")]
    StaleResult,
    #[error("nothing has been translated yet")]
    NoResult,
    #[error("candidate {index} out of range ({len} candidates)")]
    BadIndex { index: usize, len: usize },
    #[error("only a translated session can be approved")]
    NothingToApprove,
    #[error("session is approved and can no longer change")]
    Approved,
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("no completion produced a usable formula ({0})")]
    NoCandidate(String),
    #[error("session `{0}` not found")]
    NotFound(String),
    #[error("session history is inconsistent: {0}")]
    Corrupt(String),
    #[error("session storage: {0}")]
    Storage(String),
}

impl SessionError {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::EmptyInput => "empty_input",
            SessionError::EmptyFragment => "empty_fragment",
            SessionError::DuplicateFragment(_) => "duplicate_fragment",
            SessionError::UnknownFragment(_) => "unknown_fragment",
            SessionError::InvalidFormula { .. } => "invalid_formula",
            SessionError::StaleResult => "stale_result",
            SessionError::NoResult => "no_result",
            SessionError::BadIndex { .. } => "bad_index",
            SessionError::NothingToApprove => "nothing_to_approve",
            SessionError::Approved => "session_approved",
            SessionError::InvalidSettings(_) => "invalid_settings",
            SessionError::UnknownTemplate(_) => "unknown_template",
            SessionError::Backend(e) => match e {
                BackendError::UnknownBackend(_) => "unknown_backend",
                BackendError::MissingCredential { .. } | BackendError::Auth { .. } => "backend_auth",
                BackendError::RateLimited { .. } => "backend_rate_limited",
                BackendError::Timeout => "backend_timeout",
                BackendError::NoRuleMatched => "backend_no_rule",
                _ => "backend_failure",
            },
            SessionError::NoCandidate(_) => "no_candidate",
            SessionError::NotFound(_) => "session_not_found",
            SessionError::Corrupt(_) => "session_corrupt",
            SessionError::Storage(_) => "storage_failure",
        }
    }
}

impl From<PromptError> for SessionError {
    fn from(e: PromptError) -> SessionError {
        match e {
            PromptError::EmptyInput => SessionError::EmptyInput,
        }
    }
}

/// Short stable address of a fragment: SHA-256 of its normalized text,
/// first 16 hex digits.
pub fn fragment_hash(fragment: &str) -> String {
    let digest = Sha256::digest(normalize_fragment(fragment).as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    User,
    Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SubTranslation {
    pub fragment: String,
    pub fragment_hash: String,
    pub formula_text: String,
    pub origin: Origin,
    pub locked: bool,
    pub confidence: Option<f64>,
}

impl SubTranslation {
    fn user(fragment: String, formula_text: String, confidence: Option<f64>) -> SubTranslation {
        SubTranslation {
            fragment_hash: fragment_hash(&fragment),
            fragment,
            formula_text,
            origin: Origin::User,
            locked: true,
            confidence,
        }
    }

    fn model(fragment: String, best: &ScoredCandidate) -> SubTranslation {
        SubTranslation {
            fragment_hash: fragment_hash(&fragment),
            fragment,
            formula_text: best.text.clone(),
            origin: Origin::Model,
            locked: false,
            confidence: Some(best.confidence),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Settings {
    pub backend_id: String,
    pub template_id: String,
    pub temperature: f64,
    pub runs: usize,
}

impl Default for Settings {
    fn default() -> Settings {
        Settings {
            backend_id: "mock".into(),
            template_id: "minimal".into(),
            temperature: DEFAULT_TEMPERATURE,
            runs: DEFAULT_RUNS,
        }
    }
}

impl Settings {
    pub fn validate(&self) -> Result<(), SessionError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(SessionError::InvalidSettings(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        if self.runs == 0 || self.runs > MAX_RUNS {
            return Err(SessionError::InvalidSettings(format!("runs {} outside [1, {MAX_RUNS}]", self.runs)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Draft,
    Translated,
    Approved,
}

/// The final formula currently shown: a candidate of the last result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FinalChoice {
    pub formula_text: String,
    pub confidence: f64,
    /// Position among the final candidates, 0 being the top-voted one.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum Action {
    Created { id: String, nl: String, settings: Settings },
    Translate { backend_id: String, runs: usize, completions: Vec<String> },
    TranslateFailed { code: String, message: String },
    Add { fragment: String, formula_text: String },
    Edit { fragment: String, formula_text: String },
    Delete { fragment: String },
    Select { fragment: Option<String>, index: usize },
    UpdateSettings { settings: Settings },
    Approve,
}

/// Session state without its history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Snapshot {
    pub nl: String,
    pub sub_translations: Vec<SubTranslation>,
    pub last_result: Option<AggregatedResult>,
    #[serde(rename = "final")]
    pub final_: Option<FinalChoice>,
    pub settings: Settings,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub timestamp: DateTime<Utc>,
    pub action: Action,
    pub snapshot: Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionState {
    pub version: u32,
    pub id: String,
    pub nl: String,
    pub sub_translations: Vec<SubTranslation>,
    pub last_result: Option<AggregatedResult>,
    #[serde(rename = "final")]
    pub final_: Option<FinalChoice>,
    pub settings: Settings,
    pub status: Status,
    pub history: Vec<HistoryEntry>,
}

/// What a translate needs besides the session itself.
#[derive(Debug, Clone)]
pub struct Workbench {
    pub templates: TemplateStore,
    pub backends: BackendRegistry,
}

impl Workbench {
    pub fn new(templates: TemplateStore, backends: BackendRegistry) -> Workbench {
        Workbench { templates, backends }
    }

    /// Built-in templates and the built-in mock backend.
    pub fn offline() -> Workbench {
        Workbench::new(TemplateStore::builtin(), BackendRegistry::with_default_mock())
    }

    pub fn check_settings(&self, settings: &Settings) -> Result<(), SessionError> {
        settings.validate()?;
        if !self.backends.contains(&settings.backend_id) {
            return Err(BackendError::UnknownBackend(settings.backend_id.clone()).into());
        }
        self.templates
            .get(&settings.template_id)
            .map_err(|_| SessionError::UnknownTemplate(settings.template_id.clone()))?;
        Ok(())
    }
}

/// Parses and votes over raw completions. Unparseable completions still
/// count as runs.
pub fn aggregate_completions(completions: &[String], runs: usize) -> Result<AggregatedResult, SessionError> {
    let mut parsed = Vec::new();
    let mut reasons = Vec::new();
    for raw in completions {
        match parse_completion(raw) {
            Ok(p) => parsed.push(p),
            Err(e) => reasons.push(e.to_string()),
        }
    }
    aggregate(&parsed, runs).map_err(|e| match e {
        AggregateError::NoCandidate => SessionError::NoCandidate(reasons.join("; ")),
        other => SessionError::NoCandidate(other.to_string()),
    })
}

fn random_id() -> String {
    format!("{:032x}", rand::random::<u128>())
}

fn check_formula_text(text: &str) -> Result<String, SessionError> {
    let text = text.trim();
    validate_fragment(text).map_err(|source| SessionError::InvalidFormula { text: text.to_string(), source })?;
    Ok(text.to_string())
}

impl SessionState {
    pub fn new(nl: impl Into<String>, settings: Settings) -> Result<SessionState, SessionError> {
        SessionState::create(random_id(), nl.into(), settings, Utc::now())
    }

    fn create(id: String, nl: String, settings: Settings, at: DateTime<Utc>) -> Result<SessionState, SessionError> {
        settings.validate()?;
        let mut state = SessionState {
            version: SCHEMA_VERSION,
            id: id.clone(),
            nl: nl.clone(),
            sub_translations: Vec::new(),
            last_result: None,
            final_: None,
            settings: settings.clone(),
            status: Status::Draft,
            history: Vec::new(),
        };
        state.record(Action::Created { id, nl, settings }, at);
        Ok(state)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            nl: self.nl.clone(),
            sub_translations: self.sub_translations.clone(),
            last_result: self.last_result.clone(),
            final_: self.final_.clone(),
            settings: self.settings.clone(),
            status: self.status,
        }
    }

    fn record(&mut self, action: Action, at: DateTime<Utc>) {
        let snapshot = self.snapshot();
        self.history.push(HistoryEntry { timestamp: at, action, snapshot });
    }

    fn perform(&mut self, action: Action) -> Result<(), SessionError> {
        self.apply(&action)?;
        self.record(action, Utc::now());
        Ok(())
    }

    pub fn find(&self, fragment: &str) -> Option<&SubTranslation> {
        let key = normalize_fragment(fragment);
        self.sub_translations.iter().find(|s| s.fragment == key)
    }

    pub fn find_by_hash(&self, hash: &str) -> Option<&SubTranslation> {
        self.sub_translations.iter().find(|s| s.fragment_hash == hash)
    }

    fn position(&self, fragment: &str) -> Option<usize> {
        let key = normalize_fragment(fragment);
        self.sub_translations.iter().position(|s| s.fragment == key)
    }

    /// Locked entries, in order: the given translations of the next prompt.
    pub fn given(&self) -> impl Iterator<Item = (&str, &str)> {
        self.sub_translations.iter().filter(|s| s.locked).map(|s| (s.fragment.as_str(), s.formula_text.as_str()))
    }

    /// The prompt the next translate would send.
    pub fn prompt(&self, templates: &TemplateStore) -> Result<String, SessionError> {
        let template = templates
            .get(&self.settings.template_id)
            .map_err(|_| SessionError::UnknownTemplate(self.settings.template_id.clone()))?;
        Ok(template.compute_prompt(&self.nl, self.given())?)
    }

    fn ensure_open(&self) -> Result<(), SessionError> {
        if self.status == Status::Approved {
            return Err(SessionError::Approved);
        }
        Ok(())
    }

    /// Queries the configured backend and merges the voted result.
    pub fn translate(&mut self, bench: &Workbench) -> Result<(), SessionError> {
        self.ensure_open()?;
        let prompt = self.prompt(&bench.templates)?;
        let template = bench.templates.get(&self.settings.template_id).expect("checked by prompt");
        let backend = bench.backends.get(&self.settings.backend_id)?;
        let request = CompletionRequest {
            prompt,
            temperature: self.settings.temperature,
            stop_token: template.stop_token.clone(),
            max_tokens: DEFAULT_MAX_TOKENS,
            runs: self.settings.runs,
        };
        let outcome = backend
            .complete(&request)
            .map_err(SessionError::from)
            .and_then(|batch| aggregate_completions(&batch.completions, request.runs).map(|_| batch));
        match outcome {
            Ok(batch) => self.perform(Action::Translate {
                backend_id: batch.backend_id,
                runs: request.runs,
                completions: batch.completions,
            }),
            Err(e) => {
                log::warn!("session {}: translate failed: {e}", self.id);
                self.record(Action::TranslateFailed { code: e.code().into(), message: e.to_string() }, Utc::now());
                Err(e)
            }
        }
    }

    pub fn add(&mut self, fragment: &str, formula_text: &str) -> Result<(), SessionError> {
        self.perform(Action::Add { fragment: fragment.into(), formula_text: formula_text.into() })
    }

    pub fn edit(&mut self, fragment: &str, formula_text: &str) -> Result<(), SessionError> {
        self.perform(Action::Edit { fragment: fragment.into(), formula_text: formula_text.into() })
    }

    pub fn delete(&mut self, fragment: &str) -> Result<(), SessionError> {
        self.perform(Action::Delete { fragment: fragment.into() })
    }

    /// Chooses candidate `index` of a fragment, or of the final formula
    /// when `fragment` is `None`.
    pub fn select(&mut self, fragment: Option<&str>, index: usize) -> Result<(), SessionError> {
        self.perform(Action::Select { fragment: fragment.map(String::from), index })
    }

    pub fn update_settings(&mut self, settings: Settings) -> Result<(), SessionError> {
        self.perform(Action::UpdateSettings { settings })
    }

    /// Freezes the session. Approving twice is a no-op.
    pub fn approve(&mut self) -> Result<(), SessionError> {
        if self.status == Status::Approved {
            return Ok(());
        }
        self.perform(Action::Approve)
    }

    /// Checks `action` against the current state and applies it. Nothing
    /// changes when an error is returned.
    fn apply(&mut self, action: &Action) -> Result<(), SessionError> {
        match action {
            Action::Created { .. } => return Err(SessionError::Corrupt("session created twice".into())),
            Action::TranslateFailed { .. } => {}
            Action::Translate { runs, completions, .. } => {
                self.ensure_open()?;
                let result = aggregate_completions(completions, *runs)?;
                let mut merged: Vec<SubTranslation> =
                    self.sub_translations.iter().filter(|s| s.locked).cloned().collect();
                for (fragment, fr) in &result.sub_translations {
                    if !merged.iter().any(|s| &s.fragment == fragment) {
                        merged.push(SubTranslation::model(fragment.clone(), &fr.best));
                    }
                }
                self.sub_translations = merged;
                self.final_ = Some(FinalChoice {
                    formula_text: result.final_.text.clone(),
                    confidence: result.final_.confidence,
                    index: 0,
                });
                self.last_result = Some(result);
                self.status = Status::Translated;
            }
            Action::Add { fragment, formula_text } => {
                self.ensure_open()?;
                let fragment = normalize_fragment(fragment);
                if fragment.is_empty() {
                    return Err(SessionError::EmptyFragment);
                }
                if self.position(&fragment).is_some() {
                    return Err(SessionError::DuplicateFragment(fragment));
                }
                let text = check_formula_text(formula_text)?;
                self.sub_translations.push(SubTranslation::user(fragment, text, None));
                self.status = Status::Draft;
            }
            Action::Edit { fragment, formula_text } => {
                self.ensure_open()?;
                let at = self.position(fragment).ok_or_else(|| SessionError::UnknownFragment(fragment.clone()))?;
                let text = check_formula_text(formula_text)?;
                let entry = &mut self.sub_translations[at];
                if entry.formula_text != text {
                    entry.confidence = None;
                }
                entry.formula_text = text;
                entry.origin = Origin::User;
                entry.locked = true;
                self.status = Status::Draft;
            }
            Action::Delete { fragment } => {
                self.ensure_open()?;
                let at = self.position(fragment).ok_or_else(|| SessionError::UnknownFragment(fragment.clone()))?;
                self.sub_translations.remove(at);
                self.status = Status::Draft;
            }
            Action::Select { fragment, index } => {
                self.ensure_open()?;
                let result = self.last_result.as_ref().ok_or(SessionError::NoResult)?;
                if self.status != Status::Translated {
                    return Err(SessionError::StaleResult);
                }
                match fragment {
                    None => {
                        let len = result.final_candidates().count();
                        let chosen = result
                            .final_candidates()
                            .nth(*index)
                            .ok_or(SessionError::BadIndex { index: *index, len })?;
                        self.final_ = Some(FinalChoice {
                            formula_text: chosen.text.clone(),
                            confidence: chosen.confidence,
                            index: *index,
                        });
                    }
                    Some(fragment) => {
                        let key = normalize_fragment(fragment);
                        let fr = result
                            .sub_translations
                            .get(&key)
                            .ok_or_else(|| SessionError::UnknownFragment(fragment.clone()))?;
                        let len = fr.candidates().count();
                        let chosen =
                            fr.candidates().nth(*index).ok_or(SessionError::BadIndex { index: *index, len })?;
                        let entry = SubTranslation::user(key.clone(), chosen.text.clone(), Some(chosen.confidence));
                        match self.position(&key) {
                            Some(at) => self.sub_translations[at] = entry,
                            None => self.sub_translations.push(entry),
                        }
                    }
                }
            }
            Action::UpdateSettings { settings } => {
                self.ensure_open()?;
                settings.validate()?;
                self.settings = settings.clone();
            }
            Action::Approve => {
                if self.status != Status::Translated {
                    return Err(SessionError::NothingToApprove);
                }
                self.status = Status::Approved;
            }
        }
        Ok(())
    }

    /// Rebuilds a session from its history alone.
    pub fn replay(history: &[HistoryEntry]) -> Result<SessionState, SessionError> {
        let (first, rest) = history.split_first().ok_or_else(|| SessionError::Corrupt("empty history".into()))?;
        let Action::Created { id, nl, settings } = &first.action else {
            return Err(SessionError::Corrupt("history does not start with creation".into()));
        };
        let mut state = SessionState::create(id.clone(), nl.clone(), settings.clone(), first.timestamp)?;
        for (i, entry) in rest.iter().enumerate() {
            state.apply(&entry.action).map_err(|e| SessionError::Corrupt(format!("entry {}: {e}", i + 1)))?;
            state.record(entry.action.clone(), entry.timestamp);
            if state.history.last().map(|h| &h.snapshot) != Some(&entry.snapshot) {
                return Err(SessionError::Corrupt(format!("entry {} snapshot differs", i + 1)));
            }
        }
        Ok(state)
    }

    /// Replays the history and compares the outcome with `self`.
    pub fn verify_history(&self) -> Result<(), SessionError> {
        if SessionState::replay(&self.history)? == *self {
            Ok(())
        } else {
            Err(SessionError::Corrupt("replay does not reproduce the session".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session(nl: &str) -> SessionState {
        SessionState::new(nl, Settings::default()).unwrap()
    }

    #[test]
    fn hash_is_stable_and_normalized() {
        assert_eq!(fragment_hash("b  holds"), fragment_hash(" b holds"));
        assert_eq!(fragment_hash("b holds").len(), 16);
        assert_ne!(fragment_hash("b holds"), fragment_hash("B holds"));
    }

    #[test]
    fn ids_are_128_bit_hex() {
        let s = session("x");
        assert_eq!(s.id.len(), 32);
        assert!(s.id.chars().all(|c| c.is_ascii_hexdigit()));
        assert_ne!(s.id, session("x").id);
    }

    #[test]
    fn add_edit_delete() {
        let mut s = session("x");
        s.add("process 0 terminates", "t_p0").unwrap();
        s.add("b holds as well", "-> b").unwrap();
        assert!(s.find("b holds as well").unwrap().locked);
        assert_eq!(
            s.add("process  0 terminates", "a"),
            Err(SessionError::DuplicateFragment("process 0 terminates".into()))
        );
        assert!(matches!(s.add("y", "a &"), Err(SessionError::InvalidFormula { .. })));
        assert_eq!(s.add("  ", "a"), Err(SessionError::EmptyFragment));
        s.edit("b holds as well", "b | X b").unwrap();
        assert_eq!(s.find("b holds as well").unwrap().formula_text, "b | X b");
        assert_eq!(s.edit("zzz", "a"), Err(SessionError::UnknownFragment("zzz".into())));
        s.delete("process 0 terminates").unwrap();
        assert!(s.find("process 0 terminates").is_none());
        assert_eq!(s.delete("process 0 terminates"), Err(SessionError::UnknownFragment("process 0 terminates".into())));
        assert_eq!(s.history.len(), 5);
        s.verify_history().unwrap();
    }

    #[test]
    fn approve_requires_translation() {
        let mut s = session("x");
        assert_eq!(s.approve(), Err(SessionError::NothingToApprove));
        assert_eq!(s.select(None, 0), Err(SessionError::NoResult));
    }

    #[test]
    fn empty_input_leaves_state_unchanged() {
        let mut s = session("   ");
        let before = s.clone();
        assert_eq!(s.translate(&Workbench::offline()), Err(SessionError::EmptyInput));
        assert_eq!(s, before);
    }

    #[test]
    fn settings_validation() {
        assert!(SessionState::new("x", Settings { runs: 0, ..Settings::default() }).is_err());
        let mut s = session("x");
        assert!(s.update_settings(Settings { temperature: 3.0, ..Settings::default() }).is_err());
        s.update_settings(Settings { runs: 1, ..Settings::default() }).unwrap();
        assert_eq!(s.settings.runs, 1);
    }

    #[test]
    fn error_codes_are_distinct() {
        let errors = [
            SessionError::EmptyInput,
            SessionError::EmptyFragment,
            SessionError::DuplicateFragment(String::new()),
            SessionError::UnknownFragment(String::new()),
            SessionError::StaleResult,
            SessionError::NoResult,
            SessionError::BadIndex { index: 0, len: 0 },
            SessionError::NothingToApprove,
            SessionError::Approved,
        ];
        let codes: std::collections::BTreeSet<_> = errors.iter().map(SessionError::code).collect();
        assert_eq!(codes.len(), errors.len());
    }
}
