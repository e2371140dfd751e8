//! Text-completion backends.
//!
//! A backend turns one prompt into `runs` independently sampled completions.
//! Every completion is cut at the stop token. A batch either has exactly
//! `runs` completions or the whole call fails.

mod http;
mod mock;
mod registry;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{HttpBackend, HttpSpec, Preset, RequestMapping};
pub use mock::{MockBackend, MockRule};
pub use registry::{BackendDescriptor, BackendRegistry, BackendSpec, MockSpec, DEFAULT_MOCK_RULES};

pub const DEFAULT_TEMPERATURE: f64 = 0.2;
pub const DEFAULT_RUNS: usize = 3;
pub const DEFAULT_MAX_TOKENS: u32 = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    pub stop_token: String,
    pub max_tokens: u32,
    pub runs: usize,
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>) -> CompletionRequest {
        CompletionRequest {
            prompt: prompt.into(),
            temperature: DEFAULT_TEMPERATURE,
            stop_token: crate::prompt::DEFAULT_STOP_TOKEN.to_string(),
            max_tokens: DEFAULT_MAX_TOKENS,
            runs: DEFAULT_RUNS,
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.runs == 0 {
            return Err(BackendError::InvalidRequest("runs must be at least 1".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(BackendError::InvalidRequest(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        if self.stop_token.is_empty() {
            return Err(BackendError::InvalidRequest("empty stop token".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompletionBatch {
    pub completions: Vec<String>,
    pub backend_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend `{backend}` needs a credential in ${env}")]
    MissingCredential { backend: String, env: String },
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("rate limited by provider{}", retry_after.map(|d| format!(", retry after {}s", d.as_secs())).unwrap_or_default())]
    RateLimited { retry_after: Option<Duration> },
    #[error("request timed out")]
    Timeout,
    #[error("network error: {0}")]
    Network(String),
    #[error("provider returned HTTP {status}: {body}")]
    Provider { status: u16, body: String },
    #[error("unexpected provider response: {0}")]
    BadResponse(String),
    #[error("no mock rule matches the query")]
    NoRuleMatched,
    #[error("unknown backend `{0}`")]
    UnknownBackend(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

impl BackendError {
    /// Transient failures worth another attempt.
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Timeout | BackendError::Network(_) => true,
            BackendError::Provider { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

pub trait CompletionBackend: Send + Sync {
    fn id(&self) -> &str;

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionBatch, BackendError>;
}

/// Cuts `text` at the first occurrence of `stop`.
pub fn truncate_at_stop(text: &str, stop: &str) -> String {
    match text.find(stop) {
        Some(at) => text[..at].to_string(),
        None => text.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation() {
        assert_eq!(truncate_at_stop("abc FINISH\nNatural Language: x", "FINISH"), "abc ");
        assert_eq!(truncate_at_stop("abc", "FINISH"), "abc");
    }

    #[test]
    fn request_validation() {
        let mut r = CompletionRequest::new("p");
        assert_eq!((r.temperature, r.runs, r.max_tokens), (0.2, 3, 512));
        assert!(r.validate().is_ok());
        r.runs = 0;
        assert!(r.validate().is_err());
        r.runs = 1;
        r.temperature = 2.5;
        assert!(r.validate().is_err());
    }

    #[test]
    fn retry_classification() {
        assert!(BackendError::Timeout.is_retryable());
        assert!(BackendError::Provider { status: 503, body: String::new() }.is_retryable());
        assert!(!BackendError::Provider { status: 400, body: String::new() }.is_retryable());
        assert!(!BackendError::Auth { status: 401 }.is_retryable());
        assert!(!BackendError::RateLimited { retry_after: None }.is_retryable());
    }
}
