//! Generic text completion over HTTP.
//!
//! The client posts one JSON body per run and reads the completion out of
//! the response by a dotted path such as `choices.0.text`. Field names on
//! both sides come from a [`RequestMapping`], so a provider is a matter of
//! configuration; [`Preset`] bundles two common shapes.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{truncate_at_stop, BackendError, CompletionBackend, CompletionBatch, CompletionRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// OpenAI-style `/v1/completions` (Codex-era API).
    OpenaiCompletions,
    /// Hugging Face hosted inference (BLOOM).
    HuggingfaceInference,
}

/// Where request parameters go in the JSON body. Each value is a dotted
/// path; `None` leaves the parameter out.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RequestMapping {
    pub prompt: String,
    #[serde(default)]
    pub temperature: Option<String>,
    #[serde(default)]
    pub max_tokens: Option<String>,
    /// Sent as a one-element array.
    #[serde(default)]
    pub stop: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    /// Fixed fields merged into every body before the mapped ones.
    #[serde(default)]
    pub extra: Map<String, Value>,
}

/// Configuration of one HTTP backend. Unset fields fall back to the preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HttpSpec {
    pub id: String,
    #[serde(default)]
    pub display_name: Option<String>,
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    /// Environment variable holding the credential.
    #[serde(default)]
    pub credential_env: Option<String>,
    #[serde(default)]
    pub auth_header: Option<String>,
    #[serde(default)]
    pub auth_prefix: Option<String>,
    #[serde(default)]
    pub request: Option<RequestMapping>,
    #[serde(default)]
    pub response_path: Option<String>,
    #[serde(default)]
    pub timeout_secs: Option<u64>,
    #[serde(default)]
    pub max_retries: Option<u32>,
    #[serde(default)]
    pub backoff_ms: Option<u64>,
}

struct PresetDefaults {
    display_name: &'static str,
    endpoint: &'static str,
    model: Option<&'static str>,
    request: RequestMapping,
    response_path: &'static str,
}

fn path(s: &str) -> Option<String> {
    Some(s.to_string())
}

impl Preset {
    fn defaults(self) -> PresetDefaults {
        match self {
            Preset::OpenaiCompletions => PresetDefaults {
                display_name: "Codex (OpenAI completions)",
                endpoint: "https://api.openai.com/v1/completions",
                model: Some("code-davinci-002"),
                request: RequestMapping {
                    prompt: "prompt".into(),
                    temperature: path("temperature"),
                    max_tokens: path("max_tokens"),
                    stop: path("stop"),
                    model: path("model"),
                    extra: Map::new(),
                },
                response_path: "choices.0.text",
            },
            Preset::HuggingfaceInference => PresetDefaults {
                display_name: "BLOOM (Hugging Face inference)",
                endpoint: "https://api-inference.huggingface.co/models/bigscience/bloom",
                model: None,
                request: RequestMapping {
                    prompt: "inputs".into(),
                    temperature: path("parameters.temperature"),
                    max_tokens: path("parameters.max_new_tokens"),
                    stop: path("parameters.stop"),
                    model: None,
                    extra: serde_json::json!({
                        "parameters": {"return_full_text": false, "do_sample": true},
                        "options": {"use_cache": false, "wait_for_model": true}
                    })
                    .as_object()
                    .cloned()
                    .unwrap_or_default(),
                },
                response_path: "0.generated_text",
            },
        }
    }
}

/// `SPECLOOP_<ID>_API_KEY`, with non-alphanumerics mapped to `_`.
pub fn default_credential_env(id: &str) -> String {
    let id: String = id.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' }).collect();
    format!("SPECLOOP_{id}_API_KEY")
}

#[derive(Debug, Clone)]
pub struct HttpBackend {
    id: String,
    display_name: String,
    endpoint: String,
    model: Option<String>,
    credential_env: String,
    credential: Option<String>,
    auth_header: String,
    auth_prefix: String,
    request: RequestMapping,
    response_path: String,
    max_retries: u32,
    backoff: Duration,
    agent: ureq::Agent,
}

impl HttpBackend {
    /// Resolves `spec` against its preset and reads the credential from the
    /// environment. A missing credential is reported when a request is made.
    pub fn from_spec(spec: &HttpSpec) -> Result<HttpBackend, BackendError> {
        if spec.id.is_empty() {
            return Err(BackendError::Config("http backend without id".into()));
        }
        let defaults = spec.preset.map(Preset::defaults);
        let endpoint = spec
            .endpoint
            .clone()
            .or_else(|| defaults.as_ref().map(|d| d.endpoint.to_string()))
            .ok_or_else(|| BackendError::Config(format!("backend `{}` has no endpoint", spec.id)))?;
        let request = spec
            .request
            .clone()
            .or_else(|| defaults.as_ref().map(|d| d.request.clone()))
            .ok_or_else(|| BackendError::Config(format!("backend `{}` has no request mapping", spec.id)))?;
        if request.prompt.is_empty() {
            return Err(BackendError::Config(format!("backend `{}` maps the prompt to no field", spec.id)));
        }
        let response_path = spec
            .response_path
            .clone()
            .or_else(|| defaults.as_ref().map(|d| d.response_path.to_string()))
            .ok_or_else(|| BackendError::Config(format!("backend `{}` has no response path", spec.id)))?;
        let credential_env = spec.credential_env.clone().unwrap_or_else(|| default_credential_env(&spec.id));
        let timeout = Duration::from_secs(spec.timeout_secs.unwrap_or(60));
        let config = ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build();
        Ok(HttpBackend {
            id: spec.id.clone(),
            display_name: spec
                .display_name
                .clone()
                .or_else(|| defaults.as_ref().map(|d| d.display_name.to_string()))
                .unwrap_or_else(|| spec.id.clone()),
            endpoint,
            model: spec.model.clone().or_else(|| defaults.as_ref().and_then(|d| d.model.map(String::from))),
            credential: std::env::var(&credential_env).ok().filter(|v| !v.is_empty()),
            credential_env,
            auth_header: spec.auth_header.clone().unwrap_or_else(|| "Authorization".into()),
            auth_prefix: spec.auth_prefix.clone().unwrap_or_else(|| "Bearer ".into()),
            request,
            response_path,
            max_retries: spec.max_retries.unwrap_or(3),
            backoff: Duration::from_millis(spec.backoff_ms.unwrap_or(500)),
            agent: ureq::Agent::new_with_config(config),
        })
    }

    /// Overrides the credential read from the environment.
    pub fn with_credential(mut self, credential: Option<String>) -> HttpBackend {
        self.credential = credential;
        self
    }

    pub fn display_name(&self) -> &str {
        &self.display_name
    }

    pub fn credential_env(&self) -> &str {
        &self.credential_env
    }

    pub fn has_credential(&self) -> bool {
        self.credential.is_some()
    }

    /// The JSON body sent for one run.
    pub fn request_body(&self, request: &CompletionRequest) -> Value {
        let m = &self.request;
        let mut body = Value::Object(m.extra.clone());
        set_path(&mut body, &m.prompt, Value::from(request.prompt.as_str()));
        if let Some(p) = &m.temperature {
            set_path(&mut body, p, Value::from(request.temperature));
        }
        if let Some(p) = &m.max_tokens {
            set_path(&mut body, p, Value::from(request.max_tokens));
        }
        if let Some(p) = &m.stop {
            set_path(&mut body, p, Value::from(vec![request.stop_token.as_str()]));
        }
        if let (Some(p), Some(model)) = (&m.model, &self.model) {
            set_path(&mut body, p, Value::from(model.as_str()));
        }
        body
    }

    fn send_once(&self, credential: &str, body: &Value) -> Result<String, BackendError> {
        let result = self
            .agent
            .post(&self.endpoint)
            .header(self.auth_header.as_str(), format!("{}{credential}", self.auth_prefix))
            .send_json(body);
        let mut response = match result {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(BackendError::Timeout),
            Err(e) => return Err(BackendError::Network(e.to_string())),
        };
        let status = response.status().as_u16();
        let retry_after = response
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(ureq::Error::Timeout(_)) => return Err(BackendError::Timeout),
            Err(e) => return Err(BackendError::Network(e.to_string())),
        };
        match status {
            200..=299 => {}
            401 | 403 => return Err(BackendError::Auth { status }),
            429 => return Err(BackendError::RateLimited { retry_after }),
            _ => return Err(BackendError::Provider { status, body: abbreviate(&text) }),
        }
        let json: Value =
            serde_json::from_str(&text).map_err(|e| BackendError::BadResponse(format!("body is not JSON: {e}")))?;
        let completion = lookup(&json, &self.response_path).and_then(Value::as_str).ok_or_else(|| {
            BackendError::BadResponse(format!("no string at `{}` in {}", self.response_path, abbreviate(&text)))
        })?;
        Ok(completion.to_string())
    }

    fn sample(&self, credential: &str, body: &Value) -> Result<String, BackendError> {
        let mut attempt = 0;
        loop {
            match self.send_once(credential, body) {
                Err(e) if e.is_retryable() && attempt < self.max_retries => {
                    let delay = self.backoff * 2u32.saturating_pow(attempt);
                    log::warn!("backend {}: {e}; retrying in {delay:?}", self.id);
                    thread::sleep(delay);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

impl CompletionBackend for HttpBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionBatch, BackendError> {
        request.validate()?;
        let credential = self.credential.as_deref().ok_or_else(|| BackendError::MissingCredential {
            backend: self.id.clone(),
            env: self.credential_env.clone(),
        })?;
        let body = self.request_body(request);
        let results: Vec<Result<String, BackendError>> = thread::scope(|scope| {
            let handles: Vec<_> = (0..request.runs).map(|_| scope.spawn(|| self.sample(credential, &body))).collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(BackendError::Network("worker panicked".into()))))
                .collect()
        });
        let completions = results
            .into_iter()
            .map(|r| r.map(|text| truncate_at_stop(&text, &request.stop_token)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CompletionBatch { completions, backend_id: self.id.clone() })
    }
}

fn abbreviate(text: &str) -> String {
    const LIMIT: usize = 200;
    match text.char_indices().nth(LIMIT) {
        Some((at, _)) => format!("{}...", &text[..at]),
        None => text.to_string(),
    }
}

fn set_path(root: &mut Value, path: &str, value: Value) {
    let mut node = root;
    let mut keys = path.split('.').peekable();
    while let Some(key) = keys.next() {
        if !node.is_object() {
            *node = Value::Object(Map::new());
        }
        let map = node.as_object_mut().expect("just made an object");
        if keys.peek().is_none() {
            map.insert(key.to_string(), value);
            return;
        }
        node = map.entry(key.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
}

fn lookup<'a>(root: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').filter(|k| !k.is_empty()).try_fold(root, |node, key| match node {
        Value::Array(items) => key.parse::<usize>().ok().and_then(|i| items.get(i)),
        Value::Object(map) => map.get(key),
        _ => None,
    })
}
