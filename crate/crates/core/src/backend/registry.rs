use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{BackendError, CompletionBackend, HttpBackend, HttpSpec, MockBackend};

/// Rules of the built-in `mock` backend.
pub const DEFAULT_MOCK_RULES: &str = include_str!("../../assets/mock/rules.json");

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MockSpec {
    pub id: String,
    #[serde(default)]
    pub display_name: Option<String>,
    /// JSON rule file; the built-in rules when absent.
    #[serde(default)]
    pub rules: Option<PathBuf>,
    #[serde(default)]
    pub latency_ms: Option<u64>,
}

/// One entry of the backend registry in the service configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(clippy::large_enum_variant)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum BackendSpec {
    Mock(MockSpec),
    Http(HttpSpec),
}

impl BackendSpec {
    pub fn id(&self) -> &str {
        match self {
            BackendSpec::Mock(m) => &m.id,
            BackendSpec::Http(h) => &h.id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BackendDescriptor {
    pub id: String,
    pub display_name: String,
    pub kind: String,
    /// Environment variables the backend reads credentials from.
    pub required_credentials: Vec<String>,
    pub credentials_present: bool,
}

#[derive(Clone, Default)]
pub struct BackendRegistry {
    entries: IndexMap<String, (BackendDescriptor, Arc<dyn CompletionBackend>)>,
}

fn default_mock() -> MockBackend {
    MockBackend::from_json("mock", DEFAULT_MOCK_RULES).expect("shipped mock rules are valid")
}

fn mock_descriptor(id: &str, display_name: Option<&str>) -> BackendDescriptor {
    BackendDescriptor {
        id: id.to_string(),
        display_name: display_name.unwrap_or("Scripted mock").to_string(),
        kind: "mock".into(),
        required_credentials: Vec::new(),
        credentials_present: true,
    }
}

impl BackendRegistry {
    /// Only the built-in mock.
    pub fn with_default_mock() -> BackendRegistry {
        let mut registry = BackendRegistry::default();
        registry.insert(mock_descriptor("mock", None), Arc::new(default_mock()));
        registry
    }

    /// Builds every configured backend. The built-in mock is added first
    /// unless an entry claims the id `mock`. Relative rule paths resolve
    /// against `base_dir`.
    pub fn from_specs(specs: &[BackendSpec], base_dir: Option<&Path>) -> Result<BackendRegistry, BackendError> {
        let mut registry = if specs.iter().any(|s| s.id() == "mock") {
            BackendRegistry::default()
        } else {
            BackendRegistry::with_default_mock()
        };
        for spec in specs {
            if registry.entries.contains_key(spec.id()) {
                return Err(BackendError::Config(format!("duplicate backend id `{}`", spec.id())));
            }
            match spec {
                BackendSpec::Mock(m) => {
                    let mut backend = match &m.rules {
                        Some(path) => {
                            let path = match base_dir {
                                Some(base) if path.is_relative() => base.join(path),
                                _ => path.clone(),
                            };
                            let text = std::fs::read_to_string(&path)
                                .map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))?;
                            MockBackend::from_json(m.id.clone(), &text)?
                        }
                        None => MockBackend::new(m.id.clone(), default_mock().rules().to_vec())?,
                    };
                    if let Some(ms) = m.latency_ms {
                        backend = backend.with_latency(Duration::from_millis(ms));
                    }
                    registry.insert(mock_descriptor(&m.id, m.display_name.as_deref()), Arc::new(backend));
                }
                BackendSpec::Http(h) => {
                    let backend = HttpBackend::from_spec(h)?;
                    let descriptor = BackendDescriptor {
                        id: h.id.clone(),
                        display_name: backend.display_name().to_string(),
                        kind: "http".into(),
                        required_credentials: vec![backend.credential_env().to_string()],
                        credentials_present: backend.has_credential(),
                    };
                    registry.insert(descriptor, Arc::new(backend));
                }
            }
        }
        Ok(registry)
    }

    pub fn insert(&mut self, descriptor: BackendDescriptor, backend: Arc<dyn CompletionBackend>) {
        self.entries.insert(descriptor.id.clone(), (descriptor, backend));
    }

    pub fn get(&self, id: &str) -> Result<Arc<dyn CompletionBackend>, BackendError> {
        self.entries.get(id).map(|(_, b)| Arc::clone(b)).ok_or_else(|| BackendError::UnknownBackend(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn descriptors(&self) -> Vec<BackendDescriptor> {
        self.entries.values().map(|(d, _)| d.clone()).collect()
    }
}

impl std::fmt::Debug for BackendRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}
