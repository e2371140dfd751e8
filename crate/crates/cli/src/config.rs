//! Service configuration, read from TOML.
//!
//! ```toml
//! port = 8080
//! session_dir = "sessions"
//! template_dir = "prompts"
//!
//! [[backends]]
//! type = "http"
//! id = "codex"
//! preset = "openai-completions"
//! ```
//!
//! Relative paths resolve against the directory holding the file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use specloop_core::backend::{BackendRegistry, BackendSpec};
use specloop_core::prompt::TemplateStore;
use specloop_core::session::{SessionManager, SessionStore, Workbench};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("template directory {0} does not exist")]
    MissingTemplateDir(PathBuf),
    #[error("static directory {0} does not exist")]
    MissingStaticDir(PathBuf),
    #[error("templates: {0}")]
    Templates(String),
    #[error("backends: {0}")]
    Backends(String),
    #[error("session store: {0}")]
    Store(String),
    #[error("shared secret variable ${0} is unset or empty")]
    MissingSecret(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub bind: String,
    pub port: u16,
    /// Extra templates; files here override built-ins of the same id.
    pub template_dir: Option<PathBuf>,
    /// Where sessions are persisted; in memory when unset.
    pub session_dir: Option<PathBuf>,
    /// Static files served for non-API paths (the built web UI).
    pub static_dir: Option<PathBuf>,
    /// Environment variable holding a token every API call must present in
    /// the `x-specloop-token` header.
    pub shared_secret_env: Option<String>,
    pub backends: Vec<BackendSpec>,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Config {
        Config {
            bind: "127.0.0.1".into(),
            port: 8080,
            template_dir: None,
            session_dir: None,
            static_dir: None,
            shared_secret_env: None,
            backends: Vec::new(),
            base_dir: None,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> Result<Config, ConfigError> {
        let mut config: Config = toml::from_str(text)
            .map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        config.base_dir = path.parent().map(Path::to_path_buf);
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Config::from_toml(&text, path)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if path.is_relative() => base.join(path),
            _ => path.to_path_buf(),
        }
    }

    pub fn templates(&self) -> Result<TemplateStore, ConfigError> {
        let mut store = TemplateStore::builtin();
        if let Some(dir) = &self.template_dir {
            let dir = self.resolve(dir);
            if !dir.is_dir() {
                return Err(ConfigError::MissingTemplateDir(dir));
            }
            let extra = TemplateStore::load_dir(&dir).map_err(|e| ConfigError::Templates(e.to_string()))?;
            for t in extra.iter() {
                store.insert(t.clone());
            }
        }
        Ok(store)
    }

    pub fn backends(&self) -> Result<BackendRegistry, ConfigError> {
        BackendRegistry::from_specs(&self.backends, self.base_dir.as_deref())
            .map_err(|e| ConfigError::Backends(e.to_string()))
    }

    pub fn workbench(&self) -> Result<Workbench, ConfigError> {
        Ok(Workbench::new(self.templates()?, self.backends()?))
    }

    pub fn store(&self) -> Result<SessionStore, ConfigError> {
        match &self.session_dir {
            Some(dir) => SessionStore::directory(self.resolve(dir)).map_err(|e| ConfigError::Store(e.to_string())),
            None => Ok(SessionStore::Memory),
        }
    }

    pub fn shared_secret(&self) -> Result<Option<String>, ConfigError> {
        match &self.shared_secret_env {
            None => Ok(None),
            Some(var) => match std::env::var(var) {
                Ok(v) if !v.is_empty() => Ok(Some(v)),
                _ => Err(ConfigError::MissingSecret(var.clone())),
            },
        }
    }

    pub fn manager(&self) -> Result<SessionManager, ConfigError> {
        Ok(SessionManager::new(Arc::new(self.workbench()?), self.store()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = Config::from_toml("", Path::new("x.toml")).unwrap();
        assert_eq!((c.bind.as_str(), c.port), ("127.0.0.1", 8080));
        assert_eq!(c.backends().unwrap().descriptors().len(), 1);
    }

    #[test]
    fn backend_registry_section() {
        let text = r#"
            port = 9000
            [[backends]]
            type = "http"
            id = "bloom"
            preset = "huggingface-inference"
        "#;
        let c = Config::from_toml(text, Path::new("/etc/specloop/config.toml")).unwrap();
        assert_eq!(c.port, 9000);
        let ids: Vec<_> = c.backends().unwrap().descriptors().into_iter().map(|d| d.id).collect();
        assert_eq!(ids, vec!["mock", "bloom"]);
    }

    #[test]
    fn rejects_unknown_backend_type_and_keys() {
        let err = Config::from_toml("[[backends]]\ntype = \"llama\"\nid = \"x\"\n", Path::new("c.toml")).unwrap_err();
        assert!(err.to_string().contains("llama"), "{err}");
        assert!(Config::from_toml("prot = 1", Path::new("c.toml")).is_err());
    }

    #[test]
    fn missing_template_dir() {
        let c = Config::from_toml("template_dir = \"nowhere\"", Path::new("/tmp/none/c.toml")).unwrap();
        assert!(matches!(c.templates(), Err(ConfigError::MissingTemplateDir(_))));
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let c = Config::from_toml("session_dir = \"s\"", Path::new("/srv/app/c.toml")).unwrap();
        assert_eq!(c.resolve(c.session_dir.as_deref().unwrap()), PathBuf::from("/srv/app/s"));
    }

    #[test]
    fn example_config_loads() {
        let c =
            Config::from_toml(include_str!("../../../config/specloop.toml"), Path::new("/srv/config/specloop.toml"))
                .unwrap();
        let ids: Vec<_> = c.backends().unwrap().descriptors().into_iter().map(|d| d.id).collect();
        assert_eq!(ids, vec!["mock", "codex", "bloom", "local", "slow-mock"]);
        assert_eq!(c.resolve(c.session_dir.as_deref().unwrap()), PathBuf::from("/srv/config/../sessions"));
    }
}
