use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use super::{SessionError, SessionState, Settings, Workbench};

/// Where sessions live between requests.
#[derive(Debug, Clone)]
pub enum SessionStore {
    /// One `<id>.json` document per session.
    Directory(PathBuf),
    /// Nothing is written; sessions last as long as the manager.
    Memory,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn storage(path: &Path, e: impl std::fmt::Display) -> SessionError {
    SessionError::Storage(format!("{}: {e}", path.display()))
}

impl SessionStore {
    pub fn directory(dir: impl Into<PathBuf>) -> Result<SessionStore, SessionError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| storage(&dir, e))?;
        Ok(SessionStore::Directory(dir))
    }

    fn path(dir: &Path, id: &str) -> PathBuf {
        dir.join(format!("{id}.json"))
    }

    pub fn load(&self, id: &str) -> Result<Option<SessionState>, SessionError> {
        let SessionStore::Directory(dir) = self else { return Ok(None) };
        if !valid_id(id) {
            return Ok(None);
        }
        let path = SessionStore::path(dir, id);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(storage(&path, e)),
        };
        let state: SessionState = serde_json::from_str(&text).map_err(|e| storage(&path, e))?;
        if state.id != id {
            return Err(storage(&path, format!("holds session `{}`", state.id)));
        }
        Ok(Some(state))
    }

    pub fn save(&self, state: &SessionState) -> Result<(), SessionError> {
        let SessionStore::Directory(dir) = self else { return Ok(()) };
        let path = SessionStore::path(dir, &state.id);
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(state).map_err(|e| storage(&path, e))?;
        fs::write(&tmp, text).map_err(|e| storage(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| storage(&path, e))
    }
}

/// Serializes mutations per session while letting distinct sessions
/// proceed in parallel.
#[derive(Debug)]
pub struct SessionManager {
    bench: Arc<Workbench>,
    store: SessionStore,
    live: Mutex<HashMap<String, Arc<Mutex<SessionState>>>>,
}

impl SessionManager {
    pub fn new(bench: Arc<Workbench>, store: SessionStore) -> SessionManager {
        SessionManager { bench, store, live: Mutex::new(HashMap::new()) }
    }

    pub fn workbench(&self) -> &Workbench {
        &self.bench
    }

    pub fn create(&self, nl: &str, settings: Settings) -> Result<SessionState, SessionError> {
        self.bench.check_settings(&settings)?;
        let state = SessionState::new(nl, settings)?;
        self.store.save(&state)?;
        self.live.lock().expect("session map").insert(state.id.clone(), Arc::new(Mutex::new(state.clone())));
        Ok(state)
    }

    fn slot(&self, id: &str) -> Result<Arc<Mutex<SessionState>>, SessionError> {
        let mut live = self.live.lock().expect("session map");
        if let Some(slot) = live.get(id) {
            return Ok(Arc::clone(slot));
        }
        let state = self.store.load(id)?.ok_or_else(|| SessionError::NotFound(id.to_string()))?;
        let slot = Arc::new(Mutex::new(state));
        live.insert(id.to_string(), Arc::clone(&slot));
        Ok(slot)
    }

    pub fn get(&self, id: &str) -> Result<SessionState, SessionError> {
        let slot = self.slot(id)?;
        let state = slot.lock().expect("session lock").clone();
        Ok(state)
    }

    /// Runs `op` under the session's lock and persists the outcome, which
    /// may include a failure entry even when `op` errs.
    pub fn update<T>(
        &self,
        id: &str,
        op: impl FnOnce(&mut SessionState, &Workbench) -> Result<T, SessionError>,
    ) -> Result<(T, SessionState), SessionError> {
        let slot = self.slot(id)?;
        let mut state = slot.lock().expect("session lock");
        let before = state.history.len();
        let outcome = op(&mut state, &self.bench);
        if state.history.len() != before {
            self.store.save(&state)?;
        }
        outcome.map(|value| (value, state.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::directory(dir.path()).unwrap();
        let manager = SessionManager::new(Arc::new(Workbench::offline()), store.clone());
        let created = manager.create("a holds until b holds or always a holds", Settings::default()).unwrap();
        manager.update(&created.id, |s, bench| s.translate(bench)).unwrap();

        let fresh = SessionManager::new(Arc::new(Workbench::offline()), store);
        let loaded = fresh.get(&created.id).unwrap();
        assert_eq!(loaded, manager.get(&created.id).unwrap());
        loaded.verify_history().unwrap();
    }

    #[test]
    fn unknown_and_hostile_ids() {
        let dir = tempfile::tempdir().unwrap();
        let manager = SessionManager::new(Arc::new(Workbench::offline()), SessionStore::directory(dir.path()).unwrap());
        assert_eq!(manager.get("nope").err(), Some(SessionError::NotFound("nope".into())));
        assert!(matches!(manager.get("../etc/passwd"), Err(SessionError::NotFound(_))));
    }

    #[test]
    fn create_checks_settings() {
        let manager = SessionManager::new(Arc::new(Workbench::offline()), SessionStore::Memory);
        let bad_backend = Settings { backend_id: "nope".into(), ..Settings::default() };
        assert_eq!(manager.create("x", bad_backend).unwrap_err().code(), "unknown_backend");
        let bad_template = Settings { template_id: "nope".into(), ..Settings::default() };
        assert_eq!(manager.create("x", bad_template).unwrap_err().code(), "unknown_template");
    }
}
