//! Animation sessions shared by concurrent clients, and the JSON shapes
//! exchanged with them.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use parking_lot::Mutex;
use serde::Serialize;

use crate::animator::{ChooseError, Menu, Session, DEFAULT_TAU_BUDGET};
use crate::event::Event;
use crate::itree::ITree;
use crate::model::{Model, ModelError};
use crate::semantics::compile;

pub const DEFAULT_IDLE: Duration = Duration::from_secs(30 * 60);

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ServiceError {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown or expired session `{0}`")]
    UnknownSession(String),
    #[error("choice {index} is out of range 1-{size}")]
    InvalidIndex { index: usize, size: usize },
    #[error("the session has {0}")]
    Finished(&'static str),
}

impl ServiceError {
    /// HTTP status for this error.
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::UnknownModel(_) | ServiceError::UnknownSession(_) => 404,
            ServiceError::InvalidConfig(_) | ServiceError::InvalidIndex { .. } => 400,
            ServiceError::Finished(_) => 409,
        }
    }
}

impl From<ChooseError> for ServiceError {
    fn from(e: ChooseError) -> Self {
        match e {
            ChooseError::OutOfRange { index, size } => ServiceError::InvalidIndex { index, size },
            ChooseError::Finished(why) => ServiceError::Finished(why),
            ChooseError::NotEnabled(_) => ServiceError::InvalidIndex { index: 0, size: 0 },
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EventPayload {
    pub index: usize,
    pub channel: String,
    pub payload_text: String,
    pub payload: serde_json::Value,
}

impl EventPayload {
    fn of(index: usize, e: &Event) -> EventPayload {
        EventPayload {
            index,
            channel: e.chan.display_name(),
            payload_text: e.payload.to_string(),
            payload: e.payload.to_json(),
        }
    }
}

/// A menu as sent to clients. `text` is the line the command-line
/// animator prints for the same menu.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct MenuPayload {
    pub kind: &'static str,
    pub events: Vec<EventPayload>,
    pub history_len: usize,
    pub text: String,
}

impl MenuPayload {
    pub fn of(menu: &Menu, history_len: usize) -> MenuPayload {
        MenuPayload {
            kind: menu.kind(),
            events: menu.events().iter().enumerate().map(|(i, e)| EventPayload::of(i + 1, e)).collect(),
            history_len,
            text: menu.render(),
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Created {
    pub id: String,
    pub model: String,
    pub banner: String,
    pub menu: MenuPayload,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ModelInfo {
    pub id: String,
    pub name: String,
    pub banner: String,
}

struct ModelEntry {
    source: String,
    model: Arc<Model>,
    tree: ITree,
}

struct Slot {
    session: Session,
    last_used: Instant,
}

/// Loaded models and live sessions. Calls on one session are serialised by
/// that session's lock; different sessions proceed independently.
pub struct SessionManager {
    models: IndexMap<String, ModelEntry>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Slot>>>>,
    idle: Duration,
    tau_budget: usize,
}

impl SessionManager {
    pub fn new() -> SessionManager {
        SessionManager {
            models: IndexMap::new(),
            sessions: Mutex::new(HashMap::new()),
            idle: DEFAULT_IDLE,
            tau_budget: DEFAULT_TAU_BUDGET,
        }
    }

    pub fn with_idle(mut self, idle: Duration) -> SessionManager {
        self.idle = idle;
        self
    }

    pub fn with_tau_budget(mut self, budget: usize) -> SessionManager {
        self.tau_budget = budget;
        self
    }

    /// Registers a model from its JSON text under `id`.
    pub fn add_model(&mut self, id: &str, source: &str) -> Result<(), ModelError> {
        let model = Arc::new(Model::from_json_str(source, &[])?);
        let tree = compile(&model);
        self.models.insert(id.to_string(), ModelEntry { source: source.to_string(), model, tree });
        Ok(())
    }

    /// Registers every `*.json` file in `dir`, named by file stem.
    pub fn add_dir(&mut self, dir: &Path) -> Result<usize, ModelError> {
        let io = |e: std::io::Error| ModelError { path: dir.display().to_string(), message: e.to_string() };
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for p in &paths {
            let text = std::fs::read_to_string(p).map_err(io)?;
            let id = p.file_stem().expect("file").to_string_lossy().to_string();
            self.add_model(&id, &text).map_err(|e| ModelError { path: format!("{}: {}", p.display(), e.path), ..e })?;
        }
        Ok(paths.len())
    }

    pub fn models(&self) -> Vec<ModelInfo> {
        self.models
            .iter()
            .map(|(id, m)| ModelInfo { id: id.clone(), name: m.model.name.clone(), banner: m.model.banner.clone() })
            .collect()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().len()
    }

    /// Starts a session on `model_id`, recompiling when `overrides`
    /// (`key=value`) change the instantiation.
    pub fn create(&self, model_id: &str, overrides: &[String]) -> Result<Created, ServiceError> {
        self.expire_idle();
        let entry = self.models.get(model_id).ok_or_else(|| ServiceError::UnknownModel(model_id.to_string()))?;
        let (tree, banner) = if overrides.is_empty() {
            (entry.tree.clone(), entry.model.banner.clone())
        } else {
            let m = Model::from_json_str(&entry.source, overrides).map_err(|e| ServiceError::InvalidConfig(e.to_string()))?;
            (compile(&m), m.banner.clone())
        };
        let session = Session::start(tree, self.tau_budget);
        let menu = MenuPayload::of(session.menu(), 0);
        let id = uuid::Uuid::new_v4().simple().to_string();
        self.sessions.lock().insert(id.clone(), Arc::new(Mutex::new(Slot { session, last_used: Instant::now() })));
        Ok(Created { id, model: model_id.to_string(), banner, menu })
    }

    fn slot(&self, id: &str) -> Result<Arc<Mutex<Slot>>, ServiceError> {
        self.expire_idle();
        self.sessions.lock().get(id).cloned().ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    fn with<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<T, ServiceError>) -> Result<T, ServiceError> {
        let slot = self.slot(id)?;
        let mut guard = slot.lock();
        guard.last_used = Instant::now();
        f(&mut guard.session)
    }

    /// Chooses the `index`-th event (from 1). A failed choice leaves the
    /// session unchanged.
    pub fn choose(&self, id: &str, index: usize) -> Result<MenuPayload, ServiceError> {
        self.with(id, |s| {
            s.choose(index)?;
            Ok(MenuPayload::of(s.menu(), s.history().len()))
        })
    }

    pub fn menu(&self, id: &str) -> Result<MenuPayload, ServiceError> {
        self.with(id, |s| Ok(MenuPayload::of(s.menu(), s.history().len())))
    }

    pub fn history(&self, id: &str) -> Result<Vec<EventPayload>, ServiceError> {
        self.with(id, |s| Ok(s.history().iter().enumerate().map(|(i, e)| EventPayload::of(i + 1, e)).collect()))
    }

    pub fn reset(&self, id: &str) -> Result<MenuPayload, ServiceError> {
        self.with(id, |s| Ok(MenuPayload::of(s.reset(), 0)))
    }

    /// Drops sessions idle for longer than the timeout; returns how many.
    pub fn expire_idle(&self) -> usize {
        let now = Instant::now();
        let mut sessions = self.sessions.lock();
        let before = sessions.len();
        sessions.retain(|_, slot| match slot.try_lock() {
            Some(s) => now.duration_since(s.last_used) <= self.idle,
            // In use right now, so not idle.
            None => true,
        });
        before - sessions.len()
    }
}

impl Default for SessionManager {
    fn default() -> Self {
        SessionManager::new()
    }
}
