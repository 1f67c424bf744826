use std::collections::HashMap;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::llm::{GenerationSession, ProviderKind};
use crate::powl::{validate, ModelJson};

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderChoice {
    pub provider: ProviderKind,
    pub model_name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VersionOrigin {
    Generate,
    Feedback,
    Optimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Version {
    /// 1-based.
    pub version: u32,
    pub origin: VersionOrigin,
    pub created_at: u64,
    pub model: ModelJson,
    /// Attempts the producing round took.
    pub iterations: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionRecord {
    pub id: String,
    pub provider: ProviderChoice,
    pub created_at: u64,
    pub updated_at: u64,
    pub session: GenerationSession,
    pub versions: Vec<Version>,
}

impl SessionRecord {
    pub fn version(&self, n: Option<u32>) -> Option<&Version> {
        match n {
            None => self.versions.last(),
            Some(n) => self.versions.iter().find(|v| v.version == n),
        }
    }

    pub fn push_version(&mut self, origin: VersionOrigin, iterations: u32, feedback: Option<String>) {
        let Some(model) = &self.session.model else { return };
        let now = now_ms();
        self.versions.push(Version {
            version: self.versions.len() as u32 + 1,
            origin,
            created_at: now,
            model: ModelJson::from_node(model),
            iterations,
            feedback,
        });
        self.updated_at = now;
    }
}

/// One JSON file per session. Writes go to a temporary file that is then
/// renamed over the old one.
pub struct SessionStore {
    dir: PathBuf,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

/// Session ids are generated UUIDs; anything else is never a valid file name.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_hexdigit() || c == '-')
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("session not found")]
    NotFound,
    #[error("session file {0} is corrupt: {1}")]
    Corrupt(PathBuf, String),
    #[error("session storage: {0}")]
    Io(#[from] io::Error),
}

impl SessionStore {
    pub fn open(dir: &Path) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(SessionStore { dir: dir.to_path_buf(), locks: Mutex::default() })
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    /// Lock serializing operations on one session.
    pub fn lock(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.locks.lock().expect("lock table poisoned").entry(id.to_string()).or_default().clone()
    }

    pub fn load(&self, id: &str) -> Result<SessionRecord, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::NotFound);
        }
        let path = self.path(id);
        let doc = match std::fs::read_to_string(&path) {
            Ok(d) => d,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::NotFound),
            Err(e) => return Err(e.into()),
        };
        let rec: SessionRecord =
            serde_json::from_str(&doc).map_err(|e| StoreError::Corrupt(path.clone(), e.to_string()))?;
        for v in &rec.versions {
            let node = v.model.to_node().map_err(|e| StoreError::Corrupt(path.clone(), e.to_string()))?;
            if !validate(&node).is_valid() {
                return Err(StoreError::Corrupt(path, format!("version {} is not a valid model", v.version)));
            }
        }
        Ok(rec)
    }

    pub fn save(&self, rec: &SessionRecord) -> Result<(), StoreError> {
        let path = self.path(&rec.id);
        let tmp = self.dir.join(format!(".{}.json.tmp", rec.id));
        let doc = serde_json::to_vec_pretty(rec).map_err(io::Error::other)?;
        {
            use std::io::Write;
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&doc)?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }
}
