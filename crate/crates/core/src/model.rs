//! Text-completion models behind a port, plus a replay cache that makes
//! remote runs reproducible.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::write_atomic;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("remote model failed: {0}")]
    Remote(String),
    #[error("no cached response for key {0}")]
    NotCached(String),
    #[error("replay cache i/o: {0}")]
    Cache(#[from] io::Error),
}

/// Prompt in, completion out.
pub trait ChatModel: Send + Sync {
    fn model(&self) -> &str;
    fn complete(&self, prompt: &str) -> Result<String, ModelError>;
}

impl<M: ChatModel + ?Sized> ChatModel for Box<M> {
    fn model(&self) -> &str {
        (**self).model()
    }

    fn complete(&self, prompt: &str) -> Result<String, ModelError> {
        (**self).complete(prompt)
    }
}

/// Hex SHA-256 of the model name and prompt.
pub fn cache_key(model: &str, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(model.as_bytes());
    h.update([0]);
    h.update(prompt.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CachedResponse {
    pub model: String,
    pub prompt_sha256: String,
    pub response: String,
}

/// Directory of `<key>.json` responses keyed by [`cache_key`].
#[derive(Debug)]
pub struct ReplayCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl ReplayCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into(), write_lock: Mutex::new(()) }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, model: &str, prompt: &str) -> Result<Option<String>, ModelError> {
        let path = self.path(&cache_key(model, prompt));
        match fs::read(&path) {
            Ok(bytes) => {
                let entry: CachedResponse = serde_json::from_slice(&bytes)
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", path.display())))?;
                Ok(Some(entry.response))
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn put(&self, model: &str, prompt: &str, response: &str) -> Result<(), ModelError> {
        let key = cache_key(model, prompt);
        let entry = CachedResponse { model: model.into(), prompt_sha256: key.clone(), response: response.into() };
        let json = serde_json::to_vec_pretty(&entry).map_err(io::Error::other)?;
        let _guard = self.write_lock.lock().unwrap_or_else(|p| p.into_inner());
        fs::create_dir_all(&self.dir)?;
        write_atomic(&self.path(&key), &json).map_err(|e| io::Error::other(e.to_string()))?;
        Ok(())
    }
}

/// Serves responses from a [`ReplayCache`]; on a miss it asks `inner`
/// (when present) and records the answer.
pub struct CachedModel {
    model: String,
    inner: Option<Box<dyn ChatModel>>,
    cache: ReplayCache,
}

impl CachedModel {
    /// Replay only: misses fail with [`ModelError::NotCached`].
    pub fn replay(model: impl Into<String>, cache: ReplayCache) -> Self {
        Self { model: model.into(), inner: None, cache }
    }

    pub fn recording(inner: Box<dyn ChatModel>, cache: ReplayCache) -> Self {
        Self { model: inner.model().to_string(), inner: Some(inner), cache }
    }
}

impl ChatModel for CachedModel {
    fn model(&self) -> &str {
        &self.model
    }

    fn complete(&self, prompt: &str) -> Result<String, ModelError> {
        if let Some(hit) = self.cache.get(&self.model, prompt)? {
            return Ok(hit);
        }
        let inner = self.inner.as_ref().ok_or_else(|| ModelError::NotCached(cache_key(&self.model, prompt)))?;
        let response = inner.complete(prompt)?;
        self.cache.put(&self.model, prompt, &response)?;
        Ok(response)
    }
}
