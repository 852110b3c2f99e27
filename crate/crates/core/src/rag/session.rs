use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::{Mutex, RwLock};

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;
use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};

use super::ChatSession;
use crate::corpus::write_atomic;

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("session {0} not found")]
    NotFound(String),
    #[error("session store unavailable: {0}")]
    StoreUnavailable(String),
    #[error("session {id} would shrink from {stored} to {new} turns")]
    Shrink { id: String, stored: usize, new: usize },
}

/// Key-value persistence of chat sessions.
pub trait SessionStore: Send + Sync {
    fn load(&self, session_id: &str) -> Result<ChatSession, SessionError>;
    /// Rejects a write that would drop persisted turns.
    fn save(&self, session: &ChatSession) -> Result<(), SessionError>;
    fn exists(&self, session_id: &str) -> Result<bool, SessionError>;
}

/// Deflate-compressed JSON.
pub fn encode_session(session: &ChatSession) -> Result<Vec<u8>, SessionError> {
    let json = serde_json::to_vec(session).map_err(|e| SessionError::StoreUnavailable(e.to_string()))?;
    let mut enc = DeflateEncoder::new(Vec::new(), Compression::default());
    enc.write_all(&json).and_then(|_| enc.finish()).map_err(|e| SessionError::StoreUnavailable(e.to_string()))
}

pub fn decode_session(bytes: &[u8]) -> Result<ChatSession, SessionError> {
    let mut json = Vec::new();
    DeflateDecoder::new(bytes).read_to_end(&mut json).map_err(|e| SessionError::StoreUnavailable(format!("inflate: {e}")))?;
    serde_json::from_slice(&json).map_err(|e| SessionError::StoreUnavailable(format!("decode: {e}")))
}

/// One `<id>.json.deflate` file per session under a directory.
pub struct FileSessionStore {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl FileSessionStore {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, SessionError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| SessionError::StoreUnavailable(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir, write_lock: Mutex::new(()) })
    }

    pub fn path(&self, session_id: &str) -> PathBuf {
        self.dir.join(format!("{}.json.deflate", utf8_percent_encode(session_id, NON_ALPHANUMERIC)))
    }
}

impl SessionStore for FileSessionStore {
    fn load(&self, session_id: &str) -> Result<ChatSession, SessionError> {
        match std::fs::read(self.path(session_id)) {
            Ok(bytes) => decode_session(&bytes),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(SessionError::NotFound(session_id.into())),
            Err(e) => Err(SessionError::StoreUnavailable(e.to_string())),
        }
    }

    fn save(&self, session: &ChatSession) -> Result<(), SessionError> {
        let bytes = encode_session(session)?;
        let _guard = self.write_lock.lock().unwrap_or_else(|p| p.into_inner());
        match self.load(&session.session_id) {
            Ok(stored) if stored.turns.len() > session.turns.len() => {
                return Err(SessionError::Shrink {
                    id: session.session_id.clone(),
                    stored: stored.turns.len(),
                    new: session.turns.len(),
                })
            }
            Ok(_) | Err(SessionError::NotFound(_)) => {}
            Err(e) => return Err(e),
        }
        write_atomic(&self.path(&session.session_id), &bytes).map_err(|e| SessionError::StoreUnavailable(e.to_string()))
    }

    fn exists(&self, session_id: &str) -> Result<bool, SessionError> {
        Ok(self.path(session_id).is_file())
    }
}

/// In-process store holding the same compressed payloads.
#[derive(Default)]
pub struct MemorySessionStore {
    sessions: RwLock<HashMap<String, Vec<u8>>>,
}

impl SessionStore for MemorySessionStore {
    fn load(&self, session_id: &str) -> Result<ChatSession, SessionError> {
        let map = self.sessions.read().unwrap_or_else(|p| p.into_inner());
        decode_session(map.get(session_id).ok_or_else(|| SessionError::NotFound(session_id.into()))?)
    }

    fn save(&self, session: &ChatSession) -> Result<(), SessionError> {
        let bytes = encode_session(session)?;
        let mut map = self.sessions.write().unwrap_or_else(|p| p.into_inner());
        if let Some(old) = map.get(&session.session_id) {
            let stored = decode_session(old)?.turns.len();
            if stored > session.turns.len() {
                return Err(SessionError::Shrink { id: session.session_id.clone(), stored, new: session.turns.len() });
            }
        }
        map.insert(session.session_id.clone(), bytes);
        Ok(())
    }

    fn exists(&self, session_id: &str) -> Result<bool, SessionError> {
        Ok(self.sessions.read().unwrap_or_else(|p| p.into_inner()).contains_key(session_id))
    }
}
