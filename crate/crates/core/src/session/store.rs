//! On-disk session storage.
//!
//! Each session owns two files under `<data_dir>/sessions/`: `<id>.json`,
//! the current snapshot (replaced atomically), and `<id>.events.jsonl`, an
//! append-only log with one line per applied operation.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{DocumentError, Session, Stage};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("session store I/O error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("stored session {id}: {source}")]
    Document { id: String, source: DocumentError },
    #[error("`{0}` is not a valid session id")]
    InvalidId(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub at: DateTime<Utc>,
    pub op: String,
    pub stage: Stage,
    pub rounds: usize,
}

#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn check_id(id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidId(id.to_string()))
    }
}

impl SessionStore {
    pub fn open(data_dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = data_dir.as_ref().join("sessions");
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn snapshot_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    pub fn events_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.events.jsonl"))
    }

    /// Writes the snapshot and appends one event line for `op`.
    pub fn save(&self, session: &Session, op: &str) -> Result<(), StoreError> {
        self.write_snapshot(session)?;
        let record = EventRecord {
            at: Utc::now(),
            op: op.to_string(),
            stage: session.stage,
            rounds: session.rounds.len(),
        };
        let path = self.events_path(&session.id);
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        let mut line = serde_json::to_string(&record).expect("event record serializes");
        line.push('\n');
        file.write_all(line.as_bytes()).map_err(io_err(&path))
    }

    pub fn write_snapshot(&self, session: &Session) -> Result<(), StoreError> {
        check_id(&session.id)?;
        let path = self.snapshot_path(&session.id);
        let tmp = self.dir.join(format!(".{}.json.tmp", session.id));
        fs::write(&tmp, session.export()).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }

    pub fn load(&self, id: &str) -> Result<Option<Session>, StoreError> {
        check_id(id)?;
        let path = self.snapshot_path(id);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(io_err(&path)(e)),
        };
        Session::import(&text)
            .map(Some)
            .map_err(|source| StoreError::Document {
                id: id.to_string(),
                source,
            })
    }

    /// Every stored session, ordered by id.
    pub fn load_all(&self) -> Result<Vec<Session>, StoreError> {
        let mut ids: Vec<String> = fs::read_dir(&self.dir)
            .map_err(io_err(&self.dir))?
            .filter_map(Result::ok)
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                let id = name.strip_suffix(".json")?;
                (!id.starts_with('.')).then(|| id.to_string())
            })
            .collect();
        ids.sort();
        let mut sessions = Vec::with_capacity(ids.len());
        for id in ids {
            if let Some(s) = self.load(&id)? {
                sessions.push(s);
            }
        }
        Ok(sessions)
    }

    pub fn events(&self, id: &str) -> Result<Vec<EventRecord>, StoreError> {
        check_id(id)?;
        let path = self.events_path(id);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&path)(e)),
        };
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                serde_json::from_str(l).map_err(|e| StoreError::Document {
                    id: id.to_string(),
                    source: DocumentError::Parse(e.to_string()),
                })
            })
            .collect()
    }
}
