//! Sessions in memory, each backed by an append-only JSON-lines log
//! `<data_dir>/<id>.jsonl`. Every accepted change is written (and synced)
//! before it becomes visible; restarting replays the logs.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::Utc;
use uuid::Uuid;

use crate::error::{Result, SessionError};
use crate::model::{Engine, Event, ProtocolSpec, Session, SessionStatus, TestResult};

const LOG_EXTENSION: &str = "jsonl";

struct Slot {
    /// Write lease; `None` once the session is deleted.
    engine: Mutex<Option<Engine>>,
    /// What readers see; replaced wholesale after each accepted change.
    snapshot: RwLock<Arc<Session>>,
    log: PathBuf,
}

impl Slot {
    fn publish(&self, engine: &Engine) {
        *self.snapshot.write().expect("snapshot lock poisoned") = Arc::new(engine.session().clone());
    }
}

pub struct SessionStore {
    dir: PathBuf,
    sessions: RwLock<HashMap<Uuid, Arc<Slot>>>,
}

impl SessionStore {
    /// Opens (creating if needed) `dir` and resumes every session logged there.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| SessionError::storage(format!("{}: {e}", dir.display())))?;
        let mut sessions = HashMap::new();
        for entry in fs::read_dir(&dir).map_err(SessionError::storage)? {
            let path = entry.map_err(SessionError::storage)?.path();
            if path.extension().and_then(|e| e.to_str()) != Some(LOG_EXTENSION) {
                continue;
            }
            let events = read_log(&path)?;
            let engine = Engine::replay(&events)
                .map_err(|e| SessionError::storage(format!("{}: cannot replay: {e}", path.display())))?;
            if let Some(engine) = engine {
                let id = engine.session().id;
                sessions.insert(id, Arc::new(slot(engine, path)));
            }
        }
        tracing::info!(sessions = sessions.len(), dir = %dir.display(), "session store opened");
        Ok(Self {
            dir,
            sessions: RwLock::new(sessions),
        })
    }

    pub fn data_dir(&self) -> &Path {
        &self.dir
    }

    pub fn create(&self, protocol: ProtocolSpec) -> Result<Arc<Session>> {
        let id = Uuid::new_v4();
        let at = Utc::now();
        let engine = Engine::create(id, protocol, at)?;
        let path = self.dir.join(format!("{id}.{LOG_EXTENSION}"));
        append(&path, &Event::Created { id, protocol, at })?;
        let slot = Arc::new(slot(engine, path));
        let snapshot = self.snapshot_of(&slot);
        self.sessions.write().expect("session map poisoned").insert(id, slot);
        tracing::info!(%id, "session created");
        Ok(snapshot)
    }

    pub fn get(&self, id: Uuid) -> Result<Arc<Session>> {
        let slot = self.slot(id)?;
        Ok(self.snapshot_of(&slot))
    }

    /// All sessions, oldest first, optionally restricted to one status.
    pub fn list(&self, status: Option<SessionStatus>) -> Vec<Arc<Session>> {
        let slots: Vec<Arc<Slot>> = self
            .sessions
            .read()
            .expect("session map poisoned")
            .values()
            .cloned()
            .collect();
        let mut out: Vec<Arc<Session>> = slots
            .iter()
            .map(|s| self.snapshot_of(s))
            .filter(|s| status.map_or(true, |st| s.status == st))
            .collect();
        out.sort_by(|a, b| a.created_at.cmp(&b.created_at).then(a.id.cmp(&b.id)));
        out
    }

    /// Applies one full stage of results. Submissions to the same session are
    /// serialized; a submission for a stage that has already been answered
    /// fails with [`SessionError::StaleTestId`].
    pub fn submit(&self, id: Uuid, results: Vec<TestResult>) -> Result<Arc<Session>> {
        let slot = self.slot(id)?;
        let mut lease = slot.engine.lock().expect("session lock poisoned");
        let engine = lease.as_ref().ok_or(SessionError::NotFound(id))?;
        let at = Utc::now();
        let advanced = engine.submit(&results, at)?;
        append(&slot.log, &Event::Submitted { results, at })?;
        slot.publish(&advanced);
        tracing::info!(%id, status = ?advanced.session().status, "results accepted");
        *lease = Some(advanced);
        drop(lease);
        Ok(self.snapshot_of(&slot))
    }

    /// Marks the session deleted in its log and forgets it.
    pub fn delete(&self, id: Uuid) -> Result<()> {
        let slot = self.slot(id)?;
        let mut lease = slot.engine.lock().expect("session lock poisoned");
        if lease.is_none() {
            return Err(SessionError::NotFound(id));
        }
        append(&slot.log, &Event::Deleted { at: Utc::now() })?;
        *lease = None;
        self.sessions.write().expect("session map poisoned").remove(&id);
        tracing::info!(%id, "session deleted");
        Ok(())
    }

    fn slot(&self, id: Uuid) -> Result<Arc<Slot>> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(&id)
            .cloned()
            .ok_or(SessionError::NotFound(id))
    }

    fn snapshot_of(&self, slot: &Slot) -> Arc<Session> {
        Arc::clone(&slot.snapshot.read().expect("snapshot lock poisoned"))
    }
}

fn slot(engine: Engine, log: PathBuf) -> Slot {
    Slot {
        snapshot: RwLock::new(Arc::new(engine.session().clone())),
        engine: Mutex::new(Some(engine)),
        log,
    }
}

fn append(path: &Path, event: &Event) -> Result<()> {
    let mut line = serde_json::to_string(event).map_err(SessionError::storage)?;
    line.push('\n');
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| SessionError::storage(format!("{}: {e}", path.display())))?;
    file.write_all(line.as_bytes())
        .and_then(|()| file.sync_data())
        .map_err(|e| SessionError::storage(format!("{}: {e}", path.display())))
}

/// Reads a log. A torn final line (a crash mid-append) is dropped and
/// truncated away so later appends start on a clean line; corruption anywhere
/// else is an error.
fn read_log(path: &Path) -> Result<Vec<Event>> {
    let io_err = |e: std::io::Error| SessionError::storage(format!("{}: {e}", path.display()));
    let file = File::open(path).map_err(io_err)?;
    let mut reader = BufReader::new(file);
    let mut events = Vec::new();
    let mut good_len = 0u64;
    let mut line = String::new();
    loop {
        line.clear();
        let read = reader.read_line(&mut line).map_err(io_err)?;
        if read == 0 {
            break;
        }
        let complete = line.ends_with('\n');
        match serde_json::from_str::<Event>(line.trim_end()) {
            Ok(event) if complete => {
                events.push(event);
                good_len += read as u64;
            }
            Ok(_) | Err(_) if !complete => {
                tracing::warn!(path = %path.display(), "dropping torn final log line");
                OpenOptions::new()
                    .write(true)
                    .open(path)
                    .and_then(|f| f.set_len(good_len))
                    .map_err(io_err)?;
                break;
            }
            Ok(_) => unreachable!("complete lines are handled above"),
            Err(e) => {
                return Err(SessionError::storage(format!(
                    "{}: corrupt log entry {}: {e}",
                    path.display(),
                    events.len() + 1
                )))
            }
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use poolscreen_core::{StrategySpec, TestOutcome};

    #[test]
    fn torn_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        let session = store
            .create(ProtocolSpec::Identify {
                strategy: StrategySpec::Soms4,
            })
            .unwrap();
        let path = dir.path().join(format!("{}.jsonl", session.id));
        let mut file = OpenOptions::new().append(true).open(&path).unwrap();
        file.write_all(br#"{"event":"submitted","res"#).unwrap();
        drop(file);

        let reopened = SessionStore::open(dir.path()).unwrap();
        assert_eq!(*reopened.get(session.id).unwrap(), *session);
        let done = reopened
            .submit(
                session.id,
                vec![TestResult {
                    test_id: 0,
                    outcome: TestOutcome::Negative,
                }],
            )
            .unwrap();
        assert_eq!(done.status, SessionStatus::Concluded);
        assert_eq!(read_log(&path).unwrap().len(), 2);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("x.jsonl"), "not json\n{}\n").unwrap();
        assert!(matches!(SessionStore::open(dir.path()), Err(SessionError::Storage(_))));
    }
}
