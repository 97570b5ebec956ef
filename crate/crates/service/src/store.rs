//! Append-only record log with a periodically rewritten snapshot.
//!
//! The log is `log.ndjson`: one `{"seq": n, "record": {...}}` object per line.
//! A record is acknowledged only after its line, newline included, has been
//! written and synced. On open, an unterminated or unparsable final line is a
//! write cut short by a crash; it is dropped and the file truncated back to the
//! last complete record. Damage anywhere else is an error.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::{Outcome, Record, State, StateError};

pub const LOG_FILE: &str = "log.ndjson";
pub const SNAPSHOT_FILE: &str = "snapshot.json";
pub const DEFAULT_SNAPSHOT_EVERY: u64 = 1000;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt log at line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("corrupt snapshot: {0}")]
    Snapshot(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct LogLine<R> {
    seq: u64,
    record: R,
}

#[derive(Debug, Serialize, Deserialize)]
struct Snapshot {
    seq: u64,
    state: State,
}

struct Disk {
    dir: PathBuf,
    log: File,
    snapshot_every: u64,
    since_snapshot: u64,
}

pub struct Store {
    state: State,
    disk: Option<Disk>,
}

/// What `open` found on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Recovery {
    pub snapshot_seq: u64,
    pub replayed: usize,
    /// Bytes of a torn final line that were discarded.
    pub discarded_bytes: u64,
}

impl Store {
    pub fn in_memory() -> Self {
        Store { state: State::default(), disk: None }
    }

    pub fn open(dir: impl AsRef<Path>, snapshot_every: u64) -> Result<(Self, Recovery), StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let mut recovery = Recovery::default();

        let snap_path = dir.join(SNAPSHOT_FILE);
        let mut state = match fs::read(&snap_path) {
            Ok(bytes) => {
                let snap: Snapshot = serde_json::from_slice(&bytes).map_err(|e| StoreError::Snapshot(e.to_string()))?;
                if snap.state.seq != snap.seq {
                    return Err(StoreError::Snapshot("sequence mismatch".into()));
                }
                recovery.snapshot_seq = snap.seq;
                snap.state
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => State::default(),
            Err(e) => return Err(e.into()),
        };

        let log_path = dir.join(LOG_FILE);
        let bytes = match fs::read(&log_path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let (good_len, replayed) = replay_into(&mut state, &bytes)?;
        recovery.replayed = replayed;
        recovery.discarded_bytes = (bytes.len() - good_len) as u64;

        let log = OpenOptions::new().create(true).append(true).open(&log_path)?;
        if recovery.discarded_bytes > 0 {
            log.set_len(good_len as u64)?;
            log.sync_data()?;
        }
        let store = Store {
            state,
            disk: Some(Disk { dir, log, snapshot_every: snapshot_every.max(1), since_snapshot: replayed as u64 }),
        };
        Ok((store, recovery))
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn dir(&self) -> Option<&Path> {
        self.disk.as_ref().map(|d| d.dir.as_path())
    }

    /// Validates, persists, then applies. A rejected record leaves both the
    /// log and the state untouched.
    pub fn append(&mut self, record: Record) -> Result<Outcome, StoreError> {
        let change = self.state.prepare(&record)?;
        let seq = self.state.seq + 1;
        if let Some(disk) = &mut self.disk {
            let mut line = serde_json::to_vec(&LogLine { seq, record: &record }).expect("records serialize");
            line.push(b'\n');
            disk.log.write_all(&line)?;
            disk.log.sync_data()?;
            disk.since_snapshot += 1;
        }
        let outcome = self.state.commit(change);
        if self.disk.as_ref().is_some_and(|d| d.since_snapshot >= d.snapshot_every) {
            self.snapshot()?;
        }
        Ok(outcome)
    }

    /// Rewrites the snapshot from the current state.
    pub fn snapshot(&mut self) -> Result<(), StoreError> {
        let Some(disk) = &mut self.disk else { return Ok(()) };
        let tmp = disk.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        {
            let mut f = File::create(&tmp)?;
            serde_json::to_writer(&mut f, &Snapshot { seq: self.state.seq, state: self.state.clone() })
                .map_err(io::Error::other)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, disk.dir.join(SNAPSHOT_FILE))?;
        disk.since_snapshot = 0;
        Ok(())
    }
}

/// Applies every complete record after the state's sequence number. Returns
/// the byte length of the intact prefix and the number of records applied.
fn replay_into(state: &mut State, bytes: &[u8]) -> Result<(usize, usize), StoreError> {
    let mut offset = 0;
    let mut applied = 0;
    let mut line_no = 0;
    while offset < bytes.len() {
        line_no += 1;
        let Some(nl) = bytes[offset..].iter().position(|b| *b == b'\n') else {
            // unterminated tail: a write cut short
            break;
        };
        let end = offset + nl;
        let text = &bytes[offset..end];
        let is_last = end + 1 == bytes.len();
        let parsed: Result<LogLine<Record>, _> = serde_json::from_slice(text);
        let line = match parsed {
            Ok(l) => l,
            Err(_) if is_last => break,
            Err(e) => return Err(StoreError::Corrupt { line: line_no, message: e.to_string() }),
        };
        if line.seq <= state.seq {
            offset = end + 1;
            continue;
        }
        if line.seq != state.seq + 1 {
            return Err(StoreError::Corrupt {
                line: line_no,
                message: format!("expected seq {}, found {}", state.seq + 1, line.seq),
            });
        }
        state
            .apply(&line.record)
            .map_err(|e| StoreError::Corrupt { line: line_no, message: format!("record rejected on replay: {e}") })?;
        applied += 1;
        offset = end + 1;
    }
    Ok((offset, applied))
}

/// Rebuilds state from raw log bytes, as recovery would.
pub fn replay(bytes: &[u8]) -> Result<State, StoreError> {
    let mut state = State::default();
    replay_into(&mut state, bytes)?;
    Ok(state)
}
