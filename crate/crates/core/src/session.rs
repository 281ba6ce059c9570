//! Grading sessions as append-only event logs.
//!
//! A [`Session`] is never mutated directly: every change is first expressed
//! as a [`SessionEvent`], made durable, and only then folded into the
//! in-memory state with [`Session::apply`]. Replaying a log therefore
//! reconstructs exactly the state that was acknowledged.
//!
//! On disk a session is `<dir>/<session_id>.jsonl`, one JSON event per line:
//!
//! ```text
//! {"seq":0,"time":"2024-05-01T09:00:00.000000000Z","kind":"started","item_index":null,"verdict":null,"grader_id":"g1","study_id":"…","item_count":640}
//! {"seq":1,"time":"2024-05-01T09:00:02.000000000Z","kind":"viewed","item_index":0,"verdict":null}
//! {"seq":2,"time":"2024-05-01T09:00:09.000000000Z","kind":"verdict","item_index":0,"verdict":"original"}
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const LOG_EXTENSION: &str = "jsonl";

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("item index {index} out of range (study has {item_count} items)")]
    IndexOutOfRange { index: usize, item_count: usize },
    #[error("session is finished")]
    Finished,
    #[error("session is not finished")]
    NotFinished,
    #[error("{} item(s) without a verdict: {missing:?}", missing.len())]
    Incomplete { missing: Vec<usize> },
    #[error("event out of sequence: expected seq {expected}, found {found}")]
    OutOfSequence { expected: u64, found: u64 },
    #[error("malformed event: {0}")]
    MalformedEvent(String),
    #[error("invalid session id `{0}`")]
    InvalidId(String),
    #[error("empty session log")]
    EmptyLog,
    #[error("{path}:{line}: {error}")]
    Decode {
        path: PathBuf,
        line: usize,
        error: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Original,
    Modified,
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(Self::Original),
            "modified" => Ok(Self::Modified),
            other => Err(format!("unknown verdict `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Started,
    Viewed,
    Verdict,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    #[serde(with = "iso_time")]
    pub time: DateTime<Utc>,
    pub kind: EventKind,
    pub item_index: Option<usize>,
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grader_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_count: Option<usize>,
}

mod iso_time {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_rfc3339_opts(SecondsFormat::Nanos, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

impl SessionEvent {
    fn plain(seq: u64, time: DateTime<Utc>, kind: EventKind) -> Self {
        Self {
            seq,
            time,
            kind,
            item_index: None,
            verdict: None,
            grader_id: None,
            study_id: None,
            item_count: None,
        }
    }

    /// The first event of every session.
    pub fn started(grader_id: &str, study_id: &str, item_count: usize, time: DateTime<Utc>) -> Self {
        Self {
            grader_id: Some(grader_id.to_string()),
            study_id: Some(study_id.to_string()),
            item_count: Some(item_count),
            ..Self::plain(0, time, EventKind::Started)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub grader_id: String,
    pub study_id: String,
    pub item_count: usize,
    pub original: usize,
    pub modified: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    session_id: String,
    grader_id: String,
    study_id: String,
    created_at: DateTime<Utc>,
    item_count: usize,
    verdicts: BTreeMap<usize, Verdict>,
    cursor: usize,
    finished_at: Option<DateTime<Utc>>,
    next_seq: u64,
}

impl Session {
    /// State right after a `started` event.
    pub fn from_started(session_id: &str, event: &SessionEvent) -> Result<Self, SessionError> {
        if event.kind != EventKind::Started {
            return Err(SessionError::MalformedEvent("log must begin with `started`".into()));
        }
        if event.seq != 0 {
            return Err(SessionError::OutOfSequence {
                expected: 0,
                found: event.seq,
            });
        }
        let (Some(grader_id), Some(study_id), Some(item_count)) =
            (&event.grader_id, &event.study_id, event.item_count)
        else {
            return Err(SessionError::MalformedEvent(
                "`started` needs grader_id, study_id and item_count".into(),
            ));
        };
        Ok(Self {
            session_id: session_id.to_string(),
            grader_id: grader_id.clone(),
            study_id: study_id.clone(),
            created_at: event.time,
            item_count,
            verdicts: BTreeMap::new(),
            cursor: 0,
            finished_at: None,
            next_seq: 1,
        })
    }

    /// Folds a complete event log.
    pub fn replay<'a>(
        session_id: &str,
        events: impl IntoIterator<Item = &'a SessionEvent>,
    ) -> Result<Self, SessionError> {
        let mut events = events.into_iter();
        let first = events.next().ok_or(SessionError::EmptyLog)?;
        let mut session = Self::from_started(session_id, first)?;
        for e in events {
            session.apply(e)?;
        }
        Ok(session)
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn grader_id(&self) -> &str {
        &self.grader_id
    }

    pub fn study_id(&self) -> &str {
        &self.study_id
    }

    pub fn created_at(&self) -> DateTime<Utc> {
        self.created_at
    }

    pub fn item_count(&self) -> usize {
        self.item_count
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn verdicts(&self) -> &BTreeMap<usize, Verdict> {
        &self.verdicts
    }

    pub fn verdict(&self, index: usize) -> Option<Verdict> {
        self.verdicts.get(&index).copied()
    }

    pub fn is_finished(&self) -> bool {
        self.finished_at.is_some()
    }

    pub fn answered(&self) -> Vec<usize> {
        self.verdicts.keys().copied().collect()
    }

    pub fn missing(&self) -> Vec<usize> {
        (0..self.item_count)
            .filter(|i| !self.verdicts.contains_key(i))
            .collect()
    }

    pub fn summary(&self) -> SessionSummary {
        let original = self
            .verdicts
            .values()
            .filter(|v| **v == Verdict::Original)
            .count();
        SessionSummary {
            session_id: self.session_id.clone(),
            grader_id: self.grader_id.clone(),
            study_id: self.study_id.clone(),
            item_count: self.item_count,
            original,
            modified: self.verdicts.len() - original,
        }
    }

    fn check_open(&self) -> Result<(), SessionError> {
        if self.is_finished() {
            return Err(SessionError::Finished);
        }
        Ok(())
    }

    fn check_index(&self, index: usize) -> Result<(), SessionError> {
        if index >= self.item_count {
            return Err(SessionError::IndexOutOfRange {
                index,
                item_count: self.item_count,
            });
        }
        Ok(())
    }

    pub fn view_event(&self, index: usize, time: DateTime<Utc>) -> Result<SessionEvent, SessionError> {
        self.check_open()?;
        self.check_index(index)?;
        Ok(SessionEvent {
            item_index: Some(index),
            ..SessionEvent::plain(self.next_seq, time, EventKind::Viewed)
        })
    }

    pub fn verdict_event(
        &self,
        index: usize,
        verdict: Verdict,
        time: DateTime<Utc>,
    ) -> Result<SessionEvent, SessionError> {
        self.check_open()?;
        self.check_index(index)?;
        Ok(SessionEvent {
            item_index: Some(index),
            verdict: Some(verdict),
            ..SessionEvent::plain(self.next_seq, time, EventKind::Verdict)
        })
    }

    pub fn finish_event(&self, time: DateTime<Utc>) -> Result<SessionEvent, SessionError> {
        self.check_open()?;
        let missing = self.missing();
        if !missing.is_empty() {
            return Err(SessionError::Incomplete { missing });
        }
        Ok(SessionEvent::plain(self.next_seq, time, EventKind::Finished))
    }

    /// Folds one event into the state, enforcing the same rules as the
    /// event constructors.
    pub fn apply(&mut self, event: &SessionEvent) -> Result<(), SessionError> {
        if event.seq != self.next_seq {
            return Err(SessionError::OutOfSequence {
                expected: self.next_seq,
                found: event.seq,
            });
        }
        let checked = match event.kind {
            EventKind::Started => {
                return Err(SessionError::MalformedEvent("duplicate `started`".into()));
            }
            EventKind::Viewed => {
                let index = event
                    .item_index
                    .ok_or_else(|| SessionError::MalformedEvent("`viewed` without item_index".into()))?;
                if event.verdict.is_some() {
                    return Err(SessionError::MalformedEvent("`viewed` with a verdict".into()));
                }
                self.view_event(index, event.time)?
            }
            EventKind::Verdict => {
                let (Some(index), Some(verdict)) = (event.item_index, event.verdict) else {
                    return Err(SessionError::MalformedEvent(
                        "`verdict` needs item_index and verdict".into(),
                    ));
                };
                self.verdict_event(index, verdict, event.time)?
            }
            EventKind::Finished => {
                if event.item_index.is_some() || event.verdict.is_some() {
                    return Err(SessionError::MalformedEvent("`finished` with item fields".into()));
                }
                self.finish_event(event.time)?
            }
        };
        debug_assert_eq!(checked.kind, event.kind);

        match event.kind {
            EventKind::Viewed => self.cursor = event.item_index.unwrap(),
            EventKind::Verdict => {
                let index = event.item_index.unwrap();
                self.verdicts.insert(index, event.verdict.unwrap());
                self.cursor = index;
            }
            EventKind::Finished => self.finished_at = Some(event.time),
            EventKind::Started => unreachable!(),
        }
        self.next_seq += 1;
        Ok(())
    }
}

/// Session ids double as file names, so they are restricted to
/// `[A-Za-z0-9_-]`.
pub fn validate_session_id(id: &str) -> Result<(), SessionError> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_');
    if ok {
        Ok(())
    } else {
        Err(SessionError::InvalidId(id.to_string()))
    }
}

pub fn log_path(dir: &Path, session_id: &str) -> PathBuf {
    dir.join(format!("{session_id}.{LOG_EXTENSION}"))
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SessionError + '_ {
    move |source| SessionError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses a log file. A final line without a trailing newline that does not
/// parse is a torn write from a crash and is dropped; it was never
/// acknowledged. Returns the events and the byte length of the intact prefix.
pub fn read_log(path: &Path) -> Result<(Vec<SessionEvent>, u64), SessionError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let mut events = Vec::new();
    let mut consumed = 0usize;
    for (n, chunk) in bytes.split_inclusive(|&b| b == b'\n').enumerate() {
        let terminated = chunk.ends_with(b"\n");
        let line = chunk.strip_suffix(b"\n").unwrap_or(chunk);
        if line.iter().all(u8::is_ascii_whitespace) {
            consumed += chunk.len();
            continue;
        }
        match (serde_json::from_slice::<SessionEvent>(line), terminated) {
            (Ok(e), true) => {
                events.push(e);
                consumed += chunk.len();
            }
            (_, false) => break,
            (Err(error), true) => {
                return Err(SessionError::Decode {
                    path: path.to_path_buf(),
                    line: n + 1,
                    error,
                })
            }
        }
    }
    Ok((events, consumed as u64))
}

/// Loads and replays one session log.
pub fn load_session(path: &Path) -> Result<Session, SessionError> {
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| SessionError::InvalidId(path.display().to_string()))?;
    let (events, _) = read_log(path)?;
    Session::replay(id, &events)
}

/// Every `*.jsonl` session in `dir`, sorted by file name.
pub fn load_sessions(dir: &Path) -> Result<Vec<Session>, SessionError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == LOG_EXTENSION))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_session(p)).collect()
}

/// A session whose every state change is appended and synced to its log
/// before it is applied in memory.
#[derive(Debug)]
pub struct DurableSession {
    session: Session,
    file: File,
    path: PathBuf,
}

impl DurableSession {
    pub fn create(
        dir: &Path,
        session_id: &str,
        grader_id: &str,
        study_id: &str,
        item_count: usize,
    ) -> Result<Self, SessionError> {
        validate_session_id(session_id)?;
        let path = log_path(dir, session_id);
        let file = OpenOptions::new()
            .append(true)
            .create_new(true)
            .open(&path)
            .map_err(io_err(&path))?;
        let started = SessionEvent::started(grader_id, study_id, item_count, Utc::now());
        let session = Session::from_started(session_id, &started)?;
        let mut this = Self { session, file, path };
        this.append(&started)?;
        Ok(this)
    }

    /// Reopens a log for further appends, discarding any torn final line.
    pub fn open(path: &Path) -> Result<Self, SessionError> {
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| SessionError::InvalidId(path.display().to_string()))?;
        validate_session_id(id)?;
        let (events, intact) = read_log(path)?;
        let session = Session::replay(id, &events)?;
        let file = OpenOptions::new().append(true).open(path).map_err(io_err(path))?;
        if file.metadata().map_err(io_err(path))?.len() != intact {
            file.set_len(intact).map_err(io_err(path))?;
        }
        Ok(Self {
            session,
            file,
            path: path.to_path_buf(),
        })
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn append(&mut self, event: &SessionEvent) -> Result<(), SessionError> {
        let mut line = serde_json::to_vec(event).expect("events always serialize");
        line.push(b'\n');
        self.file.write_all(&line).map_err(io_err(&self.path))?;
        self.file.flush().map_err(io_err(&self.path))?;
        self.file.sync_data().map_err(io_err(&self.path))?;
        Ok(())
    }

    fn commit(&mut self, event: SessionEvent) -> Result<(), SessionError> {
        self.append(&event)?;
        self.session.apply(&event)
    }

    pub fn view(&mut self, index: usize) -> Result<(), SessionError> {
        let e = self.session.view_event(index, Utc::now())?;
        self.commit(e)
    }

    pub fn put_verdict(&mut self, index: usize, verdict: Verdict) -> Result<(), SessionError> {
        let e = self.session.verdict_event(index, verdict, Utc::now())?;
        self.commit(e)
    }

    pub fn finish(&mut self) -> Result<SessionSummary, SessionError> {
        let e = self.session.finish_event(Utc::now())?;
        self.commit(e)?;
        Ok(self.session.summary())
    }
}
