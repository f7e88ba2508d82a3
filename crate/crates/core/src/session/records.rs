//! On-disk learner records: `<id>.log` holds one JSON event per line and is
//! the source of truth; `<id>.snapshot` is a derived cache.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::events::Event;
use super::model::{LearnerModel, ReplayError, Snapshot};

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("record i/o: {0}")]
    Io(#[from] io::Error),
    #[error("invalid learner id `{0}`")]
    InvalidLearnerId(String),
    #[error("line {line}: {detail}")]
    Malformed { line: usize, detail: String },
    #[error("line {line}: sequence {found}, expected {expected}")]
    Sequence {
        line: usize,
        expected: u64,
        found: u64,
    },
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

/// Learner ids double as file names.
pub fn valid_learner_id(id: &str) -> bool {
    (1..=64).contains(&id.len())
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

/// Parses a newline-delimited event log. Blank lines are ignored; sequence
/// numbers must start at 1 and increase by one.
pub fn parse_event_log(text: &str) -> Result<Vec<Event>, RecordError> {
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let event: Event = serde_json::from_str(line).map_err(|e| RecordError::Malformed {
            line: i + 1,
            detail: e.to_string(),
        })?;
        let expected = events.len() as u64 + 1;
        if event.seq != expected {
            return Err(RecordError::Sequence {
                line: i + 1,
                expected,
                found: event.seq,
            });
        }
        events.push(event);
    }
    Ok(events)
}

pub fn encode_event(event: &Event) -> String {
    serde_json::to_string(event).expect("events serialize")
}

#[derive(Debug, Clone)]
pub struct RecordStore {
    dir: PathBuf,
}

impl RecordStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<RecordStore, RecordError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(RecordStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, learner_id: &str, ext: &str) -> Result<PathBuf, RecordError> {
        if !valid_learner_id(learner_id) {
            return Err(RecordError::InvalidLearnerId(learner_id.to_string()));
        }
        Ok(self.dir.join(format!("{learner_id}.{ext}")))
    }

    pub fn log_path(&self, learner_id: &str) -> Result<PathBuf, RecordError> {
        self.path(learner_id, "log")
    }

    pub fn snapshot_path(&self, learner_id: &str) -> Result<PathBuf, RecordError> {
        self.path(learner_id, "snapshot")
    }

    pub fn exists(&self, learner_id: &str) -> Result<bool, RecordError> {
        Ok(self.log_path(learner_id)?.exists())
    }

    pub fn read_events(&self, learner_id: &str) -> Result<Vec<Event>, RecordError> {
        match fs::read_to_string(self.log_path(learner_id)?) {
            Ok(text) => parse_event_log(&text),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(e.into()),
        }
    }

    /// Rebuilds the model from the log. A missing log yields a fresh learner.
    pub fn load(&self, learner_id: &str, pack_id: &str) -> Result<LearnerModel, RecordError> {
        let events = self.read_events(learner_id)?;
        Ok(LearnerModel::replay(learner_id, pack_id, events)?)
    }

    /// Appends the events of `model` beyond `persisted`, then refreshes the snapshot.
    pub fn commit(&self, model: &LearnerModel, persisted: usize) -> Result<(), RecordError> {
        let new = &model.event_log[persisted.min(model.event_log.len())..];
        if !new.is_empty() {
            let mut buf = String::new();
            for event in new {
                buf.push_str(&encode_event(event));
                buf.push('\n');
            }
            let mut log = OpenOptions::new()
                .create(true)
                .append(true)
                .open(self.log_path(&model.learner_id)?)?;
            log.write_all(buf.as_bytes())?;
            log.sync_data()?;
        }
        self.write_snapshot(model)
    }

    pub fn write_snapshot(&self, model: &LearnerModel) -> Result<(), RecordError> {
        let path = self.snapshot_path(&model.learner_id)?;
        let tmp = path.with_extension("snapshot.tmp");
        let body = serde_json::to_vec_pretty(&model.snapshot()).expect("snapshots serialize");
        let mut file = File::create(&tmp)?;
        file.write_all(&body)?;
        file.sync_data()?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn read_snapshot(&self, learner_id: &str) -> Result<Option<Snapshot>, RecordError> {
        match fs::read(self.snapshot_path(learner_id)?) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| RecordError::Malformed {
                    line: e.line(),
                    detail: e.to_string(),
                }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Ids of every learner with a log.
    pub fn learners(&self) -> Result<Vec<String>, RecordError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "log")
                && let Some(stem) = path.file_stem().and_then(|s| s.to_str())
                && valid_learner_id(stem)
            {
                ids.push(stem.to_string());
            }
        }
        ids.sort();
        Ok(ids)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn learner_ids() {
        assert!(valid_learner_id("ada_01-x"));
        assert!(!valid_learner_id(""));
        assert!(!valid_learner_id("../etc"));
        assert!(!valid_learner_id(&"a".repeat(65)));
    }

    #[test]
    fn log_sequence_is_checked() {
        let line = |seq: u64| {
            format!(
                r#"{{"seq":{seq},"timestamp_ms":0,"kind":"MessageRead","payload":{{"message_id":"m1"}}}}"#
            )
        };
        let ok = format!("{}\n\n{}\n", line(1), line(2));
        assert_eq!(parse_event_log(&ok).unwrap().len(), 2);
        let gap = format!("{}\n{}\n", line(1), line(3));
        assert!(matches!(
            parse_event_log(&gap),
            Err(RecordError::Sequence { line: 2, expected: 2, found: 3 })
        ));
        assert!(matches!(
            parse_event_log("{"),
            Err(RecordError::Malformed { line: 1, .. })
        ));
    }
}
