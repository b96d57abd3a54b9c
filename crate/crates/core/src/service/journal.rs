//! Append-only JSONL session logs, one file per session.
//!
//! Each line is one record: a header when the session opens, one line per
//! turn (robot turns also carry the session checkpoint), and questionnaire
//! results. Records are flushed and synced before the caller sees success,
//! so a crash loses at most a partially written trailing line, which the
//! reader drops.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dialogue::{QuestionnaireRecord, SessionCore, Turn};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum LogRecord {
    Session {
        session_id: String,
        spot_a_id: String,
        spot_b_id: String,
        t: u64,
    },
    Turn {
        session_id: String,
        turn: Turn,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        checkpoint: Option<SessionCore>,
    },
    Questionnaire(QuestionnaireRecord),
}

/// What survived in one session's file.
#[derive(Debug, Default)]
pub struct LoggedSession {
    pub records: Vec<LogRecord>,
    /// Bytes of the file that hold complete records.
    pub valid_len: u64,
    /// True when a damaged tail was found after `valid_len`.
    pub truncated_tail: bool,
}

impl LoggedSession {
    pub fn turns(&self) -> Vec<Turn> {
        self.records
            .iter()
            .filter_map(|r| match r {
                LogRecord::Turn { turn, .. } => Some(turn.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn last_checkpoint(&self) -> Option<&SessionCore> {
        self.records.iter().rev().find_map(|r| match r {
            LogRecord::Turn {
                checkpoint: Some(c),
                ..
            } => Some(c),
            _ => None,
        })
    }

    pub fn questionnaires(&self) -> Vec<&QuestionnaireRecord> {
        self.records
            .iter()
            .filter_map(|r| match r {
                LogRecord::Questionnaire(q) => Some(q),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SessionLog {
    dir: PathBuf,
}

impl SessionLog {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(SessionLog { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, session_id: &str) -> io::Result<PathBuf> {
        let safe = !session_id.is_empty()
            && session_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !safe {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("session id {session_id:?} is not usable as a file name"),
            ));
        }
        Ok(self.dir.join(format!("{session_id}.jsonl")))
    }

    /// Writes all records with a single write and syncs the file.
    pub fn append(&self, session_id: &str, records: &[LogRecord]) -> io::Result<()> {
        let mut buf = Vec::new();
        for r in records {
            serde_json::to_writer(&mut buf, r)?;
            buf.push(b'\n');
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.path_for(session_id)?)?;
        file.write_all(&buf)?;
        file.sync_data()
    }

    pub fn read(&self, session_id: &str) -> io::Result<LoggedSession> {
        read_log(&self.path_for(session_id)?)
    }

    /// Cuts a damaged tail so later appends start on a clean line.
    pub fn repair(&self, session_id: &str, logged: &LoggedSession) -> io::Result<()> {
        if logged.truncated_tail {
            let file = OpenOptions::new()
                .write(true)
                .open(self.path_for(session_id)?)?;
            file.set_len(logged.valid_len)?;
            file.sync_data()?;
        }
        Ok(())
    }

    /// Session ids with a log file, sorted.
    pub fn session_ids(&self) -> io::Result<Vec<String>> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "jsonl") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    ids.push(stem.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }
}

/// Reads complete records, stopping at the first line that is unterminated
/// or does not parse.
pub fn read_log(path: &Path) -> io::Result<LoggedSession> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut out = LoggedSession::default();
    let mut line = Vec::new();
    loop {
        line.clear();
        let n = reader.read_until(b'\n', &mut line)?;
        if n == 0 {
            break;
        }
        if line.last() != Some(&b'\n') {
            out.truncated_tail = true;
            break;
        }
        match serde_json::from_slice::<LogRecord>(&line) {
            Ok(r) => {
                out.records.push(r);
                out.valid_len += n as u64;
            }
            Err(e) => {
                log::warn!("{}: dropping log tail: {e}", path.display());
                out.truncated_tail = true;
                break;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::{DialogueState, Speaker};

    fn turn(seq: u64) -> LogRecord {
        LogRecord::Turn {
            session_id: "s1".into(),
            turn: Turn {
                seq,
                t: 1000 + seq,
                speaker: Speaker::Visitor,
                text: format!("utterance {seq}"),
                state_at_emit: DialogueState::QA,
                expression_event: None,
                classified: None,
            },
            checkpoint: None,
        }
    }

    #[test]
    fn round_trip_and_partial_tail() {
        let dir = tempfile::tempdir().unwrap();
        let log = SessionLog::open(dir.path()).unwrap();
        log.append("s1", &[turn(0), turn(1)]).unwrap();
        log.append("s1", &[turn(2)]).unwrap();
        let path = log.path_for("s1").unwrap();
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(br#"{"kind":"turn","session_id":"s1","tu"#)
            .unwrap();
        drop(f);

        let logged = log.read("s1").unwrap();
        assert_eq!(logged.turns().len(), 3);
        assert!(logged.truncated_tail);
        log.repair("s1", &logged).unwrap();
        log.append("s1", &[turn(3)]).unwrap();
        let logged = log.read("s1").unwrap();
        assert!(!logged.truncated_tail);
        let seqs: Vec<u64> = logged.turns().iter().map(|t| t.seq).collect();
        assert_eq!(seqs, [0, 1, 2, 3]);
        assert_eq!(log.session_ids().unwrap(), ["s1"]);
    }

    #[test]
    fn unsafe_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let log = SessionLog::open(dir.path()).unwrap();
        assert!(log.path_for("../etc/passwd").is_err());
        assert!(log.path_for("").is_err());
        assert!(log.path_for("abc-123_x").is_ok());
    }
}
