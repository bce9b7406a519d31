//! Append-only session journal, one JSON event per line.
//!
//! Every event is flushed and synced before the request that caused it is
//! acknowledged. On open the journal is replayed; a torn final line from a
//! crash mid-write is dropped and truncated away.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use fillin_core::graph::Pair;

use crate::error::{ElicitError, Result};
use crate::sequences::SequencePlan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Created {
        id: Uuid,
        item_labels: Vec<String>,
        plan: SequencePlan,
    },
    Answered {
        id: Uuid,
        pair: Pair,
        value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        idempotency_key: Option<String>,
    },
    Abandoned {
        id: Uuid,
    },
}

#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    file: File,
}

impl Journal {
    /// Opens or creates the journal and returns the events already in it.
    pub fn open(path: impl AsRef<Path>) -> Result<(Journal, Vec<Event>)> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&path)?;
        let mut events = Vec::new();
        let mut good_len = 0u64;
        {
            let mut reader = BufReader::new(&file);
            let mut line = String::new();
            loop {
                line.clear();
                let read = reader.read_line(&mut line)?;
                if read == 0 {
                    break;
                }
                if !line.ends_with('\n') {
                    break;
                }
                match serde_json::from_str::<Event>(line.trim_end()) {
                    Ok(ev) => {
                        events.push(ev);
                        good_len += read as u64;
                    }
                    Err(e) => {
                        return Err(ElicitError::Io(std::io::Error::new(
                            std::io::ErrorKind::InvalidData,
                            format!(
                                "{} is corrupt after {} events: {e}",
                                path.display(),
                                events.len()
                            ),
                        )))
                    }
                }
            }
        }
        if file.metadata()?.len() != good_len {
            tracing::warn!(path = %path.display(), "dropping torn journal tail");
            file.set_len(good_len)?;
            file.sync_all()?;
        }
        file.seek(SeekFrom::End(0))?;
        Ok((Journal { path, file }, events))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, event: &Event) -> Result<()> {
        let mut line = serde_json::to_vec(event)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::select_sequence;

    #[test]
    fn round_trip_and_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.jsonl");
        let id = Uuid::from_u128(7);
        let evs = vec![
            Event::Created {
                id,
                item_labels: vec!["a".into(), "b".into(), "c".into()],
                plan: select_sequence(3, None).unwrap(),
            },
            Event::Answered {
                id,
                pair: Pair(0, 1),
                value: 3.0,
                idempotency_key: Some("k".into()),
            },
        ];
        {
            let (mut j, old) = Journal::open(&path).unwrap();
            assert!(old.is_empty());
            for e in &evs {
                j.append(e).unwrap();
            }
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(br#"{"event":"abandoned","id":"#).unwrap();
        drop(f);
        let (mut j, replayed) = Journal::open(&path).unwrap();
        assert_eq!(replayed, evs);
        j.append(&Event::Abandoned { id }).unwrap();
        drop(j);
        let (_, replayed) = Journal::open(&path).unwrap();
        assert_eq!(replayed.len(), 3);
    }

    #[test]
    fn corrupt_middle_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.jsonl");
        std::fs::write(&path, "garbage\n{\"event\":\"abandoned\",\"id\":\"00000000-0000-0000-0000-000000000000\"}\n").unwrap();
        assert!(Journal::open(&path).is_err());
    }
}
