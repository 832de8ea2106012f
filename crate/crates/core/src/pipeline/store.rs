use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use thiserror::Error;

use crate::corpus::{
    parse_annotations, write_annotations, AnnotationLine, AnnotationRecord, CorpusError,
};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("annotator `{annotator_id}` already submitted pair `{pair_id}`")]
    Duplicate {
        pair_id: String,
        annotator_id: String,
    },
    #[error("annotation log {path}: {source}")]
    Corrupt {
        path: PathBuf,
        #[source]
        source: CorpusError,
    },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Append-only newline-delimited annotation log.
///
/// Each record is written as one line and synced before `append` returns.
/// A torn trailing line left by a crash is cut off when the log is opened.
pub struct AnnotationStore {
    path: PathBuf,
    records: RwLock<Vec<AnnotationRecord>>,
    writer: Mutex<File>,
}

impl AnnotationStore {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;
        let text = fs::read_to_string(&path)?;
        let complete = match text.rfind('\n') {
            Some(i) => i + 1,
            None => 0,
        };
        if complete < text.len() {
            file.set_len(complete as u64)?;
            file.sync_all()?;
        }
        file.seek(SeekFrom::End(0))?;
        let records =
            parse_annotations(&text[..complete]).map_err(|source| StoreError::Corrupt {
                path: path.clone(),
                source,
            })?;
        Ok(Self {
            path,
            records: RwLock::new(records),
            writer: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn records(&self) -> Vec<AnnotationRecord> {
        self.records.read().expect("store lock").clone()
    }

    pub fn for_pair(&self, pair_id: &str) -> Vec<AnnotationRecord> {
        self.records
            .read()
            .expect("store lock")
            .iter()
            .filter(|r| r.pair_id == pair_id)
            .cloned()
            .collect()
    }

    pub fn has_submitted(&self, pair_id: &str, annotator_id: &str) -> bool {
        self.records
            .read()
            .expect("store lock")
            .iter()
            .any(|r| r.pair_id == pair_id && r.annotator_id == annotator_id)
    }

    pub fn len(&self) -> usize {
        self.records.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes `record` durably, then makes it visible to readers.
    pub fn append(&self, record: AnnotationRecord) -> Result<(), StoreError> {
        let mut file = self.writer.lock().expect("store lock");
        if self.has_submitted(&record.pair_id, &record.annotator_id) {
            return Err(StoreError::Duplicate {
                pair_id: record.pair_id,
                annotator_id: record.annotator_id,
            });
        }
        let mut line =
            serde_json::to_string(&AnnotationLine::from(&record)).expect("record serializes");
        line.push('\n');
        file.write_all(line.as_bytes())?;
        file.sync_data()?;
        self.records.write().expect("store lock").push(record);
        Ok(())
    }

    /// Rewrites the log sorted by (pair_id, annotator_id).
    pub fn compact(&self) -> Result<usize, StoreError> {
        let mut file = self.writer.lock().expect("store lock");
        let mut records = self.records();
        records.sort_by(|a, b| (&a.pair_id, &a.annotator_id).cmp(&(&b.pair_id, &b.annotator_id)));
        let mut seen = HashSet::new();
        records.retain(|r| seen.insert((r.pair_id.clone(), r.annotator_id.clone())));
        let tmp = self.path.with_extension("compact.tmp");
        {
            let mut out = File::create(&tmp)?;
            write_annotations(&mut out, &records).map_err(|source| StoreError::Corrupt {
                path: tmp.clone(),
                source,
            })?;
            out.sync_all()?;
        }
        fs::rename(&tmp, &self.path)?;
        *file = OpenOptions::new().append(true).open(&self.path)?;
        let n = records.len();
        *self.records.write().expect("store lock") = records;
        Ok(n)
    }
}
