//! Per-sentence relevance scores and their dump files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One method's score for every sentence of one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub pair_id: String,
    pub method: String,
    pub scores: Vec<f64>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("pair `{pair_id}`: score {index} is not finite")]
    NonFinite { pair_id: String, index: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ScoreVector {
    pub fn new(pair_id: impl Into<String>, method: impl Into<String>, scores: Vec<f64>) -> Self {
        Self {
            pair_id: pair_id.into(),
            method: method.into(),
            scores,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_metadata(mut self, metadata: BTreeMap<String, String>) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn check_finite(&self) -> Result<(), DumpError> {
        match self.scores.iter().position(|s| !s.is_finite()) {
            Some(index) => Err(DumpError::NonFinite {
                pair_id: self.pair_id.clone(),
                index,
            }),
            None => Ok(()),
        }
    }

    /// Sentence indices ordered by descending score, ties by ascending index.
    pub fn ranking(&self) -> Vec<usize> {
        rank_descending(&self.scores)
    }
}

pub fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

pub fn parse_scores(text: &str) -> Result<Vec<ScoreVector>, DumpError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: ScoreVector = serde_json::from_str(line).map_err(|e| DumpError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        v.check_finite()?;
        out.push(v);
    }
    Ok(out)
}

pub fn load_scores(path: impl AsRef<Path>) -> Result<Vec<ScoreVector>, DumpError> {
    parse_scores(&fs::read_to_string(path)?)
}

pub fn write_scores<W: Write>(mut out: W, vectors: &[ScoreVector]) -> Result<(), DumpError> {
    for v in vectors {
        writeln!(
            out,
            "{}",
            serde_json::to_string(v).expect("score vector serializes")
        )?;
    }
    Ok(())
}
