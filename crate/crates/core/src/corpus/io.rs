//! Newline-delimited JSON formats for pairs and annotations.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    spans_for_joined, spans_in_raw, AnnotationRecord, CorpusError, Dataset, DocumentSummaryPair,
    Reconstructability, SummaryOrigin,
};

/// On-disk form of a [`DocumentSummaryPair`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairLine {
    pub pair_id: String,
    pub dataset: Dataset,
    pub summary_origin: SummaryOrigin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_name: Option<String>,
    pub summary: String,
    pub sentences: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_document: Option<String>,
}

impl PairLine {
    pub fn into_pair(self) -> Result<DocumentSummaryPair, CorpusError> {
        let sentences = match &self.raw_document {
            Some(raw) => {
                spans_in_raw(raw, &self.sentences).map_err(|message| CorpusError::InvalidPair {
                    pair_id: self.pair_id.clone(),
                    message,
                })?
            }
            None => spans_for_joined(self.sentences.iter().map(String::as_str)),
        };
        let pair = DocumentSummaryPair {
            pair_id: self.pair_id,
            dataset: self.dataset,
            summary_origin: self.summary_origin,
            system_name: self.system_name,
            sentences,
            summary: self.summary,
            raw_document: self.raw_document,
        };
        pair.validate()?;
        Ok(pair)
    }
}

impl From<&DocumentSummaryPair> for PairLine {
    fn from(p: &DocumentSummaryPair) -> Self {
        Self {
            pair_id: p.pair_id.clone(),
            dataset: p.dataset,
            summary_origin: p.summary_origin,
            system_name: p.system_name.clone(),
            summary: p.summary.clone(),
            sentences: p.sentences.iter().map(|s| s.text.clone()).collect(),
            raw_document: p.raw_document.clone(),
        }
    }
}

/// On-disk form of an [`AnnotationRecord`]; labels are 0/1 integers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationLine {
    pub pair_id: String,
    pub annotator_id: String,
    pub sentence_labels: Vec<u8>,
    pub reconstructability: Reconstructability,
}

impl TryFrom<AnnotationLine> for AnnotationRecord {
    type Error = String;

    fn try_from(line: AnnotationLine) -> Result<Self, String> {
        let sentence_labels = line
            .sentence_labels
            .iter()
            .enumerate()
            .map(|(i, &l)| match l {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(format!("sentence_labels[{i}] = {other}, expected 0 or 1")),
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            pair_id: line.pair_id,
            annotator_id: line.annotator_id,
            sentence_labels,
            reconstructability: line.reconstructability,
        })
    }
}

impl From<&AnnotationRecord> for AnnotationLine {
    fn from(r: &AnnotationRecord) -> Self {
        Self {
            pair_id: r.pair_id.clone(),
            annotator_id: r.annotator_id.clone(),
            sentence_labels: r.sentence_labels.iter().map(|&b| u8::from(b)).collect(),
            reconstructability: r.reconstructability,
        }
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}

pub fn parse_pairs(text: &str) -> Result<Vec<DocumentSummaryPair>, CorpusError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, raw) in content_lines(text) {
        let record: PairLine = serde_json::from_str(raw).map_err(|e| CorpusError::Malformed {
            line,
            message: e.to_string(),
        })?;
        let pair = record.into_pair().map_err(|e| CorpusError::Malformed {
            line,
            message: e.to_string(),
        })?;
        if !seen.insert(pair.pair_id.clone()) {
            return Err(CorpusError::DuplicatePair(pair.pair_id));
        }
        out.push(pair);
    }
    Ok(out)
}

pub fn load_pairs(path: impl AsRef<Path>) -> Result<Vec<DocumentSummaryPair>, CorpusError> {
    parse_pairs(&fs::read_to_string(path)?)
}

pub fn write_pairs<W: Write>(mut out: W, pairs: &[DocumentSummaryPair]) -> Result<(), CorpusError> {
    for p in pairs {
        let line = serde_json::to_string(&PairLine::from(p)).expect("pair serializes");
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Parses annotation lines. A repeated (pair_id, annotator_id) is an error.
pub fn parse_annotations(text: &str) -> Result<Vec<AnnotationRecord>, CorpusError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, raw) in content_lines(text) {
        let record: AnnotationLine =
            serde_json::from_str(raw).map_err(|e| CorpusError::Malformed {
                line,
                message: e.to_string(),
            })?;
        let record = AnnotationRecord::try_from(record)
            .map_err(|message| CorpusError::Malformed { line, message })?;
        if !seen.insert((record.pair_id.clone(), record.annotator_id.clone())) {
            return Err(CorpusError::DuplicateAnnotation {
                pair_id: record.pair_id,
                annotator_id: record.annotator_id,
            });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<Vec<AnnotationRecord>, CorpusError> {
    parse_annotations(&fs::read_to_string(path)?)
}

pub fn write_annotations<W: Write>(
    mut out: W,
    records: &[AnnotationRecord],
) -> Result<(), CorpusError> {
    for r in records {
        let line = serde_json::to_string(&AnnotationLine::from(r)).expect("record serializes");
        writeln!(out, "{line}")?;
    }
    Ok(())
}
