//! Document/summary pairs, human annotations and the statistics computed over
//! them.

mod io;
mod segment;
mod stats;
mod votes;

use std::borrow::Cow;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{
    load_annotations, load_pairs, parse_annotations, parse_pairs, write_annotations, write_pairs,
    AnnotationLine, PairLine,
};
pub use segment::{segment, SegmenterProfile};
pub use stats::{
    corpus_stats, novel_ngram_rate, reconstructability_table, CorpusStats, ReconstructabilityRow,
    VerdictUnit,
};
pub use votes::{
    aggregate_votes, filter_reconstructable, gold_labels, majority_keeps, ReconstructPolicy,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate pair_id `{0}`")]
    DuplicatePair(String),
    #[error("duplicate annotation for pair `{pair_id}` by `{annotator_id}`")]
    DuplicateAnnotation {
        pair_id: String,
        annotator_id: String,
    },
    #[error("pair `{pair_id}`: {message}")]
    InvalidPair { pair_id: String, message: String },
    #[error("empty or whitespace-only text")]
    EmptyText,
    #[error("document has {found} sentences, more than the allowed {max}")]
    TooManySentences { found: usize, max: usize },
    #[error("annotation for pair `{pair_id}` by `{annotator_id}` labels {found} sentences, pair has {expected}")]
    LabelCount {
        pair_id: String,
        annotator_id: String,
        found: usize,
        expected: usize,
    },
    #[error("record for pair `{found}` passed while aggregating pair `{expected}`")]
    WrongPair { expected: String, found: String },
    #[error("no annotation records for pair `{0}`")]
    NoRecords(String),
    #[error("summary has {tokens} tokens, fewer than n = {n}")]
    SummaryTooShort { tokens: usize, n: usize },
    #[error("n must be in 1..=4, got {0}")]
    BadOrder(usize),
    #[error("no gold labels for pair `{0}`")]
    MissingGold(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("split `{0}` has no records")]
    EmptySplit(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Xsum,
    Cnndm,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryOrigin {
    Reference,
    System,
}

/// One input sentence with its character offsets into the document text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub text: String,
    /// Half-open `[start, end)` offsets in characters, not bytes.
    pub char_span: (usize, usize),
}

/// A document and exactly one summary sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentSummaryPair {
    pub pair_id: String,
    pub dataset: Dataset,
    pub summary_origin: SummaryOrigin,
    pub system_name: Option<String>,
    pub sentences: Vec<Sentence>,
    pub summary: String,
    /// Original document text when the source supplied one. Without it the
    /// document is the sentences joined by single spaces.
    pub raw_document: Option<String>,
}

impl DocumentSummaryPair {
    /// Builds a pair from pre-segmented sentences joined by single spaces.
    pub fn from_sentences<S: AsRef<str>>(
        pair_id: impl Into<String>,
        dataset: Dataset,
        summary_origin: SummaryOrigin,
        sentences: &[S],
        summary: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let pair_id = pair_id.into();
        let sentences = spans_for_joined(sentences.iter().map(|s| s.as_ref()));
        let pair = Self {
            pair_id,
            dataset,
            summary_origin,
            system_name: None,
            sentences,
            summary: summary.into(),
            raw_document: None,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn document_text(&self) -> Cow<'_, str> {
        match &self.raw_document {
            Some(raw) => Cow::Borrowed(raw),
            None => Cow::Owned(self.join_sentences(|_| true)),
        }
    }

    /// Sentences for which `keep` returns true, in order, joined by single spaces.
    pub fn join_sentences(&self, keep: impl Fn(usize) -> bool) -> String {
        let mut out = String::new();
        for s in self.sentences.iter().filter(|s| keep(s.index)) {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&s.text);
        }
        out
    }

    pub fn sentence_texts(&self) -> Vec<&str> {
        self.sentences.iter().map(|s| s.text.as_str()).collect()
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let invalid = |message: String| CorpusError::InvalidPair {
            pair_id: self.pair_id.clone(),
            message,
        };
        if self.pair_id.is_empty() {
            return Err(invalid("empty pair_id".into()));
        }
        if self.sentences.is_empty() {
            return Err(invalid("document has no sentences".into()));
        }
        if normalize_ws(&self.summary).is_empty() {
            return Err(invalid("empty summary".into()));
        }
        let doc: Vec<char> = self.document_text().chars().collect();
        let mut prev_end = 0;
        for (i, s) in self.sentences.iter().enumerate() {
            if s.index != i {
                return Err(invalid(format!("sentence {i} carries index {}", s.index)));
            }
            let (start, end) = s.char_span;
            if start < prev_end || end < start || end > doc.len() {
                return Err(invalid(format!("sentence {i} has bad span {start}..{end}")));
            }
            let slice: String = doc[start..end].iter().collect();
            if normalize_ws(&slice) != normalize_ws(&s.text) {
                return Err(invalid(format!("sentence {i} does not match its span")));
            }
            prev_end = end;
        }
        Ok(())
    }
}

/// One annotator's labels for one pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub pair_id: String,
    pub annotator_id: String,
    /// `true` = contributes to the summary.
    pub sentence_labels: Vec<bool>,
    pub reconstructability: Reconstructability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reconstructability {
    Yes,
    Partly,
    No,
}

impl fmt::Display for Reconstructability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Yes => "yes",
            Self::Partly => "partly",
            Self::No => "no",
        })
    }
}

/// Aggregated votes for one pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLabels {
    pub pair_id: String,
    pub votes: Vec<u32>,
    pub n_annotators: u32,
    pub binary_sources: Vec<bool>,
}

impl GoldLabels {
    /// Votes needed for a sentence to count as a source sentence.
    pub const AGREEMENT: u32 = 2;

    pub fn from_votes(pair_id: impl Into<String>, votes: Vec<u32>, n_annotators: u32) -> Self {
        let binary_sources = votes.iter().map(|&v| v >= Self::AGREEMENT).collect();
        Self {
            pair_id: pair_id.into(),
            votes,
            n_annotators,
            binary_sources,
        }
    }

    pub fn source_count(&self) -> usize {
        self.binary_sources.iter().filter(|&&b| b).count()
    }

    /// 0-based indices of binarized source sentences.
    pub fn source_indices(&self) -> Vec<usize> {
        self.binary_sources
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

pub(crate) fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn spans_for_joined<'a>(texts: impl Iterator<Item = &'a str>) -> Vec<Sentence> {
    let mut pos = 0;
    let mut out = Vec::new();
    for (index, text) in texts.enumerate() {
        if index > 0 {
            pos += 1;
        }
        let len = text.chars().count();
        out.push(Sentence {
            index,
            text: text.to_string(),
            char_span: (pos, pos + len),
        });
        pos += len;
    }
    out
}

/// Locates each sentence in `raw` in order, ignoring whitespace differences.
pub(crate) fn spans_in_raw(raw: &str, texts: &[String]) -> Result<Vec<Sentence>, String> {
    let chars: Vec<char> = raw.chars().collect();
    let mut pos = 0;
    let mut out = Vec::with_capacity(texts.len());
    for (index, text) in texts.iter().enumerate() {
        let wanted: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        if wanted.is_empty() {
            return Err(format!("sentence {index} is empty"));
        }
        while pos < chars.len() && chars[pos].is_whitespace() {
            pos += 1;
        }
        let start = pos;
        let mut matched = 0;
        while matched < wanted.len() {
            match chars.get(pos) {
                Some(c) if c.is_whitespace() => pos += 1,
                Some(&c) if c == wanted[matched] => {
                    matched += 1;
                    pos += 1;
                }
                _ => return Err(format!("sentence {index} not found in raw_document")),
            }
        }
        out.push(Sentence {
            index,
            text: text.clone(),
            char_span: (start, pos),
        });
    }
    Ok(out)
}
