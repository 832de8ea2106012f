use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::DocumentSummaryPair;
use crate::tokenize::Tokenizer;
use crate::wire::{content_hash, BackendError, WireClient, WireSettings};

/// What the summary is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Conditioning {
    /// The whole document.
    Full,
    /// The document with one sentence deleted.
    Without(usize),
    /// Nothing at all.
    Empty,
    /// A single sentence.
    Only(usize),
}

impl Conditioning {
    /// `removed_index` code used by logprob dumps, with the sentence index for
    /// single-sentence conditioning.
    pub fn dump_code(self) -> (i64, Option<usize>) {
        match self {
            Self::Full => (-1, None),
            Self::Empty => (-2, None),
            Self::Only(i) => (-3, Some(i)),
            Self::Without(i) => (i as i64, None),
        }
    }

    pub fn from_dump_code(removed_index: i64, sentence_index: Option<usize>) -> Option<Self> {
        match (removed_index, sentence_index) {
            (-1, _) => Some(Self::Full),
            (-2, _) => Some(Self::Empty),
            (-3, Some(i)) => Some(Self::Only(i)),
            (i, _) if i >= 0 => Some(Self::Without(i as usize)),
            _ => None,
        }
    }
}

/// Conditioning text: kept sentences in original order joined by single spaces.
pub fn conditioning_text(pair: &DocumentSummaryPair, conditioning: Conditioning) -> String {
    match conditioning {
        Conditioning::Full => pair.join_sentences(|_| true),
        Conditioning::Without(k) => pair.join_sentences(|i| i != k),
        Conditioning::Empty => String::new(),
        Conditioning::Only(k) => pair.join_sentences(|i| i == k),
    }
}

/// Source of per-token summary log-probabilities.
///
/// Implementations return one finite value per summary token under their own
/// fixed tokenization, and are deterministic for fixed inputs.
pub trait ConditionalBackend: Send + Sync {
    fn logprobs(
        &self,
        pair: &DocumentSummaryPair,
        conditioning: Conditioning,
    ) -> Result<Vec<f64>, BackendError>;

    /// Stable identity for cache keys.
    fn descriptor(&self) -> String;

    fn concurrency_limit(&self) -> usize {
        usize::MAX
    }
}

/// Closed-form copy-biased language model:
/// `p(t | c) = λ·count(t in c)/|c| + (1-λ)/V`, uniform `1/V` when `c` is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct CopyBiasedLm {
    lambda: f64,
    vocab_size: usize,
    vocabulary: Option<HashSet<String>>,
    tokenizer: Tokenizer,
}

impl CopyBiasedLm {
    pub fn new(lambda: f64, vocab_size: usize) -> Result<Self, BackendError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(BackendError::Invalid(format!(
                "lambda {lambda} not in [0, 1]"
            )));
        }
        if vocab_size == 0 {
            return Err(BackendError::Invalid("vocab_size must be positive".into()));
        }
        Ok(Self {
            lambda,
            vocab_size,
            vocabulary: None,
            tokenizer: Tokenizer::default(),
        })
    }

    /// Declares the vocabulary; tokens outside it are rejected.
    pub fn with_vocabulary<I, S>(mut self, vocabulary: I) -> Result<Self, BackendError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let vocab: HashSet<String> = vocabulary.into_iter().map(Into::into).collect();
        if vocab.len() > self.vocab_size {
            return Err(BackendError::Invalid(format!(
                "{} declared tokens exceed vocab_size {}",
                vocab.len(),
                self.vocab_size
            )));
        }
        self.vocabulary = Some(vocab);
        Ok(self)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn check_vocab<S: AsRef<str>>(&self, tokens: &[S]) -> Result<(), BackendError> {
        if let Some(v) = &self.vocabulary {
            if let Some(t) = tokens.iter().find(|t| !v.contains(t.as_ref())) {
                return Err(BackendError::Invalid(format!(
                    "token `{}` is outside the vocabulary",
                    t.as_ref()
                )));
            }
        }
        Ok(())
    }

    /// Per-token log-probabilities of `target` given `conditioning`, both
    /// already tokenized.
    pub fn oracle_logprobs<S: AsRef<str>>(
        &self,
        target: &[S],
        conditioning: &[S],
    ) -> Result<Vec<f64>, BackendError> {
        self.check_vocab(target)?;
        self.check_vocab(conditioning)?;
        let uniform = 1.0 / self.vocab_size as f64;
        if conditioning.is_empty() {
            return Ok(vec![uniform.ln(); target.len()]);
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in conditioning {
            *counts.entry(t.as_ref()).or_default() += 1;
        }
        let len = conditioning.len() as f64;
        target
            .iter()
            .map(|t| {
                let copy = counts.get(t.as_ref()).copied().unwrap_or(0) as f64 / len;
                let p = self.lambda * copy + (1.0 - self.lambda) * uniform;
                if p > 0.0 {
                    Ok(p.ln())
                } else {
                    Err(BackendError::Invalid(format!(
                        "token `{}` has probability 0",
                        t.as_ref()
                    )))
                }
            })
            .collect()
    }

    pub fn logprobs_text(
        &self,
        target: &str,
        conditioning: &str,
    ) -> Result<Vec<f64>, BackendError> {
        self.oracle_logprobs(
            &self.tokenizer.tokenize(target),
            &self.tokenizer.tokenize(conditioning),
        )
    }
}

impl ConditionalBackend for CopyBiasedLm {
    fn logprobs(
        &self,
        pair: &DocumentSummaryPair,
        conditioning: Conditioning,
    ) -> Result<Vec<f64>, BackendError> {
        self.logprobs_text(&pair.summary, &conditioning_text(pair, conditioning))
    }

    fn descriptor(&self) -> String {
        format!("oracle:copy(lambda={},V={})", self.lambda, self.vocab_size)
    }
}

/// One precomputed log-probability record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogprobDumpLine {
    pub pair_id: String,
    /// -1 full document, -2 empty conditioning, -3 single sentence
    /// (`sentence_index`), otherwise the removed sentence.
    pub removed_index: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_index: Option<usize>,
    pub token_logprobs: Vec<f64>,
}

/// Log-probabilities recorded offline, looked up by pair and conditioning.
#[derive(Debug, Clone)]
pub struct LogprobDump {
    descriptor: String,
    entries: HashMap<(String, Conditioning), Vec<f64>>,
}

impl LogprobDump {
    pub fn parse(text: &str, descriptor: impl Into<String>) -> Result<Self, BackendError> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |m: String| BackendError::Invalid(format!("line {}: {m}", i + 1));
            let l: LogprobDumpLine = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
            let cond = Conditioning::from_dump_code(l.removed_index, l.sentence_index)
                .ok_or_else(|| bad(format!("bad removed_index {}", l.removed_index)))?;
            entries.insert((l.pair_id, cond), l.token_logprobs);
        }
        Ok(Self {
            descriptor: descriptor.into(),
            entries,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let text = fs::read_to_string(path)?;
        let hash = content_hash(&[text.as_bytes()]);
        Self::parse(&text, format!("logprob_dump:{}", &hash[..16]))
    }
}

impl ConditionalBackend for LogprobDump {
    fn logprobs(
        &self,
        pair: &DocumentSummaryPair,
        conditioning: Conditioning,
    ) -> Result<Vec<f64>, BackendError> {
        self.entries
            .get(&(pair.pair_id.clone(), conditioning))
            .cloned()
            .ok_or_else(|| {
                BackendError::MissingEntry(format!("pair `{}` {:?}", pair.pair_id, conditioning))
            })
    }

    fn descriptor(&self) -> String {
        self.descriptor.clone()
    }
}

/// Remote scorer speaking `{target, conditioning}` → `{token_logprobs}`.
#[derive(Debug)]
pub struct WireLogprobs {
    client: WireClient,
}

#[derive(Serialize)]
struct LogprobRequest<'a> {
    target: &'a str,
    conditioning: &'a str,
}

#[derive(Serialize, Deserialize)]
struct LogprobResponse {
    token_logprobs: Vec<f64>,
}

impl WireLogprobs {
    pub fn new(url: impl Into<String>, settings: WireSettings, cache_dir: Option<PathBuf>) -> Self {
        Self {
            client: WireClient::new(url, settings, cache_dir),
        }
    }

    pub fn client(&self) -> &WireClient {
        &self.client
    }
}

impl ConditionalBackend for WireLogprobs {
    fn logprobs(
        &self,
        pair: &DocumentSummaryPair,
        conditioning: Conditioning,
    ) -> Result<Vec<f64>, BackendError> {
        let text = conditioning_text(pair, conditioning);
        let resp: LogprobResponse = self.client.post(&LogprobRequest {
            target: &pair.summary,
            conditioning: &text,
        })?;
        Ok(resp.token_logprobs)
    }

    fn descriptor(&self) -> String {
        format!("logprob_wire:{}", self.client.url())
    }

    fn concurrency_limit(&self) -> usize {
        self.client.settings().concurrency
    }
}
