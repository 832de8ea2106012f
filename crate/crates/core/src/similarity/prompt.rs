//! Zero-shot LLM scoring: each sentence is rated 0-100 for how much it
//! contributes to the summary.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use super::SimilarityError;
use crate::corpus::DocumentSummaryPair;
use crate::parallel::bounded_map;
use crate::score::ScoreVector;
use crate::wire::{BackendError, WireClient, WireSettings};

pub const PROMPT_TEMPLATE: &str = "This task is to identify the sentences in a document that contribute to a given summary of that document. This annotation is a sentence-labeling task. For each snippet, you'll see a summary (labeled Summary:) and a sentence of a short news article (labeled Sentence:).

The output will be a score from 0 to 100, 0 with \"doesn't contribute to summary\" with the highest confidence and 100 with \"contribute to summary\" with the highest confidence.

Summary: {summary}
Sentence: {sentence}

Score:";

pub fn render_prompt(summary: &str, sentence: &str) -> String {
    PROMPT_TEMPLATE
        .replacen("{summary}", summary, 1)
        .replacen("{sentence}", sentence, 1)
}

/// The first integer in `completion`, if it lies in `[0, 100]`.
pub fn parse_score(completion: &str) -> Option<u32> {
    let start = completion.find(|c: char| c.is_ascii_digit())?;
    let digits: String = completion[start..]
        .chars()
        .take_while(|c| c.is_ascii_digit())
        .collect();
    digits.parse::<u32>().ok().filter(|&v| v <= 100)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub max_tokens: u32,
    pub temperature: f64,
    /// Pair and sentence the prompt was rendered for; used by dump lookups,
    /// never sent over the wire.
    #[serde(skip)]
    pub context: Option<(String, usize)>,
}

pub trait CompletionBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError>;

    /// Stable identity for cache keys.
    fn descriptor(&self) -> String;

    fn concurrency_limit(&self) -> usize {
        1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptConfig {
    pub retries: u32,
    pub max_tokens: u32,
    pub temperature: f64,
    /// Upper bound on concurrent requests; the backend's own limit also applies.
    pub concurrency: usize,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            retries: 3,
            max_tokens: 8,
            temperature: 0.0,
            concurrency: 4,
        }
    }
}

impl PromptConfig {
    pub fn params(&self) -> BTreeMap<String, String> {
        BTreeMap::from([
            ("retries".into(), self.retries.to_string()),
            ("max_tokens".into(), self.max_tokens.to_string()),
            ("temperature".into(), self.temperature.to_string()),
        ])
    }
}

pub fn prompt_llm_score(
    pair: &DocumentSummaryPair,
    backend: &dyn CompletionBackend,
    config: &PromptConfig,
) -> Result<ScoreVector, SimilarityError> {
    let limit = config.concurrency.min(backend.concurrency_limit()).max(1);
    let attempts = config.retries.max(1);
    // Workers take sentences in index order, so anything skipped after a
    // failure sits behind the first error.
    let failed = AtomicBool::new(false);
    let results = bounded_map(&pair.sentences, limit, |_, s| {
        if failed.load(Ordering::Relaxed) {
            return Ok(None);
        }
        let request = CompletionRequest {
            prompt: render_prompt(&pair.summary, &s.text),
            max_tokens: config.max_tokens,
            temperature: config.temperature,
            context: Some((pair.pair_id.clone(), s.index)),
        };
        let mut last = String::new();
        for _ in 0..attempts {
            last = match backend.complete(&request) {
                Ok(text) => text,
                Err(source) => {
                    failed.store(true, Ordering::Relaxed);
                    return Err(SimilarityError::Backend {
                        index: s.index,
                        source,
                    });
                }
            };
            if let Some(v) = parse_score(&last) {
                return Ok(Some(v as f64 / 100.0));
            }
        }
        failed.store(true, Ordering::Relaxed);
        Err(SimilarityError::Unparseable {
            index: s.index,
            attempts,
            last,
        })
    });
    let scores = results
        .into_iter()
        .map(|r| r.map(|v| v.expect("sentences before the first failure are scored")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut meta = config.params();
    meta.insert("backend".into(), backend.descriptor());
    Ok(ScoreVector::new(pair.pair_id.clone(), "prompt_llm", scores).with_metadata(meta))
}

/// Completion endpoint speaking `{prompt, max_tokens, temperature}` → `{text}`.
#[derive(Debug)]
pub struct WireCompletion {
    client: WireClient,
}

#[derive(Serialize, Deserialize)]
struct CompletionResponse {
    text: String,
}

impl WireCompletion {
    pub fn new(url: impl Into<String>, settings: WireSettings, cache_dir: Option<PathBuf>) -> Self {
        Self {
            client: WireClient::new(url, settings, cache_dir),
        }
    }

    pub fn client(&self) -> &WireClient {
        &self.client
    }
}

impl CompletionBackend for WireCompletion {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        let resp: CompletionResponse = self.client.post(request)?;
        Ok(resp.text)
    }

    fn descriptor(&self) -> String {
        format!("completion_wire:{}", self.client.url())
    }

    fn concurrency_limit(&self) -> usize {
        self.client.settings().concurrency
    }
}

/// Pre-recorded completions, one line `{pair_id, sentence_index, text}` each.
#[derive(Debug, Clone)]
pub struct CompletionDump {
    descriptor: String,
    entries: HashMap<(String, usize), String>,
}

#[derive(Deserialize)]
struct CompletionDumpLine {
    pair_id: String,
    sentence_index: usize,
    text: String,
}

impl CompletionDump {
    pub fn parse(text: &str, descriptor: impl Into<String>) -> Result<Self, BackendError> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let l: CompletionDumpLine = serde_json::from_str(line)
                .map_err(|e| BackendError::Invalid(format!("line {}: {e}", i + 1)))?;
            entries.insert((l.pair_id, l.sentence_index), l.text);
        }
        Ok(Self {
            descriptor: descriptor.into(),
            entries,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let hash = crate::wire::content_hash(&[text.as_bytes()]);
        Self::parse(&text, format!("completion_dump:{}", &hash[..16]))
    }
}

impl CompletionBackend for CompletionDump {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        let key = request
            .context
            .clone()
            .ok_or_else(|| BackendError::Invalid("dump lookup needs pair context".into()))?;
        self.entries.get(&key).cloned().ok_or_else(|| {
            BackendError::MissingEntry(format!("pair `{}` sentence {}", key.0, key.1))
        })
    }

    fn descriptor(&self) -> String {
        self.descriptor.clone()
    }

    fn concurrency_limit(&self) -> usize {
        usize::MAX
    }
}
