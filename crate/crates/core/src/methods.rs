//! The scorer registry: every detection method sits behind [`Scorer`] and is
//! looked up by name at run time.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DocumentSummaryPair;
use crate::model::{
    cross_attention_score, load_attention_dumps, perplexity_gain, pmi_score, AttentionDump,
    ConditionalBackend, CopyBiasedLm, LogprobDump, ModelError, PerplexityCache, WireLogprobs,
};
use crate::score::ScoreVector;
use crate::similarity::{
    idf_table, lexrank, load_embedding_bundles, prompt_llm_score, score_bertscore,
    score_embedding_cosine, score_rouge, CompletionBackend, CompletionDump, EmbeddingBundle,
    IdfSource, LexRankConfig, PromptConfig, RougeAggregation, RougeConfig, RougeVariant,
    SimilarityError, WireCompletion,
};
use crate::tokenize::Tokenizer;
use crate::wire::{content_hash, BackendError, WireSettings};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum MethodError {
    #[error("unknown method `{name}`; registered methods: {}", registered.join(", "))]
    UnknownMethod {
        name: String,
        registered: Vec<String>,
    },
    #[error("method `{method}` needs a {kind} backend but none was configured")]
    MissingBackend { method: String, kind: &'static str },
    #[error("method `{method}` refers to backend `{backend}`, which is not defined")]
    UndefinedBackend { method: String, backend: String },
    #[error("backend `{backend}` is not a {kind} backend (needed by `{method}`)")]
    WrongBackendKind {
        method: String,
        backend: String,
        kind: &'static str,
    },
    #[error("bad parameters for `{method}`: {message}")]
    BadParams { method: String, message: String },
    #[error("backend `{name}`: {source}")]
    Backend {
        name: String,
        #[source]
        source: BackendError,
    },
    #[error("backend `{name}`: {message}")]
    BackendLoad { name: String, message: String },
}

/// A source-sentence scoring strategy.
pub trait Scorer: Send + Sync {
    /// Registered method name.
    fn name(&self) -> &str;

    /// Hyperparameters and backend identity; part of every cache key.
    fn params(&self) -> BTreeMap<String, String>;

    fn score(&self, pair: &DocumentSummaryPair) -> Result<ScoreVector, ScoreError>;

    /// How many pairs may be scored at once.
    fn concurrency_limit(&self) -> usize {
        usize::MAX
    }
}

/// A method as named in a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub name: String,
    /// Output name; defaults to `name`. Lets one method run with several settings.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub backend: Option<String>,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

impl MethodSpec {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            label: None,
            backend: None,
            params: Default::default(),
        }
    }

    pub fn with_backend(mut self, backend: impl Into<String>) -> Self {
        self.backend = Some(backend.into());
        self
    }

    pub fn with_param(mut self, key: &str, value: serde_json::Value) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.name)
    }

    fn parse_params<T: DeserializeOwned>(&self) -> Result<T, MethodError> {
        serde_json::from_value(serde_json::Value::Object(self.params.clone())).map_err(|e| {
            MethodError::BadParams {
                method: self.name.clone(),
                message: e.to_string(),
            }
        })
    }
}

/// A constructed backend, shared between scorers.
#[derive(Clone)]
pub enum Backend {
    Conditional(Arc<dyn ConditionalBackend>),
    Completion(Arc<dyn CompletionBackend>),
    Embeddings {
        descriptor: String,
        bundles: Arc<HashMap<String, EmbeddingBundle>>,
    },
    Attention {
        descriptor: String,
        dumps: Arc<HashMap<String, AttentionDump>>,
    },
}

impl fmt::Debug for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Conditional(b) => write!(f, "Conditional({})", b.descriptor()),
            Self::Completion(b) => write!(f, "Completion({})", b.descriptor()),
            Self::Embeddings { descriptor, .. } => write!(f, "Embeddings({descriptor})"),
            Self::Attention { descriptor, .. } => write!(f, "Attention({descriptor})"),
        }
    }
}

/// Backend configuration as written in a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    /// Built-in copy-biased language model.
    Oracle {
        lambda: f64,
        vocab_size: usize,
    },
    LogprobDump {
        path: PathBuf,
    },
    LogprobWire {
        url: String,
        #[serde(default, flatten)]
        settings: WireSettings,
    },
    CompletionWire {
        url: String,
        #[serde(default, flatten)]
        settings: WireSettings,
    },
    CompletionDump {
        path: PathBuf,
    },
    EmbeddingBundle {
        path: PathBuf,
    },
    AttentionDump {
        path: PathBuf,
    },
}

impl BackendConfig {
    /// Builds the backend. Relative paths resolve against `base`; wire
    /// responses are cached under `cache_dir`.
    pub fn build(
        &self,
        name: &str,
        base: &Path,
        cache_dir: Option<&Path>,
    ) -> Result<Backend, MethodError> {
        let wrap = |source| MethodError::Backend {
            name: name.to_string(),
            source,
        };
        let load = |message: String| MethodError::BackendLoad {
            name: name.to_string(),
            message,
        };
        let wire_cache = cache_dir.map(|d| d.join("wire"));
        Ok(match self {
            Self::Oracle { lambda, vocab_size } => Backend::Conditional(Arc::new(
                CopyBiasedLm::new(*lambda, *vocab_size).map_err(wrap)?,
            )),
            Self::LogprobDump { path } => {
                Backend::Conditional(Arc::new(LogprobDump::load(base.join(path)).map_err(wrap)?))
            }
            Self::LogprobWire { url, settings } => Backend::Conditional(Arc::new(
                WireLogprobs::new(url.clone(), settings.clone(), wire_cache),
            )),
            Self::CompletionWire { url, settings } => Backend::Completion(Arc::new(
                WireCompletion::new(url.clone(), settings.clone(), wire_cache),
            )),
            Self::CompletionDump { path } => Backend::Completion(Arc::new(
                CompletionDump::load(base.join(path)).map_err(wrap)?,
            )),
            Self::EmbeddingBundle { path } => {
                let path = base.join(path);
                let text = std::fs::read_to_string(&path).map_err(|e| load(e.to_string()))?;
                let bundles = load_embedding_bundles(&path).map_err(|e| load(e.to_string()))?;
                Backend::Embeddings {
                    descriptor: format!(
                        "embedding_bundle:{}",
                        &content_hash(&[text.as_bytes()])[..16]
                    ),
                    bundles: Arc::new(bundles),
                }
            }
            Self::AttentionDump { path } => {
                let path = base.join(path);
                let text = std::fs::read_to_string(&path).map_err(|e| load(e.to_string()))?;
                let dumps = load_attention_dumps(&path).map_err(|e| load(e.to_string()))?;
                Backend::Attention {
                    descriptor: format!(
                        "attention_dump:{}",
                        &content_hash(&[text.as_bytes()])[..16]
                    ),
                    dumps: Arc::new(dumps),
                }
            }
        })
    }
}

/// Named backends available to scorer factories.
#[derive(Debug, Clone, Default)]
pub struct BackendSet {
    backends: HashMap<String, Backend>,
}

impl BackendSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, backend: Backend) {
        self.backends.insert(name.into(), backend);
    }

    pub fn get(&self, name: &str) -> Option<&Backend> {
        self.backends.get(name)
    }

    pub fn from_configs(
        configs: &BTreeMap<String, BackendConfig>,
        base: &Path,
        cache_dir: Option<&Path>,
    ) -> Result<Self, MethodError> {
        let mut set = Self::new();
        for (name, cfg) in configs {
            set.insert(name.clone(), cfg.build(name, base, cache_dir)?);
        }
        Ok(set)
    }
}

/// Everything a factory may draw on.
pub struct BuildContext<'a> {
    pub backends: &'a BackendSet,
    pub corpus: &'a [DocumentSummaryPair],
}

pub type ScorerFactory = fn(&MethodSpec, &BuildContext<'_>) -> Result<Box<dyn Scorer>, MethodError>;

/// Name → factory table.
pub struct ScorerRegistry {
    factories: BTreeMap<String, ScorerFactory>,
}

impl Default for ScorerRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

impl ScorerRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn with_builtin() -> Self {
        let mut r = Self::empty();
        r.register("rouge", build_rouge);
        r.register("bertscore", build_bertscore);
        r.register("embedding_cosine", build_embedding_cosine);
        r.register("lexrank", build_lexrank);
        r.register("prompt_llm", build_prompt);
        r.register("cross_attention", build_cross_attention);
        r.register("perplexity_gain", build_perplexity_gain);
        r.register("pmi", build_pmi);
        r
    }

    pub fn register(&mut self, name: impl Into<String>, factory: ScorerFactory) {
        self.factories.insert(name.into(), factory);
    }

    pub fn names(&self) -> Vec<String> {
        self.factories.keys().cloned().collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn build(
        &self,
        spec: &MethodSpec,
        ctx: &BuildContext<'_>,
    ) -> Result<Box<dyn Scorer>, MethodError> {
        let factory = self
            .factories
            .get(&spec.name)
            .ok_or_else(|| MethodError::UnknownMethod {
                name: spec.name.clone(),
                registered: self.names(),
            })?;
        factory(spec, ctx)
    }
}

fn backend<'a>(
    spec: &MethodSpec,
    ctx: &'a BuildContext<'_>,
    kind: &'static str,
) -> Result<&'a Backend, MethodError> {
    let name = spec
        .backend
        .as_ref()
        .ok_or_else(|| MethodError::MissingBackend {
            method: spec.name.clone(),
            kind,
        })?;
    ctx.backends
        .get(name)
        .ok_or_else(|| MethodError::UndefinedBackend {
            method: spec.name.clone(),
            backend: name.clone(),
        })
}

fn wrong_kind(spec: &MethodSpec, kind: &'static str) -> MethodError {
    MethodError::WrongBackendKind {
        method: spec.name.clone(),
        backend: spec.backend.clone().unwrap_or_default(),
        kind,
    }
}

fn conditional(
    spec: &MethodSpec,
    ctx: &BuildContext<'_>,
) -> Result<Arc<dyn ConditionalBackend>, MethodError> {
    match backend(spec, ctx, "conditional log-probability")? {
        Backend::Conditional(b) => Ok(b.clone()),
        _ => Err(wrong_kind(spec, "conditional log-probability")),
    }
}

fn embeddings(
    spec: &MethodSpec,
    ctx: &BuildContext<'_>,
) -> Result<(String, Arc<HashMap<String, EmbeddingBundle>>), MethodError> {
    match backend(spec, ctx, "embedding bundle")? {
        Backend::Embeddings {
            descriptor,
            bundles,
        } => Ok((descriptor.clone(), bundles.clone())),
        _ => Err(wrong_kind(spec, "embedding bundle")),
    }
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct NoParams {}

fn no_params(spec: &MethodSpec) -> Result<(), MethodError> {
    spec.parse_params::<NoParams>().map(|_| ())
}

// ---- rouge ----

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RougeParams {
    aggregation: String,
    stem: bool,
}

impl Default for RougeParams {
    fn default() -> Self {
        Self {
            aggregation: "mean".into(),
            stem: false,
        }
    }
}

struct RougeScorer(RougeConfig);

impl Scorer for RougeScorer {
    fn name(&self) -> &str {
        "rouge"
    }
    fn params(&self) -> BTreeMap<String, String> {
        self.0.params()
    }
    fn score(&self, pair: &DocumentSummaryPair) -> Result<ScoreVector, ScoreError> {
        Ok(score_rouge(pair, &self.0)?)
    }
}

fn build_rouge(spec: &MethodSpec, _: &BuildContext<'_>) -> Result<Box<dyn Scorer>, MethodError> {
    let p: RougeParams = spec.parse_params()?;
    let aggregation = match p.aggregation.as_str() {
        "mean" => RougeAggregation::Mean,
        "r1" => RougeAggregation::Single(RougeVariant::R1),
        "r2" => RougeAggregation::Single(RougeVariant::R2),
        "rl" => RougeAggregation::Single(RougeVariant::Rl),
        other => {
            return Err(MethodError::BadParams {
                method: spec.name.clone(),
                message: format!("aggregation `{other}` is not one of mean, r1, r2, rl"),
            })
        }
    };
    let tokenizer = if p.stem {
        Tokenizer::stemming()
    } else {
        Tokenizer::default()
    };
    Ok(Box::new(RougeScorer(RougeConfig {
        aggregation,
        tokenizer,
    })))
}

// ---- embeddings ----

struct EmbeddingScorer {
    name: &'static str,
    descriptor: String,
    bundles: Arc<HashMap<String, EmbeddingBundle>>,
    greedy: bool,
}

impl Scorer for EmbeddingScorer {
    fn name(&self) -> &str {
        self.name
    }
    fn params(&self) -> BTreeMap<String, String> {
        BTreeMap::from([("backend".to_string(), self.descriptor.clone())])
    }
    fn score(&self, pair: &DocumentSummaryPair) -> Result<ScoreVector, ScoreError> {
        let bundle = self
            .bundles
            .get(&pair.pair_id)
            .ok_or_else(|| SimilarityError::MissingBundle(pair.pair_id.clone()))?;
        Ok(if self.greedy {
            score_bertscore(pair, bundle)?
        } else {
            score_embedding_cosine(pair, bundle)?
        })
    }
}

fn build_bertscore(
    spec: &MethodSpec,
    ctx: &BuildContext<'_>,
) -> Result<Box<dyn Scorer>, MethodError> {
    no_params(spec)?;
    let (descriptor, bundles) = embeddings(spec, ctx)?;
    Ok(Box::new(EmbeddingScorer {
        name: "bertscore",
        descriptor,
        bundles,
        greedy: true,
    }))
}

fn build_embedding_cosine(
    spec: &MethodSpec,
    ctx: &BuildContext<'_>,
) -> Result<Box<dyn Scorer>, MethodError> {
    no_params(spec)?;
    let (descriptor, bundles) = embeddings(spec, ctx)?;
    Ok(Box::new(EmbeddingScorer {
        name: "embedding_cosine",
        descriptor,
        bundles,
        greedy: false,
    }))
}

// ---- lexrank ----

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LexRankParams {
    threshold: f64,
    damping: f64,
    tol: f64,
    max_iter: usize,
    /// "sentences" or "corpus"
    idf: String,
    stem: bool,
}

impl Default for LexRankParams {
    fn default() -> Self {
        let d = LexRankConfig::default();
        Self {
            threshold: d.threshold,
            damping: d.damping,
            tol: d.tol,
            max_iter: d.max_iter,
            idf: "sentences".into(),
            stem: false,
        }
    }
}

struct LexRankScorer(LexRankConfig);

impl Scorer for LexRankScorer {
    fn name(&self) -> &str {
        "lexrank"
    }
    fn params(&self) -> BTreeMap<String, String> {
        self.0.params()
    }
    fn score(&self, pair: &DocumentSummaryPair) -> Result<ScoreVector, ScoreError> {
        Ok(lexrank(pair, &self.0)?)
    }
}

fn build_lexrank(
    spec: &MethodSpec,
    ctx: &BuildContext<'_>,
) -> Result<Box<dyn Scorer>, MethodError> {
    let p: LexRankParams = spec.parse_params()?;
    if !(p.damping > 0.0 && p.damping < 1.0) {
        return Err(MethodError::BadParams {
            method: spec.name.clone(),
            message: format!("damping {} not in (0, 1)", p.damping),
        });
    }
    let tokenizer = if p.stem {
        Tokenizer::stemming()
    } else {
        Tokenizer::default()
    };
    let idf = match p.idf.as_str() {
        "sentences" => IdfSource::Sentences,
        "corpus" => {
            let docs: Vec<Vec<String>> = ctx
                .corpus
                .iter()
                .map(|pair| tokenizer.tokenize(&pair.document_text()))
                .collect();
            let joined: Vec<u8> = docs
                .iter()
                .flat_map(|d| d.join(" ").into_bytes().into_iter().chain(*b"\n"))
                .collect();
            IdfSource::Table {
                fingerprint: content_hash(&[&joined])[..16].to_string(),
                idf: Arc::new(idf_table(docs.iter().map(Vec::as_slice))),
            }
        }
        other => {
            return Err(MethodError::BadParams {
                method: spec.name.clone(),
                message: format!("idf `{other}` is not one of sentences, corpus"),
            })
        }
    };
    Ok(Box::new(LexRankScorer(LexRankConfig {
        threshold: p.threshold,
        damping: p.damping,
        tol: p.tol,
        max_iter: p.max_iter,
        tokenizer,
        idf,
    })))
}

// ---- prompt ----

struct PromptScorer {
    backend: Arc<dyn CompletionBackend>,
    config: PromptConfig,
}

impl Scorer for PromptScorer {
    fn name(&self) -> &str {
        "prompt_llm"
    }
    fn params(&self) -> BTreeMap<String, String> {
        let mut p = self.config.params();
        p.insert("backend".into(), self.backend.descriptor());
        p
    }
    fn score(&self, pair: &DocumentSummaryPair) -> Result<ScoreVector, ScoreError> {
        Ok(prompt_llm_score(pair, self.backend.as_ref(), &self.config)?)
    }
    fn concurrency_limit(&self) -> usize {
        1
    }
}

fn build_prompt(spec: &MethodSpec, ctx: &BuildContext<'_>) -> Result<Box<dyn Scorer>, MethodError> {
    let config: PromptConfig = spec.parse_params()?;
    let backend = match backend(spec, ctx, "text-completion")? {
        Backend::Completion(b) => b.clone(),
        _ => return Err(wrong_kind(spec, "text-completion")),
    };
    Ok(Box::new(PromptScorer { backend, config }))
}

// ---- cross attention ----

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct AttentionParams {
    layers: Option<Vec<usize>>,
}

struct AttentionScorer {
    descriptor: String,
    dumps: Arc<HashMap<String, AttentionDump>>,
    layers: Option<Vec<usize>>,
}

impl Scorer for AttentionScorer {
    fn name(&self) -> &str {
        "cross_attention"
    }
    fn params(&self) -> BTreeMap<String, String> {
        let layers = match &self.layers {
            Some(l) => l
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(","),
            None => "all".into(),
        };
        BTreeMap::from([
            ("backend".to_string(), self.descriptor.clone()),
            ("layers".to_string(), layers),
        ])
    }
    fn score(&self, pair: &DocumentSummaryPair) -> Result<ScoreVector, ScoreError> {
        let dump = self
            .dumps
            .get(&pair.pair_id)
            .ok_or_else(|| ModelError::MissingDump(pair.pair_id.clone()))?;
        Ok(cross_attention_score(pair, dump, self.layers.as_deref())?)
    }
}

fn build_cross_attention(
    spec: &MethodSpec,
    ctx: &BuildContext<'_>,
) -> Result<Box<dyn Scorer>, MethodError> {
    let p: AttentionParams = spec.parse_params()?;
    match backend(spec, ctx, "attention dump")? {
        Backend::Attention { descriptor, dumps } => Ok(Box::new(AttentionScorer {
            descriptor: descriptor.clone(),
            dumps: dumps.clone(),
            layers: p.layers,
        })),
        _ => Err(wrong_kind(spec, "attention dump")),
    }
}

// ---- perplexity gain / pmi ----

struct PerplexityGainScorer {
    backend: Arc<dyn ConditionalBackend>,
    cache: PerplexityCache,
}

impl Scorer for PerplexityGainScorer {
    fn name(&self) -> &str {
        "perplexity_gain"
    }
    fn params(&self) -> BTreeMap<String, String> {
        BTreeMap::from([("backend".to_string(), self.backend.descriptor())])
    }
    fn score(&self, pair: &DocumentSummaryPair) -> Result<ScoreVector, ScoreError> {
        Ok(perplexity_gain(
            pair,
            self.backend.as_ref(),
            Some(&self.cache),
        )?)
    }
    fn concurrency_limit(&self) -> usize {
        // Each pair already fans out N + 1 requests.
        if self.backend.concurrency_limit() == usize::MAX {
            usize::MAX
        } else {
            1
        }
    }
}

fn build_perplexity_gain(
    spec: &MethodSpec,
    ctx: &BuildContext<'_>,
) -> Result<Box<dyn Scorer>, MethodError> {
    no_params(spec)?;
    Ok(Box::new(PerplexityGainScorer {
        backend: conditional(spec, ctx)?,
        cache: PerplexityCache::new(),
    }))
}

struct PmiScorer(Arc<dyn ConditionalBackend>);

impl Scorer for PmiScorer {
    fn name(&self) -> &str {
        "pmi"
    }
    fn params(&self) -> BTreeMap<String, String> {
        BTreeMap::from([("backend".to_string(), self.0.descriptor())])
    }
    fn score(&self, pair: &DocumentSummaryPair) -> Result<ScoreVector, ScoreError> {
        Ok(pmi_score(pair, self.0.as_ref())?)
    }
    fn concurrency_limit(&self) -> usize {
        if self.0.concurrency_limit() == usize::MAX {
            usize::MAX
        } else {
            1
        }
    }
}

fn build_pmi(spec: &MethodSpec, ctx: &BuildContext<'_>) -> Result<Box<dyn Scorer>, MethodError> {
    no_params(spec)?;
    Ok(Box::new(PmiScorer(conditional(spec, ctx)?)))
}
