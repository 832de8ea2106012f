use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use super::{PipelineError, RunConfig};
use crate::corpus::{load_pairs, DocumentSummaryPair};
use crate::methods::{BackendSet, BuildContext, Scorer, ScorerRegistry};
use crate::parallel::bounded_map;
use crate::score::{write_scores, ScoreVector};
use crate::wire::content_hash;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    /// (method label, dump path) in configuration order.
    pub outputs: Vec<(String, PathBuf)>,
    pub vectors: usize,
    pub cache_hits: usize,
    pub computed: usize,
}

/// Cache key over the pair's text, the method name and its parameters,
/// which include the backend descriptor.
pub fn score_cache_key(
    pair: &DocumentSummaryPair,
    method: &str,
    params: &BTreeMap<String, String>,
) -> String {
    let sentences = serde_json::to_vec(&pair.sentence_texts()).expect("strings serialize");
    let params = serde_json::to_vec(params).expect("string map serializes");
    content_hash(&[
        pair.pair_id.as_bytes(),
        &sentences,
        pair.summary.as_bytes(),
        method.as_bytes(),
        &params,
    ])
}

fn write_atomically(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)
}

fn cached_or_score(
    scorer: &dyn Scorer,
    params: &BTreeMap<String, String>,
    pair: &DocumentSummaryPair,
    cache: Option<&Path>,
    hits: &AtomicUsize,
) -> Result<ScoreVector, PipelineError> {
    let path = cache.map(|dir| {
        dir.join(format!(
            "{}.json",
            score_cache_key(pair, scorer.name(), params)
        ))
    });
    if let Some(path) = &path {
        if let Ok(bytes) = fs::read(path) {
            if let Ok(v) = serde_json::from_slice::<ScoreVector>(&bytes) {
                if v.len() == pair.len() && v.check_finite().is_ok() {
                    hits.fetch_add(1, Ordering::Relaxed);
                    return Ok(v);
                }
            }
        }
    }
    let v = scorer.score(pair).map_err(|source| PipelineError::Score {
        method: scorer.name().to_string(),
        pair_id: pair.pair_id.clone(),
        source,
    })?;
    if let Some(path) = &path {
        write_atomically(
            path,
            &serde_json::to_vec(&v).expect("score vector serializes"),
        )?;
    }
    Ok(v)
}

/// Loads the corpus named by `config`, applies its split filters and scores
/// every pair with every configured method.
///
/// All scorers are built before any pair is scored, so a missing backend
/// fails fast. One dump per method is written to
/// `<output_dir>/<label>.scores.jsonl` in corpus order.
pub fn run_methods(
    config: &RunConfig,
    registry: &ScorerRegistry,
    backends: &BackendSet,
) -> Result<RunSummary, PipelineError> {
    config.validate(registry)?;
    let pairs: Vec<DocumentSummaryPair> = load_pairs(config.resolve(&config.corpus))?
        .into_iter()
        .filter(|p| config.filters.keeps(p))
        .collect();

    let ctx = BuildContext {
        backends,
        corpus: &pairs,
    };
    let scorers = config
        .methods
        .iter()
        .map(|spec| {
            registry
                .build(spec, &ctx)
                .map(|s| (spec.label().to_string(), s))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let cache_dir = config
        .cache_dir
        .as_ref()
        .map(|d| config.resolve(d).join("scores"));
    if let Some(dir) = &cache_dir {
        fs::create_dir_all(dir)?;
    }
    let out_dir = config.resolve(&config.output_dir);
    fs::create_dir_all(&out_dir)?;

    let hits = AtomicUsize::new(0);
    let mut summary = RunSummary::default();
    for (label, scorer) in &scorers {
        let params = scorer.params();
        let limit = config.workers.min(scorer.concurrency_limit());
        let results = bounded_map(&pairs, limit, |_, pair| {
            cached_or_score(scorer.as_ref(), &params, pair, cache_dir.as_deref(), &hits)
        });
        let mut vectors = Vec::with_capacity(results.len());
        for r in results {
            let mut v = r?;
            v.method = label.clone();
            for (k, val) in &params {
                v.metadata.entry(k.clone()).or_insert_with(|| val.clone());
            }
            vectors.push(v);
        }
        let mut bytes = Vec::new();
        write_scores(&mut bytes, &vectors)?;
        let path = out_dir.join(format!("{label}.scores.jsonl"));
        write_atomically(&path, &bytes)?;
        summary.vectors += vectors.len();
        summary.outputs.push((label.clone(), path));
    }
    summary.cache_hits = hits.into_inner();
    summary.computed = summary.vectors - summary.cache_hits;
    Ok(summary)
}
