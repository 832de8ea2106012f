//! LexRank: stationary distribution of a damped random walk over the
//! tf-idf cosine graph of a document's sentences. Never reads the summary.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use super::SimilarityError;
use crate::corpus::DocumentSummaryPair;
use crate::score::ScoreVector;
use crate::tokenize::Tokenizer;

/// Where inverse document frequencies come from.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum IdfSource {
    /// Each sentence of the pair is a document.
    #[default]
    Sentences,
    /// A precomputed table, e.g. from [`idf_table`] over a loaded corpus,
    /// tagged with a fingerprint for cache keys.
    Table {
        fingerprint: String,
        idf: Arc<HashMap<String, f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexRankConfig {
    pub threshold: f64,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub tokenizer: Tokenizer,
    pub idf: IdfSource,
}

impl Default for LexRankConfig {
    fn default() -> Self {
        Self {
            threshold: 0.1,
            damping: 0.85,
            tol: 1e-6,
            max_iter: 200,
            tokenizer: Tokenizer::default(),
            idf: IdfSource::Sentences,
        }
    }
}

impl LexRankConfig {
    pub fn params(&self) -> BTreeMap<String, String> {
        let idf = match &self.idf {
            IdfSource::Sentences => "sentences".to_string(),
            IdfSource::Table { fingerprint, .. } => format!("table:{fingerprint}"),
        };
        BTreeMap::from([
            ("threshold".into(), self.threshold.to_string()),
            ("damping".into(), self.damping.to_string()),
            ("tol".into(), self.tol.to_string()),
            ("max_iter".into(), self.max_iter.to_string()),
            ("tokenizer".into(), self.tokenizer.describe()),
            ("idf".into(), idf),
        ])
    }
}

/// Smoothed idf, `ln((1 + D) / (1 + df)) + 1`, over token sets.
pub fn idf_table<'a, I>(documents: I) -> HashMap<String, f64>
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut df: HashMap<&str, usize> = HashMap::new();
    let mut n_docs = 0usize;
    for doc in documents {
        n_docs += 1;
        let uniq: HashSet<&str> = doc.iter().map(String::as_str).collect();
        for t in uniq {
            *df.entry(t).or_default() += 1;
        }
    }
    df.into_iter()
        .map(|(t, d)| {
            let idf = ((1.0 + n_docs as f64) / (1.0 + d as f64)).ln() + 1.0;
            (t.to_string(), idf)
        })
        .collect()
}

/// Idf-modified cosine between every pair of token lists.
pub fn tfidf_similarity_matrix(
    sentences: &[Vec<String>],
    idf: &HashMap<String, f64>,
) -> Vec<Vec<f64>> {
    let unseen = idf.values().copied().fold(1.0, f64::max);
    // Ordered maps keep floating-point summation order fixed across runs.
    let weighted: Vec<BTreeMap<&str, f64>> = sentences
        .iter()
        .map(|toks| {
            let mut tf: BTreeMap<&str, f64> = BTreeMap::new();
            for t in toks {
                *tf.entry(t.as_str()).or_default() += 1.0;
            }
            tf.into_iter()
                .map(|(t, f)| (t, f * idf.get(t).copied().unwrap_or(unseen)))
                .collect()
        })
        .collect();
    let norms: Vec<f64> = weighted
        .iter()
        .map(|w| w.values().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let n = sentences.len();
    let mut sim = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            if norms[i] == 0.0 || norms[j] == 0.0 {
                continue;
            }
            let (small, large) = if weighted[i].len() <= weighted[j].len() {
                (&weighted[i], &weighted[j])
            } else {
                (&weighted[j], &weighted[i])
            };
            let dot: f64 = small
                .iter()
                .filter_map(|(t, a)| large.get(t).map(|b| a * b))
                .sum();
            let v = dot / (norms[i] * norms[j]);
            sim[i][j] = v;
            sim[j][i] = v;
        }
    }
    sim
}

/// Row-stochastic damped transition matrix. Edges below `threshold` are
/// dropped; rows left empty jump uniformly.
pub fn transition_matrix(similarity: &[Vec<f64>], threshold: f64, damping: f64) -> Vec<Vec<f64>> {
    let n = similarity.len();
    let teleport = (1.0 - damping) / n as f64;
    similarity
        .iter()
        .map(|row| {
            let kept: Vec<f64> = row
                .iter()
                .map(|&s| if s >= threshold { s } else { 0.0 })
                .collect();
            let total: f64 = kept.iter().sum();
            kept.iter()
                .map(|&s| {
                    let p = if total > 0.0 {
                        s / total
                    } else {
                        1.0 / n as f64
                    };
                    damping * p + teleport
                })
                .collect()
        })
        .collect()
}

/// Power iteration for the stationary distribution `v = Mᵀ v`.
pub fn stationary_distribution(
    similarity: &[Vec<f64>],
    config: &LexRankConfig,
) -> Result<Vec<f64>, SimilarityError> {
    if !(config.damping > 0.0 && config.damping < 1.0) {
        return Err(SimilarityError::InvalidParameter(format!(
            "damping {} not in (0, 1)",
            config.damping
        )));
    }
    let n = similarity.len();
    if n == 0 {
        return Err(SimilarityError::InvalidParameter("no sentences".into()));
    }
    let m = transition_matrix(similarity, config.threshold, config.damping);
    let mut v = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..config.max_iter {
        let mut next = vec![0.0; n];
        for (i, row) in m.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                next[j] += v[i] * p;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        residual = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        if residual < config.tol {
            return Ok(v);
        }
    }
    Err(SimilarityError::NotConverged {
        iterations: config.max_iter,
        residual,
    })
}

pub fn lexrank(
    pair: &DocumentSummaryPair,
    config: &LexRankConfig,
) -> Result<ScoreVector, SimilarityError> {
    let tokens: Vec<Vec<String>> = pair
        .sentences
        .iter()
        .map(|s| config.tokenizer.tokenize(&s.text))
        .collect();
    let local;
    let idf = match &config.idf {
        IdfSource::Sentences => {
            local = idf_table(tokens.iter().map(Vec::as_slice));
            &local
        }
        IdfSource::Table { idf, .. } => idf.as_ref(),
    };
    let sim = tfidf_similarity_matrix(&tokens, idf);
    let scores = stationary_distribution(&sim, config)?;
    Ok(ScoreVector::new(pair.pair_id.clone(), "lexrank", scores).with_metadata(config.params()))
}
