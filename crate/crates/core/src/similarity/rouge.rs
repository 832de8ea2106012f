use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::SimilarityError;
use crate::corpus::DocumentSummaryPair;
use crate::score::ScoreVector;
use crate::tokenize::{ngrams, Tokenizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RougeVariant {
    R1,
    R2,
    Rl,
}

impl RougeVariant {
    pub const ALL: [RougeVariant; 3] = [Self::R1, Self::R2, Self::Rl];

    pub fn name(self) -> &'static str {
        match self {
            Self::R1 => "r1",
            Self::R2 => "r2",
            Self::Rl => "rl",
        }
    }
}

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

pub fn rouge<S: AsRef<str>>(
    candidate: &[S],
    reference: &[S],
    variant: RougeVariant,
) -> Result<Prf, SimilarityError> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(SimilarityError::EmptyTokens);
    }
    Ok(match variant {
        RougeVariant::R1 => rouge_n(candidate, reference, 1),
        RougeVariant::R2 => rouge_n(candidate, reference, 2),
        RougeVariant::Rl => {
            let lcs = lcs_len(candidate, reference) as f64;
            Prf::new(lcs / candidate.len() as f64, lcs / reference.len() as f64)
        }
    })
}

fn rouge_n<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> Prf {
    let mut ref_counts: HashMap<Vec<&str>, usize> = HashMap::new();
    let mut ref_total = 0;
    for g in ngrams(reference, n) {
        *ref_counts.entry(g).or_default() += 1;
        ref_total += 1;
    }
    let mut cand_total = 0;
    let mut overlap = 0;
    for g in ngrams(candidate, n) {
        cand_total += 1;
        if let Some(c) = ref_counts.get_mut(&g) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    let ratio = |den: usize| {
        if den == 0 {
            0.0
        } else {
            overlap as f64 / den as f64
        }
    };
    Prf::new(ratio(cand_total), ratio(ref_total))
}

fn lcs_len<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x.as_ref() == y.as_ref() {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// How per-variant F1 values combine into one sentence score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RougeAggregation {
    /// Mean of R1, R2 and RL F1.
    #[default]
    Mean,
    Single(RougeVariant),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RougeConfig {
    pub aggregation: RougeAggregation,
    pub tokenizer: Tokenizer,
}

impl RougeConfig {
    pub fn params(&self) -> BTreeMap<String, String> {
        let agg = match &self.aggregation {
            RougeAggregation::Mean => "mean".to_string(),
            RougeAggregation::Single(v) => v.name().to_string(),
        };
        BTreeMap::from([
            ("aggregation".to_string(), agg),
            ("tokenizer".to_string(), self.tokenizer.describe()),
        ])
    }
}

/// Scores each sentence (candidate) against the summary (reference).
pub fn score_rouge(
    pair: &DocumentSummaryPair,
    config: &RougeConfig,
) -> Result<ScoreVector, SimilarityError> {
    let summary = config.tokenizer.tokenize(&pair.summary);
    if summary.is_empty() {
        return Err(SimilarityError::EmptySummary);
    }
    let variants: &[RougeVariant] = match &config.aggregation {
        RougeAggregation::Mean => &RougeVariant::ALL,
        RougeAggregation::Single(v) => std::slice::from_ref(v),
    };
    let mut scores = Vec::with_capacity(pair.len());
    for s in &pair.sentences {
        let toks = config.tokenizer.tokenize(&s.text);
        if toks.is_empty() {
            return Err(SimilarityError::EmptySentence(s.index));
        }
        let mut sum = 0.0;
        for &v in variants {
            sum += rouge(&toks, &summary, v)?.f1;
        }
        scores.push(sum / variants.len() as f64);
    }
    Ok(ScoreVector::new(pair.pair_id.clone(), "rouge", scores).with_metadata(config.params()))
}
