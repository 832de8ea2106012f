use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::corpus::GoldLabels;
use crate::score::{rank_descending, ScoreVector};

/// Gain of a sentence with `v` votes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gain {
    /// `v`
    #[default]
    Linear,
    /// `2^v - 1`
    Exponential,
}

impl Gain {
    fn apply(self, votes: u32) -> f64 {
        match self {
            Self::Linear => votes as f64,
            Self::Exponential => 2f64.powi(votes as i32) - 1.0,
        }
    }
}

fn check_len(scores: &ScoreVector, gold: &GoldLabels) -> Result<(), MetricError> {
    if scores.len() != gold.votes.len() {
        return Err(MetricError::LengthMismatch {
            pair_id: gold.pair_id.clone(),
            scores: scores.len(),
            gold: gold.votes.len(),
        });
    }
    Ok(())
}

/// DCG of `order` (sentence indices, best first).
pub fn dcg(order: &[usize], votes: &[u32], gain: Gain) -> f64 {
    order
        .iter()
        .enumerate()
        .map(|(r, &i)| gain.apply(votes[i]) / ((r + 2) as f64).log2())
        .sum()
}

/// NDCG of the score ranking (ties by ascending index) with votes as graded
/// relevance.
pub fn ndcg(scores: &ScoreVector, gold: &GoldLabels, gain: Gain) -> Result<f64, MetricError> {
    check_len(scores, gold)?;
    let mut ideal: Vec<usize> = (0..gold.votes.len()).collect();
    ideal.sort_by(|&a, &b| gold.votes[b].cmp(&gold.votes[a]).then(a.cmp(&b)));
    let idcg = dcg(&ideal, &gold.votes, gain);
    if idcg <= 0.0 {
        return Err(MetricError::NoVotes(gold.pair_id.clone()));
    }
    Ok(dcg(&scores.ranking(), &gold.votes, gain) / idcg)
}

/// Average precision of the score ranking against the binarized sources.
pub fn average_precision(scores: &ScoreVector, gold: &GoldLabels) -> Result<f64, MetricError> {
    check_len(scores, gold)?;
    let relevant = gold.source_count();
    if relevant == 0 {
        return Err(MetricError::NoRelevant(gold.pair_id.clone()));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (r, i) in rank_descending(&scores.scores).into_iter().enumerate() {
        if gold.binary_sources[i] {
            hits += 1;
            sum += hits as f64 / (r + 1) as f64;
        }
    }
    Ok(sum / relevant as f64)
}

/// Macro-averaged NDCG and MAP of one method over one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub split: String,
    pub ndcg: f64,
    pub map: f64,
    pub n_pairs: usize,
    /// Pairs left out of the NDCG mean because nobody voted for any sentence.
    pub skipped_ndcg: usize,
    /// Pairs left out of MAP because no sentence reached two votes.
    pub skipped_map: usize,
}

/// Evaluates `scores` on the pairs named in `split_pairs`. Pairs are reduced in
/// sorted pair_id order so the result does not depend on input order.
pub fn evaluate(
    method: &str,
    split: &str,
    split_pairs: &[String],
    scores: &[ScoreVector],
    gold: &[GoldLabels],
    gain: Gain,
) -> Result<EvalReport, MetricError> {
    if split_pairs.is_empty() {
        return Err(MetricError::EmptySplit);
    }
    let by_score: HashMap<&str, &ScoreVector> =
        scores.iter().map(|s| (s.pair_id.as_str(), s)).collect();
    let by_gold: HashMap<&str, &GoldLabels> =
        gold.iter().map(|g| (g.pair_id.as_str(), g)).collect();
    let mut ids: Vec<&String> = split_pairs.iter().collect();
    ids.sort();
    ids.dedup();
    let (mut ndcg_sum, mut ndcg_n, mut map_sum, mut map_n) = (0.0, 0usize, 0.0, 0usize);
    for id in &ids {
        let s = by_score
            .get(id.as_str())
            .ok_or_else(|| MetricError::MissingScores(id.to_string()))?;
        let g = by_gold
            .get(id.as_str())
            .ok_or_else(|| MetricError::MissingGold(id.to_string()))?;
        match ndcg(s, g, gain) {
            Ok(v) => {
                ndcg_sum += v;
                ndcg_n += 1;
            }
            Err(MetricError::NoVotes(_)) => {}
            Err(e) => return Err(e),
        }
        match average_precision(s, g) {
            Ok(v) => {
                map_sum += v;
                map_n += 1;
            }
            Err(MetricError::NoRelevant(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let mean = |sum: f64, n: usize| if n == 0 { 0.0 } else { sum / n as f64 };
    Ok(EvalReport {
        method: method.to_string(),
        split: split.to_string(),
        ndcg: mean(ndcg_sum, ndcg_n),
        map: mean(map_sum, map_n),
        n_pairs: ids.len(),
        skipped_ndcg: ids.len() - ndcg_n,
        skipped_map: ids.len() - map_n,
    })
}
