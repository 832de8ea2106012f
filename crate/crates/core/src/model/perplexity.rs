//! Perplexity gain from sentence deletion, and the PMI sentence scorer.

use std::collections::HashMap;
use std::sync::Mutex;

use super::{ConditionalBackend, Conditioning, ModelError};
use crate::corpus::DocumentSummaryPair;
use crate::parallel::bounded_map;
use crate::score::ScoreVector;

/// `exp(-mean(logprobs))`.
pub fn perplexity(token_logprobs: &[f64]) -> Result<f64, ModelError> {
    if token_logprobs.is_empty() {
        return Err(ModelError::EmptySummary);
    }
    if let Some(index) = token_logprobs.iter().position(|l| !l.is_finite()) {
        return Err(ModelError::NonFinite { index });
    }
    let mean = token_logprobs.iter().sum::<f64>() / token_logprobs.len() as f64;
    Ok((-mean).exp())
}

/// Memoized summary perplexities keyed by (pair_id, conditioning).
#[derive(Debug, Default)]
pub struct PerplexityCache {
    entries: Mutex<HashMap<(String, Conditioning), f64>>,
}

impl PerplexityCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, key: &(String, Conditioning)) -> Option<f64> {
        self.entries
            .lock()
            .expect("cache poisoned")
            .get(key)
            .copied()
    }

    fn put(&self, key: (String, Conditioning), value: f64) {
        self.entries
            .lock()
            .expect("cache poisoned")
            .insert(key, value);
    }
}

fn ppl(
    pair: &DocumentSummaryPair,
    conditioning: Conditioning,
    backend: &dyn ConditionalBackend,
    cache: Option<&PerplexityCache>,
) -> Result<f64, ModelError> {
    let key = (pair.pair_id.clone(), conditioning);
    if let Some(v) = cache.and_then(|c| c.get(&key)) {
        return Ok(v);
    }
    let v = perplexity(&backend.logprobs(pair, conditioning)?)?;
    if let Some(c) = cache {
        c.put(key, v);
    }
    Ok(v)
}

/// `scores[i] = PPL(Y | X without s_i) - PPL(Y | X)`.
///
/// Issues exactly N + 1 perplexity evaluations per pair (fewer when `cache`
/// already holds some), up to the backend's concurrency limit at a time.
pub fn perplexity_gain(
    pair: &DocumentSummaryPair,
    backend: &dyn ConditionalBackend,
    cache: Option<&PerplexityCache>,
) -> Result<ScoreVector, ModelError> {
    if pair.len() < 2 {
        return Err(ModelError::SingleSentence(pair.pair_id.clone()));
    }
    let conditions: Vec<Conditioning> = std::iter::once(Conditioning::Full)
        .chain((0..pair.len()).map(Conditioning::Without))
        .collect();
    let values = bounded_map(&conditions, backend.concurrency_limit(), |_, &c| {
        ppl(pair, c, backend, cache)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let full = values[0];
    let scores = values[1..].iter().map(|v| v - full).collect();
    Ok(
        ScoreVector::new(pair.pair_id.clone(), "perplexity_gain", scores).with_metadata(
            [("backend".to_string(), backend.descriptor())]
                .into_iter()
                .collect(),
        ),
    )
}

/// `scores[i] = (Σ_t log p(y_t | s_i) - Σ_t log p(y_t)) / |Y|`.
pub fn pmi_score(
    pair: &DocumentSummaryPair,
    backend: &dyn ConditionalBackend,
) -> Result<ScoreVector, ModelError> {
    let prior = backend.logprobs(pair, Conditioning::Empty)?;
    if prior.is_empty() {
        return Err(ModelError::EmptySummary);
    }
    check_finite(&prior)?;
    let prior_sum: f64 = prior.iter().sum();
    let indices: Vec<usize> = (0..pair.len()).collect();
    let scores = bounded_map(&indices, backend.concurrency_limit(), |_, &i| {
        let lp = backend.logprobs(pair, Conditioning::Only(i))?;
        if lp.len() != prior.len() {
            return Err(ModelError::LengthMismatch {
                found: lp.len(),
                expected: prior.len(),
            });
        }
        check_finite(&lp)?;
        Ok((lp.iter().sum::<f64>() - prior_sum) / prior.len() as f64)
    })
    .into_iter()
    .collect::<Result<Vec<_>, ModelError>>()?;
    Ok(
        ScoreVector::new(pair.pair_id.clone(), "pmi", scores).with_metadata(
            [("backend".to_string(), backend.descriptor())]
                .into_iter()
                .collect(),
        ),
    )
}

fn check_finite(lp: &[f64]) -> Result<(), ModelError> {
    match lp.iter().position(|l| !l.is_finite()) {
        Some(index) => Err(ModelError::NonFinite { index }),
        None => Ok(()),
    }
}
