use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::corpus::{DocumentSummaryPair, GoldLabels};
use crate::score::{rank_descending, ScoreVector};

pub const SRCONLY_SUFFIX: &str = "-srconly";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Keep sentences scoring strictly above `d`.
    Threshold(f64),
    /// Keep the `k` best, earlier index first on ties.
    TopK(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub pair_id: String,
    pub method: String,
    pub selected: Vec<usize>,
    pub rule: SelectionRule,
}

pub fn select_sources(
    scores: &ScoreVector,
    rule: SelectionRule,
) -> Result<SelectionResult, PipelineError> {
    let mut selected: Vec<usize> = match rule {
        SelectionRule::TopK(0) => return Err(PipelineError::NonPositiveK),
        SelectionRule::TopK(k) => rank_descending(&scores.scores)
            .into_iter()
            .take(k)
            .collect(),
        SelectionRule::Threshold(d) => (0..scores.len())
            .filter(|&i| scores.scores[i] > d)
            .collect(),
    };
    selected.sort_unstable();
    Ok(SelectionResult {
        pair_id: scores.pair_id.clone(),
        method: scores.method.clone(),
        selected,
        rule,
    })
}

/// Threshold used by the default rule when a pair has no gold labels.
pub const DEFAULT_THRESHOLD: f64 = 0.0;

/// Applies `rule`, or when absent, top-k with k equal to the gold source
/// count, falling back to a threshold of 0 without gold (or with no gold
/// sources).
pub fn select_with_default(
    scores: &ScoreVector,
    rule: Option<SelectionRule>,
    gold: Option<&GoldLabels>,
) -> Result<SelectionResult, PipelineError> {
    let rule = match (rule, gold.map(GoldLabels::source_count)) {
        (Some(r), _) => r,
        (None, Some(k)) if k > 0 => SelectionRule::TopK(k),
        (None, _) => SelectionRule::Threshold(DEFAULT_THRESHOLD),
    };
    select_sources(scores, rule)
}

/// The document cut down to the selected sentences, re-indexed from zero.
pub fn export_filtered_document(
    pair: &DocumentSummaryPair,
    selection: &SelectionResult,
) -> Result<DocumentSummaryPair, PipelineError> {
    if selection.selected.is_empty() {
        return Err(PipelineError::EmptySelection(pair.pair_id.clone()));
    }
    if let Some(&index) = selection.selected.iter().find(|&&i| i >= pair.len()) {
        return Err(PipelineError::SelectionOutOfRange {
            pair_id: pair.pair_id.clone(),
            index,
            len: pair.len(),
        });
    }
    let mut keep: Vec<usize> = selection.selected.clone();
    keep.sort_unstable();
    keep.dedup();
    let texts: Vec<&str> = keep
        .iter()
        .map(|&i| pair.sentences[i].text.as_str())
        .collect();
    let mut out = DocumentSummaryPair::from_sentences(
        format!("{}{SRCONLY_SUFFIX}", pair.pair_id),
        pair.dataset,
        pair.summary_origin,
        &texts,
        &pair.summary,
    )?;
    out.system_name = pair.system_name.clone();
    Ok(out)
}
