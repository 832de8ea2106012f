//! Ranking evaluation against annotator votes, agreement, method correlation
//! and source-position statistics.

mod agreement;
mod correlation;
mod positions;
mod ranking;

use thiserror::Error;

pub use agreement::{krippendorff_alpha, reconstructability_units, source_label_units};
pub use correlation::{correlation_matrix, pearson, CorrelationMatrix, CorrelationMode};
pub use positions::{intervals, position_stats, PositionStats};
pub use ranking::{average_precision, dcg, evaluate, ndcg, EvalReport, Gain};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("pair `{pair_id}`: {scores} scores but {gold} gold entries")]
    LengthMismatch {
        pair_id: String,
        scores: usize,
        gold: usize,
    },
    #[error("pair `{0}` has no votes; ideal DCG is zero")]
    NoVotes(String),
    #[error("pair `{0}` has no relevant sentence")]
    NoRelevant(String),
    #[error("no scores for pair `{0}`")]
    MissingScores(String),
    #[error("no gold labels for pair `{0}`")]
    MissingGold(String),
    #[error("split is empty")]
    EmptySplit,
    #[error("no pairable values: at least two annotators must overlap on one unit")]
    NoPairableValues,
    #[error("method `{method}` does not cover the same (pair, sentence) keys as `{reference}`")]
    KeyMismatch { method: String, reference: String },
    #[error("need at least one method")]
    NoMethods,
    #[error("no gold labels")]
    EmptyGold,
}
