//! Model-grounded scorers: cross-attention aggregation, perplexity gain and
//! PMI, plus the conditional language model backends they query.

mod attention;
mod backend;
mod perplexity;

use thiserror::Error;

use crate::wire::BackendError;

pub use attention::{
    cross_attention_score, load_attention_dumps, parse_attention_dumps, AttentionDump,
    AttentionLine,
};
pub use backend::{
    conditioning_text, ConditionalBackend, Conditioning, CopyBiasedLm, LogprobDump,
    LogprobDumpLine, WireLogprobs,
};
pub use perplexity::{perplexity, perplexity_gain, pmi_score, PerplexityCache};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("summary has no tokens")]
    EmptySummary,
    #[error("log-probability {index} is not finite")]
    NonFinite { index: usize },
    #[error("pair `{0}` has a single sentence; removing it leaves no conditioning")]
    SingleSentence(String),
    #[error("backend returned {found} target log-probabilities, expected {expected}")]
    LengthMismatch { found: usize, expected: usize },
    #[error("attention dump for `{pair_id}`: {message}")]
    Attention { pair_id: String, message: String },
    #[error("no attention dump for pair `{0}`")]
    MissingDump(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
