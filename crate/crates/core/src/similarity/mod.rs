//! Summary-to-sentence similarity scorers and the summary-agnostic LexRank
//! baseline.

mod bertscore;
mod embeddings;
mod lexrank;
mod prompt;
mod rouge;

use thiserror::Error;

use crate::wire::BackendError;

pub use bertscore::{bertscore, bertscore_f1, cosine, score_bertscore, score_embedding_cosine};
pub use embeddings::{
    load_embedding_bundles, parse_embedding_bundles, EmbeddingBundle, EmbeddingLine, TextEmbedding,
    VectorRepr,
};
pub use lexrank::{
    idf_table, lexrank, stationary_distribution, tfidf_similarity_matrix, transition_matrix,
    IdfSource, LexRankConfig,
};
pub use prompt::{
    parse_score, prompt_llm_score, render_prompt, CompletionBackend, CompletionDump,
    CompletionRequest, PromptConfig, WireCompletion, PROMPT_TEMPLATE,
};
pub use rouge::{rouge, score_rouge, Prf, RougeAggregation, RougeConfig, RougeVariant};

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("empty token list")]
    EmptyTokens,
    #[error("sentence {0} has no tokens")]
    EmptySentence(usize),
    #[error("summary has no tokens")]
    EmptySummary,
    #[error("vector dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("empty embedding list")]
    NoEmbeddings,
    #[error("embedding bundle for `{pair_id}` is missing {what}")]
    MissingVector { pair_id: String, what: String },
    #[error("no embedding bundle for pair `{0}`")]
    MissingBundle(String),
    #[error("bundle for `{pair_id}` covers {found} sentences, pair has {expected}")]
    BundleCoverage {
        pair_id: String,
        found: usize,
        expected: usize,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("power iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("sentence {index}: no score in [0, 100] after {attempts} attempt(s), last completion {last:?}")]
    Unparseable {
        index: usize,
        attempts: u32,
        last: String,
    },
    #[error("sentence {index}: {source}")]
    Backend {
        index: usize,
        #[source]
        source: BackendError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
