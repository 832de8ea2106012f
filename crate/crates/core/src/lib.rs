//! Detection and evaluation of source sentences: the input sentences that
//! carry the information an abstractive summary expresses.
//!
//! The crate is organized around a registry of interchangeable [`Scorer`]s.
//! Every scorer turns a [`DocumentSummaryPair`] into a [`ScoreVector`] with one
//! relevance value per input sentence; rankings are then evaluated against
//! aggregated human votes with NDCG and MAP.

pub mod corpus;
pub mod eval;
pub mod methods;
pub mod model;
pub mod parallel;
pub mod pipeline;
pub mod score;
pub mod similarity;
pub mod synthetic;
pub mod tokenize;
pub mod wire;

pub use corpus::{
    AnnotationRecord, Dataset, DocumentSummaryPair, GoldLabels, Reconstructability, Sentence,
    SummaryOrigin,
};
pub use methods::{MethodSpec, Scorer, ScorerRegistry};
pub use score::ScoreVector;
pub use tokenize::Tokenizer;
