//! Orchestration: run configuration, cached scoring runs, source selection
//! and the append-only annotation store.

mod config;
mod run;
mod select;
mod store;

use thiserror::Error;

pub use config::{RunConfig, SelectionConfig, SplitFilter};
pub use run::{run_methods, score_cache_key, RunSummary};
pub use select::{
    export_filtered_document, select_sources, select_with_default, SelectionResult, SelectionRule,
    SRCONLY_SUFFIX,
};
pub use store::{AnnotationStore, StoreError};

use crate::corpus::CorpusError;
use crate::methods::{MethodError, ScoreError};
use crate::score::DumpError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Method(#[from] MethodError),
    #[error("{method} on pair {pair_id}: {source}")]
    Score {
        method: String,
        pair_id: String,
        #[source]
        source: ScoreError,
    },
    #[error(transparent)]
    Dump(#[from] DumpError),
    #[error("top_k must be positive")]
    NonPositiveK,
    #[error("selection for {0} is empty")]
    EmptySelection(String),
    #[error("selection for {pair_id} names sentence {index}, but the pair has {len}")]
    SelectionOutOfRange {
        pair_id: String,
        index: usize,
        len: usize,
    },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
