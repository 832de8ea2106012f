#![allow(dead_code)]

use std::fs::File;
use std::path::{Path, PathBuf};

use srcsent_core::corpus::{write_annotations, write_pairs};
use srcsent_core::synthetic::{generate, SyntheticConfig};
use srcsent_core::{
    AnnotationRecord, Dataset, DocumentSummaryPair, Reconstructability, SummaryOrigin,
};

pub struct Fixture {
    pub corpus: PathBuf,
    pub annotations: PathBuf,
    pub pairs: Vec<DocumentSummaryPair>,
    pub sources: Vec<usize>,
    pub records: Vec<AnnotationRecord>,
}

/// Twelve synthetic pairs across two splits, three annotators each. Annotators
/// `a` and `b` mark the planted source; `c` also marks sentence 0.
pub fn fixture(dir: &Path) -> Fixture {
    let synth = generate(12, 17, &SyntheticConfig::default());
    let mut pairs = Vec::new();
    let mut sources = Vec::new();
    for (i, sp) in synth.pairs.into_iter().enumerate() {
        let mut p = sp.pair;
        (p.dataset, p.summary_origin) = if i % 2 == 0 {
            (Dataset::Xsum, SummaryOrigin::Reference)
        } else {
            (Dataset::Cnndm, SummaryOrigin::System)
        };
        pairs.push(p);
        sources.push(sp.source_index);
    }
    let mut records = Vec::new();
    for (p, &src) in pairs.iter().zip(&sources) {
        for (a, extra) in [("a", None), ("b", None), ("c", Some(0))] {
            let labels = (0..p.len()).map(|i| i == src || Some(i) == extra).collect();
            let verdict = if a == "c" {
                Reconstructability::Partly
            } else {
                Reconstructability::Yes
            };
            records.push(AnnotationRecord {
                pair_id: p.pair_id.clone(),
                annotator_id: a.into(),
                sentence_labels: labels,
                reconstructability: verdict,
            });
        }
    }
    let corpus = dir.join("pairs.jsonl");
    let annotations = dir.join("annotations.jsonl");
    write_pairs(File::create(&corpus).unwrap(), &pairs).unwrap();
    write_annotations(File::create(&annotations).unwrap(), &records).unwrap();
    Fixture {
        corpus,
        annotations,
        pairs,
        sources,
        records,
    }
}
