//! Corpus-level statistics: sizes, source-sentence ratios, abstractiveness and
//! reconstructability breakdowns.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{AnnotationRecord, CorpusError, DocumentSummaryPair, GoldLabels, Reconstructability};
use crate::tokenize::{ngrams, Tokenizer};

/// Fraction of summary n-grams (with multiplicity) that never occur in the document.
pub fn novel_ngram_rate(
    pair: &DocumentSummaryPair,
    n: usize,
    tokenizer: &Tokenizer,
) -> Result<f64, CorpusError> {
    if !(1..=4).contains(&n) {
        return Err(CorpusError::BadOrder(n));
    }
    let summary = tokenizer.tokenize(&pair.summary);
    if summary.len() < n {
        return Err(CorpusError::SummaryTooShort {
            tokens: summary.len(),
            n,
        });
    }
    let doc_tokens = tokenizer.tokenize(&pair.document_text());
    let doc: HashSet<Vec<&str>> = ngrams(&doc_tokens, n).collect();
    let mut total = 0usize;
    let mut novel = 0usize;
    for g in ngrams(&summary, n) {
        total += 1;
        if !doc.contains(&g) {
            novel += 1;
        }
    }
    Ok(novel as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_pairs: usize,
    pub mean_sentences: f64,
    pub mean_source_sentences: f64,
    pub source_sentence_ratio: f64,
    pub mean_input_tokens: f64,
    pub mean_summary_tokens: f64,
    /// Mean per-pair novel n-gram rate for n = 1..=4. Pairs whose summary is
    /// shorter than n are left out of that n's mean.
    pub novel_ngram_rate: BTreeMap<usize, f64>,
}

pub fn corpus_stats(
    pairs: &[DocumentSummaryPair],
    gold: &[GoldLabels],
    tokenizer: &Tokenizer,
) -> Result<CorpusStats, CorpusError> {
    if pairs.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let by_id: HashMap<&str, &GoldLabels> = gold.iter().map(|g| (g.pair_id.as_str(), g)).collect();
    let n = pairs.len() as f64;
    let mut sentences = 0.0;
    let mut sources = 0.0;
    let mut input_tokens = 0.0;
    let mut summary_tokens = 0.0;
    let mut novel: BTreeMap<usize, (f64, usize)> = (1..=4).map(|k| (k, (0.0, 0))).collect();
    for p in pairs {
        let g = by_id
            .get(p.pair_id.as_str())
            .ok_or_else(|| CorpusError::MissingGold(p.pair_id.clone()))?;
        sentences += p.len() as f64;
        sources += g.source_count() as f64;
        input_tokens += tokenizer.tokenize(&p.document_text()).len() as f64;
        summary_tokens += tokenizer.tokenize(&p.summary).len() as f64;
        for (&k, acc) in novel.iter_mut() {
            match novel_ngram_rate(p, k, tokenizer) {
                Ok(r) => {
                    acc.0 += r;
                    acc.1 += 1;
                }
                Err(CorpusError::SummaryTooShort { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let mean_sentences = sentences / n;
    let mean_source_sentences = sources / n;
    Ok(CorpusStats {
        n_pairs: pairs.len(),
        mean_sentences,
        mean_source_sentences,
        source_sentence_ratio: mean_source_sentences / mean_sentences,
        mean_input_tokens: input_tokens / n,
        mean_summary_tokens: summary_tokens / n,
        novel_ngram_rate: novel
            .into_iter()
            .filter(|(_, (_, c))| *c > 0)
            .map(|(k, (sum, c))| (k, sum / c as f64))
            .collect(),
    })
}

/// What one observation in the reconstructability table is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictUnit {
    /// Every annotator verdict counts once.
    #[default]
    Record,
    /// One verdict per pair: the most frequent one, ties going to the less
    /// reconstructable verdict.
    PairMajority,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructabilityRow {
    pub split: String,
    pub n: usize,
    pub yes: f64,
    pub partly: f64,
    pub no: f64,
}

pub fn reconstructability_table(
    splits: &[(String, Vec<AnnotationRecord>)],
    unit: VerdictUnit,
) -> Result<Vec<ReconstructabilityRow>, CorpusError> {
    splits
        .iter()
        .map(|(split, records)| {
            if records.is_empty() {
                return Err(CorpusError::EmptySplit(split.clone()));
            }
            let verdicts: Vec<Reconstructability> = match unit {
                VerdictUnit::Record => records.iter().map(|r| r.reconstructability).collect(),
                VerdictUnit::PairMajority => pair_majorities(records),
            };
            let count = |v| verdicts.iter().filter(|&&x| x == v).count() as f64;
            let n = verdicts.len() as f64;
            Ok(ReconstructabilityRow {
                split: split.clone(),
                n: verdicts.len(),
                yes: count(Reconstructability::Yes) / n,
                partly: count(Reconstructability::Partly) / n,
                no: count(Reconstructability::No) / n,
            })
        })
        .collect()
}

fn pair_majorities(records: &[AnnotationRecord]) -> Vec<Reconstructability> {
    let mut by_pair: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
    for r in records {
        by_pair.entry(&r.pair_id).or_default()[r.reconstructability as usize] += 1;
    }
    by_pair
        .values()
        .map(|c| {
            // Scan from `No` down so ties land on the less reconstructable verdict.
            let mut best = Reconstructability::No;
            for v in [Reconstructability::Partly, Reconstructability::Yes] {
                if c[v as usize] > c[best as usize] {
                    best = v;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Dataset, SummaryOrigin};

    fn pair(sents: &[&str], summary: &str) -> DocumentSummaryPair {
        DocumentSummaryPair::from_sentences(
            "p",
            Dataset::Xsum,
            SummaryOrigin::Reference,
            sents,
            summary,
        )
        .unwrap()
    }

    #[test]
    fn copied_summary_has_no_novel_ngrams() {
        let p = pair(
            &["The quick brown fox jumps.", "Other text."],
            "the quick brown fox jumps",
        );
        for n in 1..=4 {
            assert_eq!(novel_ngram_rate(&p, n, &Tokenizer::default()).unwrap(), 0.0);
        }
    }

    #[test]
    fn disjoint_summary_is_fully_novel() {
        let p = pair(&["alpha beta."], "gamma delta");
        assert_eq!(novel_ngram_rate(&p, 1, &Tokenizer::default()).unwrap(), 1.0);
    }

    #[test]
    fn half_novel_bigrams() {
        let p = pair(&["a b d c"], "a b c");
        // summary bigrams: (a,b) present, (b,c) absent
        assert_eq!(novel_ngram_rate(&p, 2, &Tokenizer::default()).unwrap(), 0.5);
    }

    #[test]
    fn short_summary_errors() {
        let p = pair(&["a b c"], "a");
        assert!(matches!(
            novel_ngram_rate(&p, 2, &Tokenizer::default()),
            Err(CorpusError::SummaryTooShort { tokens: 1, n: 2 })
        ));
        assert!(matches!(
            novel_ngram_rate(&p, 5, &Tokenizer::default()),
            Err(CorpusError::BadOrder(5))
        ));
    }

    #[test]
    fn single_pair_stats() {
        let sents: Vec<String> = (0..10).map(|i| format!("s{i}.")).collect();
        let p = DocumentSummaryPair::from_sentences(
            "p",
            Dataset::Xsum,
            SummaryOrigin::Reference,
            &sents,
            "s1",
        )
        .unwrap();
        let mut votes = vec![0; 10];
        votes[..3].fill(3);
        let g = GoldLabels::from_votes("p", votes, 3);
        let st = corpus_stats(&[p], &[g], &Tokenizer::default()).unwrap();
        assert_eq!(st.mean_sentences, 10.0);
        assert_eq!(st.mean_source_sentences, 3.0);
        assert!((st.source_sentence_ratio - 0.3).abs() < 1e-12);
        assert_eq!(st.novel_ngram_rate.get(&1), Some(&0.0));
        assert!(!st.novel_ngram_rate.contains_key(&2));
    }

    #[test]
    fn empty_and_missing_gold() {
        assert!(matches!(
            corpus_stats(&[], &[], &Tokenizer::default()),
            Err(CorpusError::EmptyCorpus)
        ));
        let p = pair(&["a."], "a");
        assert!(matches!(
            corpus_stats(&[p], &[], &Tokenizer::default()),
            Err(CorpusError::MissingGold(_))
        ));
    }

    fn rec(pair: &str, who: &str, v: Reconstructability) -> AnnotationRecord {
        AnnotationRecord {
            pair_id: pair.into(),
            annotator_id: who.into(),
            sentence_labels: vec![true],
            reconstructability: v,
        }
    }

    #[test]
    fn table_fractions() {
        use Reconstructability::*;
        let splits = vec![
            (
                "all-yes".to_string(),
                vec![rec("p", "a", Yes), rec("q", "a", Yes)],
            ),
            (
                "mixed".to_string(),
                vec![rec("p", "a", Yes), rec("p", "b", No)],
            ),
        ];
        let rows = reconstructability_table(&splits, VerdictUnit::Record).unwrap();
        assert_eq!((rows[0].yes, rows[0].partly, rows[0].no), (1.0, 0.0, 0.0));
        assert_eq!((rows[1].yes, rows[1].partly, rows[1].no), (0.5, 0.0, 0.5));
        for r in &rows {
            assert!((r.yes + r.partly + r.no - 1.0).abs() < 1e-9);
        }
        let maj = reconstructability_table(&splits, VerdictUnit::PairMajority).unwrap();
        assert_eq!((maj[1].yes, maj[1].no), (0.0, 1.0), "tie resolves to `no`");
    }

    #[test]
    fn empty_split_errors() {
        let splits = vec![("x".to_string(), vec![])];
        assert!(matches!(
            reconstructability_table(&splits, VerdictUnit::Record),
            Err(CorpusError::EmptySplit(_))
        ));
    }
}
