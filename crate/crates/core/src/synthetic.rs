//! Generated pairs with one known source sentence.
//!
//! The summary is drawn from the tokens of a single designated sentence. Every
//! other sentence uses words that never occur in that sentence, so any
//! reasonable detector should rank the designated sentence first.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Dataset, DocumentSummaryPair, SummaryOrigin};

const SYLLABLES: [&str; 16] = [
    "ba", "ko", "mi", "ne", "tu", "ra", "si", "lo", "ve", "da", "pu", "gi", "fe", "zo", "hu", "ja",
];

/// The `i`-th synthetic word; distinct for distinct `i`.
pub fn word(mut i: usize) -> String {
    let mut w = String::new();
    loop {
        w.push_str(SYLLABLES[i % SYLLABLES.len()]);
        i /= SYLLABLES.len();
        if i == 0 {
            break;
        }
        i -= 1;
    }
    w
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub min_fillers: usize,
    pub max_fillers: usize,
    pub min_sentence_len: usize,
    pub max_sentence_len: usize,
    pub min_summary_len: usize,
    pub max_summary_len: usize,
    pub vocab_size: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            min_fillers: 4,
            max_fillers: 9,
            min_sentence_len: 6,
            max_sentence_len: 14,
            min_summary_len: 3,
            max_summary_len: 6,
            vocab_size: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticPair {
    pub pair: DocumentSummaryPair,
    pub source_index: usize,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub pairs: Vec<SyntheticPair>,
    pub vocabulary: Vec<String>,
}

fn sentence(words: &[&str]) -> String {
    let mut s = words.join(" ");
    if let Some(first) = s.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    s.push('.');
    s
}

pub fn generate(n: usize, seed: u64, config: &SyntheticConfig) -> SyntheticCorpus {
    assert!(config.min_fillers >= 1 && config.min_fillers <= config.max_fillers);
    assert!(config.min_summary_len >= 1 && config.max_summary_len <= config.min_sentence_len);
    assert!(config.min_sentence_len <= config.max_sentence_len);
    assert!(config.vocab_size > 2 * config.max_sentence_len);

    let vocabulary: Vec<String> = (0..config.vocab_size).map(word).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(n);
    for id in 0..n {
        let mut shuffled: Vec<&str> = vocabulary.iter().map(String::as_str).collect();
        shuffled.shuffle(&mut rng);
        let source_len = rng.gen_range(config.min_sentence_len..=config.max_sentence_len);
        let (source_words, rest) = shuffled.split_at(source_len);

        let summary_len = rng.gen_range(config.min_summary_len..=config.max_summary_len);
        let summary_words: Vec<&str> = source_words
            .choose_multiple(&mut rng, summary_len)
            .copied()
            .collect();

        let n_fillers = rng.gen_range(config.min_fillers..=config.max_fillers);
        let mut sentences: Vec<String> = (0..n_fillers)
            .map(|_| {
                let len = rng.gen_range(config.min_sentence_len..=config.max_sentence_len);
                let words: Vec<&str> = (0..len)
                    .map(|_| *rest.choose(&mut rng).expect("non-empty"))
                    .collect();
                sentence(&words)
            })
            .collect();
        let source_index = rng.gen_range(0..=n_fillers);
        sentences.insert(source_index, sentence(source_words));

        let pair = DocumentSummaryPair::from_sentences(
            format!("synthetic-{id:04}"),
            Dataset::Other,
            SummaryOrigin::Reference,
            &sentences,
            sentence(&summary_words),
        )
        .expect("generated pair is valid");
        pairs.push(SyntheticPair { pair, source_index });
    }
    SyntheticCorpus { pairs, vocabulary }
}
