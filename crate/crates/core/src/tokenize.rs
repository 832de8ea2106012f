//! Pluggable word tokenization shared by ROUGE, LexRank, n-gram statistics and
//! the oracle language model.

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

/// Lowercased alphanumeric-run tokenizer with optional Porter stemming.
///
/// Punctuation is never emitted as a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tokenizer {
    pub lowercase: bool,
    pub stem: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self {
            lowercase: true,
            stem: false,
        }
    }
}

impl Tokenizer {
    pub fn stemming() -> Self {
        Self {
            lowercase: true,
            stem: true,
        }
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let stemmer = self.stem.then(|| Stemmer::create(Algorithm::English));
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(|w| {
                let w = if self.lowercase {
                    w.to_lowercase()
                } else {
                    w.to_string()
                };
                match &stemmer {
                    Some(s) => s.stem(&w).into_owned(),
                    None => w,
                }
            })
            .collect()
    }

    /// Short identifier used in cache keys and score metadata.
    pub fn describe(&self) -> String {
        format!("words(lower={},stem={})", self.lowercase, self.stem)
    }
}

/// All contiguous n-grams of `tokens`, in order, with multiplicity.
pub fn ngrams<T: AsRef<str>>(tokens: &[T], n: usize) -> impl Iterator<Item = Vec<&str>> + '_ {
    let count = if n == 0 || tokens.len() < n {
        0
    } else {
        tokens.len() - n + 1
    };
    (0..count).map(move |i| tokens[i..i + n].iter().map(|t| t.as_ref()).collect())
}
