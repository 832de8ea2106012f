//! Externally computed embeddings: token vectors for greedy matching and
//! sentence vectors for cosine scoring.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::SimilarityError;

/// A vector given either as a JSON number array or as base64 of
/// little-endian `f32`s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorRepr {
    Array(Vec<f64>),
    Base64(String),
}

impl VectorRepr {
    pub fn decode(&self) -> Result<Vec<f64>, String> {
        match self {
            Self::Array(v) => Ok(v.clone()),
            Self::Base64(s) => {
                let bytes = STANDARD.decode(s).map_err(|e| e.to_string())?;
                if bytes.len() % 4 != 0 {
                    return Err(format!(
                        "{} bytes is not a whole number of f32",
                        bytes.len()
                    ));
                }
                Ok(bytes
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                    .collect())
            }
        }
    }

    pub fn encode_f32(v: &[f64]) -> Self {
        let bytes: Vec<u8> = v.iter().flat_map(|&x| (x as f32).to_le_bytes()).collect();
        Self::Base64(STANDARD.encode(bytes))
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TextEmbeddingLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    #[serde(default)]
    pub token_vectors: Vec<VectorRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<VectorRepr>,
}

/// On-disk bundle record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingLine {
    pub pair_id: String,
    pub dim: usize,
    pub summary: TextEmbeddingLine,
    pub sentences: Vec<TextEmbeddingLine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idf: Option<HashMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TextEmbedding {
    pub tokens: Option<Vec<String>>,
    pub token_vectors: Vec<Vec<f64>>,
    pub vector: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBundle {
    pub pair_id: String,
    pub dim: usize,
    pub summary: TextEmbedding,
    pub sentences: Vec<TextEmbedding>,
    pub idf: Option<HashMap<String, f64>>,
}

impl EmbeddingBundle {
    /// Per-token idf weights for `text`; uniform without an idf table or
    /// token strings. Tokens missing from the table get the table's maximum.
    pub fn weights(&self, text: &TextEmbedding) -> Vec<f64> {
        match (&self.idf, &text.tokens) {
            (Some(idf), Some(tokens)) => {
                let unseen = idf.values().copied().fold(0.0, f64::max);
                tokens
                    .iter()
                    .map(|t| idf.get(t).copied().unwrap_or(unseen))
                    .collect()
            }
            _ => vec![1.0; text.token_vectors.len()],
        }
    }
}

impl TryFrom<EmbeddingLine> for EmbeddingBundle {
    type Error = String;

    fn try_from(line: EmbeddingLine) -> Result<Self, String> {
        let dim = line.dim;
        if dim == 0 {
            return Err("dim must be at least 1".into());
        }
        let convert = |t: TextEmbeddingLine, what: &str| -> Result<TextEmbedding, String> {
            let check = |v: Vec<f64>| {
                if v.len() == dim {
                    Ok(v)
                } else {
                    Err(format!(
                        "{what}: vector of length {} in a dim-{dim} bundle",
                        v.len()
                    ))
                }
            };
            let token_vectors = t
                .token_vectors
                .iter()
                .map(|r| r.decode().and_then(check))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(tokens) = &t.tokens {
                if tokens.len() != token_vectors.len() {
                    return Err(format!(
                        "{what}: {} tokens but {} token vectors",
                        tokens.len(),
                        token_vectors.len()
                    ));
                }
            }
            let vector = t.vector.map(|r| r.decode().and_then(check)).transpose()?;
            Ok(TextEmbedding {
                tokens: t.tokens,
                token_vectors,
                vector,
            })
        };
        Ok(Self {
            summary: convert(line.summary, "summary")?,
            sentences: line
                .sentences
                .into_iter()
                .enumerate()
                .map(|(i, s)| convert(s, &format!("sentence {i}")))
                .collect::<Result<_, _>>()?,
            pair_id: line.pair_id,
            dim,
            idf: line.idf,
        })
    }
}

pub fn parse_embedding_bundles(
    text: &str,
) -> Result<HashMap<String, EmbeddingBundle>, SimilarityError> {
    let mut out = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| SimilarityError::Malformed {
            line: i + 1,
            message,
        };
        let line: EmbeddingLine =
            serde_json::from_str(raw).map_err(|e| malformed(e.to_string()))?;
        let bundle = EmbeddingBundle::try_from(line).map_err(malformed)?;
        if out.contains_key(&bundle.pair_id) {
            return Err(malformed(format!("duplicate pair_id `{}`", bundle.pair_id)));
        }
        out.insert(bundle.pair_id.clone(), bundle);
    }
    Ok(out)
}

pub fn load_embedding_bundles(
    path: impl AsRef<Path>,
) -> Result<HashMap<String, EmbeddingBundle>, SimilarityError> {
    parse_embedding_bundles(&fs::read_to_string(path)?)
}
