//! Sentence scores from decoder cross-attention: the attention flowing from a
//! sentence's source tokens to every summary token, averaged over heads and
//! layers and normalized by both lengths.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::corpus::DocumentSummaryPair;
use crate::score::ScoreVector;
use crate::similarity::VectorRepr;

/// On-disk attention record: `shape = [layers, heads, target_len, source_len]`,
/// row-major weights, and the sentence index of every source token.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttentionLine {
    pub pair_id: String,
    pub shape: [usize; 4],
    pub weights: VectorRepr,
    pub alignment: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionDump {
    pub pair_id: String,
    pub layers: usize,
    pub heads: usize,
    pub target_len: usize,
    pub source_len: usize,
    pub weights: Vec<f64>,
    pub alignment: Vec<usize>,
}

impl AttentionDump {
    pub fn weight(&self, layer: usize, head: usize, target: usize, source: usize) -> f64 {
        let idx =
            ((layer * self.heads + head) * self.target_len + target) * self.source_len + source;
        self.weights[idx]
    }

    fn error(&self, message: impl Into<String>) -> ModelError {
        ModelError::Attention {
            pair_id: self.pair_id.clone(),
            message: message.into(),
        }
    }

    /// Shape and alignment consistency.
    pub fn check_shape(&self) -> Result<(), ModelError> {
        let expected = self.layers * self.heads * self.target_len * self.source_len;
        if self.layers == 0 || self.heads == 0 || self.target_len == 0 || self.source_len == 0 {
            return Err(self.error("every dimension must be positive"));
        }
        if self.weights.len() != expected {
            return Err(self.error(format!(
                "{} weights for shape [{}, {}, {}, {}]",
                self.weights.len(),
                self.layers,
                self.heads,
                self.target_len,
                self.source_len
            )));
        }
        if self.alignment.len() != self.source_len {
            return Err(self.error(format!(
                "alignment covers {} of {} source tokens",
                self.alignment.len(),
                self.source_len
            )));
        }
        if let Some(i) = self.weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(self.error(format!("weight {i} is negative or not finite")));
        }
        Ok(())
    }

    /// Every (layer, head, target) row sums to 1 within `tol`.
    pub fn check_row_stochastic(&self, tol: f64) -> Result<(), ModelError> {
        for (r, row) in self.weights.chunks(self.source_len).enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(self.error(format!("attention row {r} sums to {s}")));
            }
        }
        Ok(())
    }

    /// The single (layer, head) slice as its own dump.
    pub fn slice(&self, layer: usize, head: usize) -> AttentionDump {
        let block = self.target_len * self.source_len;
        let start = (layer * self.heads + head) * block;
        AttentionDump {
            layers: 1,
            heads: 1,
            weights: self.weights[start..start + block].to_vec(),
            ..self.clone()
        }
    }
}

impl TryFrom<AttentionLine> for AttentionDump {
    type Error = String;

    fn try_from(l: AttentionLine) -> Result<Self, String> {
        let [layers, heads, target_len, source_len] = l.shape;
        Ok(Self {
            pair_id: l.pair_id,
            layers,
            heads,
            target_len,
            source_len,
            weights: l.weights.decode()?,
            alignment: l.alignment,
        })
    }
}

/// Parses dumps, checking shape and row-stochasticity (within 1e-4).
pub fn parse_attention_dumps(text: &str) -> Result<HashMap<String, AttentionDump>, ModelError> {
    let mut out = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| ModelError::Malformed {
            line: i + 1,
            message,
        };
        let line: AttentionLine =
            serde_json::from_str(raw).map_err(|e| malformed(e.to_string()))?;
        let dump = AttentionDump::try_from(line).map_err(malformed)?;
        dump.check_shape()?;
        dump.check_row_stochastic(1e-4)?;
        out.insert(dump.pair_id.clone(), dump);
    }
    Ok(out)
}

pub fn load_attention_dumps(
    path: impl AsRef<Path>,
) -> Result<HashMap<String, AttentionDump>, ModelError> {
    parse_attention_dumps(&fs::read_to_string(path)?)
}

/// Scores each sentence by its mean cross-attention to the summary.
///
/// `layers` restricts the average to a subset of layers; `None` uses all.
pub fn cross_attention_score(
    pair: &DocumentSummaryPair,
    dump: &AttentionDump,
    layers: Option<&[usize]>,
) -> Result<ScoreVector, ModelError> {
    dump.check_shape()?;
    let all: Vec<usize> = (0..dump.layers).collect();
    let layers = layers.unwrap_or(&all);
    if layers.is_empty() {
        return Err(dump.error("empty layer selection"));
    }
    if let Some(&l) = layers.iter().find(|&&l| l >= dump.layers) {
        return Err(dump.error(format!("layer {l} out of range")));
    }
    let n = pair.len();
    let mut sizes = vec![0usize; n];
    for (pos, &s) in dump.alignment.iter().enumerate() {
        if s >= n {
            return Err(dump.error(format!(
                "source token {pos} aligned to sentence {s}, pair has {n}"
            )));
        }
        sizes[s] += 1;
    }
    if let Some(gap) = sizes.iter().position(|&c| c == 0) {
        return Err(dump.error(format!("no source tokens aligned to sentence {gap}")));
    }

    // Column sums over target tokens of the head/layer-averaged attention.
    let block = dump.target_len * dump.source_len;
    let mut column = vec![0.0; dump.source_len];
    for &l in layers {
        for h in 0..dump.heads {
            let start = (l * dump.heads + h) * block;
            for row in dump.weights[start..start + block].chunks(dump.source_len) {
                for (c, w) in column.iter_mut().zip(row) {
                    *c += w;
                }
            }
        }
    }
    let n_heads = (layers.len() * dump.heads) as f64;
    let mut totals = vec![0.0; n];
    for (pos, &s) in dump.alignment.iter().enumerate() {
        totals[s] += column[pos] / n_heads;
    }
    let y = dump.target_len as f64;
    let scores = totals
        .iter()
        .zip(&sizes)
        .map(|(t, &size)| t / (size as f64 * y))
        .collect();
    let layer_desc = layers
        .iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(",");
    Ok(
        ScoreVector::new(pair.pair_id.clone(), "cross_attention", scores)
            .with_metadata([("layers".to_string(), layer_desc)].into_iter().collect()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Dataset, SummaryOrigin};

    fn pair(n: usize) -> DocumentSummaryPair {
        let s: Vec<String> = (0..n).map(|i| format!("S{i}.")).collect();
        DocumentSummaryPair::from_sentences("p", Dataset::Xsum, SummaryOrigin::System, &s, "y")
            .unwrap()
    }

    fn dump(shape: [usize; 4], weights: Vec<f64>, alignment: Vec<usize>) -> AttentionDump {
        AttentionDump {
            pair_id: "p".into(),
            layers: shape[0],
            heads: shape[1],
            target_len: shape[2],
            source_len: shape[3],
            weights,
            alignment,
        }
    }

    #[test]
    fn constant_weights_give_constant_scores() {
        let d = dump([2, 3, 4, 5], vec![0.37; 2 * 3 * 4 * 5], vec![0, 0, 1, 2, 2]);
        let v = cross_attention_score(&pair(3), &d, None).unwrap();
        for s in v.scores {
            assert!((s - 0.37).abs() < 1e-12);
        }
    }

    #[test]
    fn concentrated_mass() {
        // all attention on the two tokens of sentence 1, split evenly
        let (t, s) = (3, 5);
        let row = [0.0, 0.5, 0.5, 0.0, 0.0];
        let w: Vec<f64> = (0..t).flat_map(|_| row).collect();
        let d = dump([1, 1, t, s], w, vec![0, 1, 1, 2, 2]);
        let v = cross_attention_score(&pair(3), &d, None).unwrap();
        assert_eq!(v.scores, vec![0.0, 0.5, 0.0]);
        assert!((v.scores[1] - 1.0 / 2.0).abs() < 1e-12, "1/|s_k|");
    }

    #[test]
    fn alignment_gap_and_shape_errors() {
        let d = dump([1, 1, 1, 2], vec![0.5, 0.5], vec![0, 0]);
        assert!(matches!(
            cross_attention_score(&pair(2), &d, None),
            Err(ModelError::Attention { .. })
        ));
        let d = dump([1, 1, 1, 2], vec![0.5], vec![0, 1]);
        assert!(cross_attention_score(&pair(2), &d, None).is_err());
        let d = dump([1, 1, 1, 2], vec![0.5, 0.5], vec![0]);
        assert!(cross_attention_score(&pair(2), &d, None).is_err());
        let d = dump([1, 1, 1, 2], vec![0.5, 0.5], vec![0, 3]);
        assert!(cross_attention_score(&pair(2), &d, None).is_err());
    }

    #[test]
    fn layer_subset() {
        // layer 0 attends to token 0, layer 1 to token 1
        let d = dump([2, 1, 1, 2], vec![1.0, 0.0, 0.0, 1.0], vec![0, 1]);
        let v = cross_attention_score(&pair(2), &d, Some(&[1])).unwrap();
        assert_eq!(v.scores, vec![0.0, 1.0]);
        let v = cross_attention_score(&pair(2), &d, None).unwrap();
        assert_eq!(v.scores, vec![0.5, 0.5]);
        assert!(cross_attention_score(&pair(2), &d, Some(&[2])).is_err());
    }

    #[test]
    fn parser_checks_rows() {
        let ok = r#"{"pair_id":"p","shape":[1,1,1,2],"weights":[0.25,0.75],"alignment":[0,1]}"#;
        assert_eq!(
            parse_attention_dumps(ok).unwrap()["p"].weight(0, 0, 0, 1),
            0.75
        );
        let bad = r#"{"pair_id":"p","shape":[1,1,1,2],"weights":[0.25,0.25],"alignment":[0,1]}"#;
        assert!(parse_attention_dumps(bad).is_err());
    }
}
