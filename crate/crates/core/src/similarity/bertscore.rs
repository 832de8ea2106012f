//! Greedy token matching (BERTScore-style) and sentence-vector cosine.

use std::collections::BTreeMap;

use super::{EmbeddingBundle, Prf, SimilarityError};
use crate::corpus::DocumentSummaryPair;
use crate::score::ScoreVector;

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(SimilarityError::ZeroNorm);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Idf-weighted greedy matching. Recall averages, over reference tokens, the
/// best cosine against any candidate token; precision is the mirror image.
pub fn bertscore(
    candidate: &[Vec<f64>],
    candidate_weights: &[f64],
    reference: &[Vec<f64>],
    reference_weights: &[f64],
) -> Result<Prf, SimilarityError> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(SimilarityError::NoEmbeddings);
    }
    if candidate_weights.len() != candidate.len() || reference_weights.len() != reference.len() {
        return Err(SimilarityError::InvalidParameter(
            "one idf weight per token is required".into(),
        ));
    }
    let sim: Vec<Vec<f64>> = reference
        .iter()
        .map(|r| candidate.iter().map(|c| cosine(r, c)).collect())
        .collect::<Result<_, _>>()?;
    let weighted_max = |weights: &[f64], best: &mut dyn Iterator<Item = f64>| {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(SimilarityError::InvalidParameter(
                "idf weights sum to zero".into(),
            ));
        }
        Ok(weights.iter().zip(best).map(|(w, b)| w * b).sum::<f64>() / total)
    };
    let recall = weighted_max(
        reference_weights,
        &mut sim
            .iter()
            .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
    )?;
    let precision = weighted_max(
        candidate_weights,
        &mut (0..candidate.len()).map(|j| {
            sim.iter()
                .map(|row| row[j])
                .fold(f64::NEG_INFINITY, f64::max)
        }),
    )?;
    // A harmonic mean of values with opposite signs is meaningless; report 0.
    let f1 = if precision * recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Prf {
        precision,
        recall,
        f1,
    })
}

/// F1 with uniform idf weights.
pub fn bertscore_f1(
    candidate: &[Vec<f64>],
    reference: &[Vec<f64>],
) -> Result<f64, SimilarityError> {
    let cw = vec![1.0; candidate.len()];
    let rw = vec![1.0; reference.len()];
    Ok(bertscore(candidate, &cw, reference, &rw)?.f1)
}

fn check_coverage(
    pair: &DocumentSummaryPair,
    bundle: &EmbeddingBundle,
) -> Result<(), SimilarityError> {
    if bundle.sentences.len() != pair.len() {
        return Err(SimilarityError::BundleCoverage {
            pair_id: pair.pair_id.clone(),
            found: bundle.sentences.len(),
            expected: pair.len(),
        });
    }
    Ok(())
}

/// Sentence as candidate, summary as reference; F1 per sentence.
pub fn score_bertscore(
    pair: &DocumentSummaryPair,
    bundle: &EmbeddingBundle,
) -> Result<ScoreVector, SimilarityError> {
    check_coverage(pair, bundle)?;
    let missing = |what: String| SimilarityError::MissingVector {
        pair_id: pair.pair_id.clone(),
        what,
    };
    if bundle.summary.token_vectors.is_empty() {
        return Err(missing("summary token vectors".into()));
    }
    let ref_w = bundle.weights(&bundle.summary);
    let scores = bundle
        .sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if s.token_vectors.is_empty() {
                return Err(missing(format!("token vectors of sentence {i}")));
            }
            Ok(bertscore(
                &s.token_vectors,
                &bundle.weights(s),
                &bundle.summary.token_vectors,
                &ref_w,
            )?
            .f1)
        })
        .collect::<Result<_, _>>()?;
    let idf = if bundle.idf.is_some() {
        "bundle"
    } else {
        "uniform"
    };
    Ok(ScoreVector::new(pair.pair_id.clone(), "bertscore", scores)
        .with_metadata(BTreeMap::from([("idf".to_string(), idf.to_string())])))
}

pub fn score_embedding_cosine(
    pair: &DocumentSummaryPair,
    bundle: &EmbeddingBundle,
) -> Result<ScoreVector, SimilarityError> {
    check_coverage(pair, bundle)?;
    let missing = |what: String| SimilarityError::MissingVector {
        pair_id: pair.pair_id.clone(),
        what,
    };
    let summary = bundle
        .summary
        .vector
        .as_ref()
        .ok_or_else(|| missing("summary vector".into()))?;
    let scores = bundle
        .sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let v = s
                .vector
                .as_ref()
                .ok_or_else(|| missing(format!("sentence vector {i}")))?;
            cosine(v, summary)
        })
        .collect::<Result<_, _>>()?;
    Ok(ScoreVector::new(
        pair.pair_id.clone(),
        "embedding_cosine",
        scores,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::TextEmbedding;
    use proptest::prelude::*;

    #[test]
    fn identical_embeddings_score_one() {
        let v = vec![vec![1.0, 2.0, 0.5], vec![-0.3, 0.1, 0.9]];
        assert!((bertscore_f1(&v, &v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_embeddings_score_zero() {
        let c = vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]];
        let r = vec![vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]];
        assert_eq!(bertscore_f1(&c, &r).unwrap(), 0.0);
    }

    #[test]
    fn two_by_two_by_hand() {
        // cos(c0,r0)=1, cos(c0,r1)=0, cos(c1,r0)=0.6, cos(c1,r1)=0.8
        let c = vec![vec![1.0, 0.0], vec![0.6, 0.8]];
        let r = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        // Enumerate the greedy maxima directly.
        let cos: [[f64; 2]; 2] = [[1.0, 0.0], [0.6, 0.8]]; // cos[c][r]
        let recall = (0..2).map(|j| cos[0][j].max(cos[1][j])).sum::<f64>() / 2.0;
        let precision = (0..2).map(|i| cos[i][0].max(cos[i][1])).sum::<f64>() / 2.0;
        let f1 = 2.0 * precision * recall / (precision + recall);
        assert!((recall - 0.9).abs() < 1e-12 && (precision - 0.9).abs() < 1e-12);
        assert!((bertscore_f1(&c, &r).unwrap() - f1).abs() < 1e-12);

        // Weighted: reference idf [3, 1] → recall = (3·1 + 1·0.8) / 4 = 0.95
        let p = bertscore(&c, &[1.0, 1.0], &r, &[3.0, 1.0]).unwrap();
        assert!((p.recall - 0.95).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            bertscore_f1(&[vec![1.0, 0.0]], &[vec![1.0]]),
            Err(SimilarityError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            bertscore_f1(&[vec![0.0, 0.0]], &[vec![1.0, 0.0]]),
            Err(SimilarityError::ZeroNorm)
        ));
        assert!(bertscore_f1(&[], &[vec![1.0]]).is_err());
    }

    #[test]
    fn cosine_cases() {
        let v = [0.3, -2.0, 1.0];
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine(&v, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 2.0]).unwrap(), 0.0);
    }

    fn bundle(vectors: Vec<Option<Vec<f64>>>, summary: Vec<f64>) -> EmbeddingBundle {
        EmbeddingBundle {
            pair_id: "p".into(),
            dim: summary.len(),
            summary: TextEmbedding {
                vector: Some(summary),
                ..Default::default()
            },
            sentences: vectors
                .into_iter()
                .map(|vector| TextEmbedding {
                    vector,
                    ..Default::default()
                })
                .collect(),
            idf: None,
        }
    }

    fn pair(n: usize) -> DocumentSummaryPair {
        let s: Vec<String> = (0..n).map(|i| format!("S{i}.")).collect();
        DocumentSummaryPair::from_sentences(
            "p",
            crate::Dataset::Other,
            crate::SummaryOrigin::System,
            &s,
            "sum",
        )
        .unwrap()
    }

    #[test]
    fn sentence_cosine_scores() {
        let b = bundle(
            vec![
                Some(vec![1.0, 1.0]),
                Some(vec![1.0, -1.0]),
                Some(vec![-1.0, -1.0]),
            ],
            vec![1.0, 1.0],
        );
        let v = score_embedding_cosine(&pair(3), &b).unwrap();
        assert!((v.scores[0] - 1.0).abs() < 1e-12);
        assert!(v.scores[1].abs() < 1e-12);
        assert!((v.scores[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_sentence_vector_named() {
        let b = bundle(vec![Some(vec![1.0]), None], vec![1.0]);
        match score_embedding_cosine(&pair(2), &b) {
            Err(SimilarityError::MissingVector { what, .. }) => assert!(what.contains('1')),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn f1_bounded(
            c in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..5),
            r in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..5),
        ) {
            prop_assume!(c.iter().chain(&r).all(|v| v.iter().any(|x| x.abs() > 1e-6)));
            let f = bertscore_f1(&c, &r).unwrap();
            prop_assert!((-1.0..=1.0).contains(&f));
            let pos = |v: &Vec<Vec<f64>>| v.iter().map(|x| x.iter().map(|y| y.abs()).collect()).collect::<Vec<Vec<f64>>>();
            let f = bertscore_f1(&pos(&c), &pos(&r)).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }
}
