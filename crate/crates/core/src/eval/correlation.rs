use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::score::ScoreVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMode {
    /// One Pearson coefficient over all sentence scores of the split.
    #[default]
    Pooled,
    /// Mean of per-pair coefficients, skipping pairs where either vector is constant.
    PerPairMean,
}

/// Pairwise Pearson coefficients between methods. `None` marks a cell that is
/// undefined because a vector is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub methods: Vec<String>,
    pub mode: CorrelationMode,
    pub values: Vec<Vec<Option<f64>>>,
}

/// Pearson correlation; `None` if either input is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "pearson needs equal lengths");
    let n = x.len() as f64;
    if x.is_empty() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlates `methods`, each a (name, score vectors) entry over the same
/// (pair, sentence) keys.
pub fn correlation_matrix(
    methods: &[(String, Vec<ScoreVector>)],
    mode: CorrelationMode,
) -> Result<CorrelationMatrix, MetricError> {
    let (ref_name, ref_vectors) = methods.first().ok_or(MetricError::NoMethods)?;
    let key_of = |vs: &[ScoreVector]| -> BTreeMap<String, usize> {
        vs.iter().map(|v| (v.pair_id.clone(), v.len())).collect()
    };
    let keys = key_of(ref_vectors);
    let mut aligned: Vec<Vec<Vec<f64>>> = Vec::with_capacity(methods.len());
    for (name, vectors) in methods {
        if key_of(vectors) != keys || vectors.len() != keys.len() {
            return Err(MetricError::KeyMismatch {
                method: name.clone(),
                reference: ref_name.clone(),
            });
        }
        let by_id: BTreeMap<&str, &ScoreVector> =
            vectors.iter().map(|v| (v.pair_id.as_str(), v)).collect();
        aligned.push(by_id.values().map(|v| v.scores.clone()).collect());
    }
    let k = methods.len();
    let mut values = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            let v = match mode {
                CorrelationMode::Pooled => pearson(&aligned[i].concat(), &aligned[j].concat()),
                CorrelationMode::PerPairMean => {
                    let per: Vec<f64> = aligned[i]
                        .iter()
                        .zip(&aligned[j])
                        .filter_map(|(a, b)| pearson(a, b))
                        .collect();
                    (!per.is_empty()).then(|| per.iter().sum::<f64>() / per.len() as f64)
                }
            };
            let v = if i == j { v.map(|_| 1.0) } else { v };
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    Ok(CorrelationMatrix {
        methods: methods.iter().map(|(n, _)| n.clone()).collect(),
        mode,
        values,
    })
}
