//! Krippendorff's alpha for nominal data with missing values.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::Hash;

use super::MetricError;
use crate::corpus::{AnnotationRecord, Reconstructability};

/// Nominal alpha over `units`, each a row of per-annotator values where
/// `None` marks a missing judgement. Units with fewer than two values are not
/// pairable and are ignored.
///
/// When every pairable value falls in a single category the expected
/// disagreement is zero; this returns 1.0 in that case.
pub fn krippendorff_alpha<L>(units: &[Vec<Option<L>>]) -> Result<f64, MetricError>
where
    L: Eq + Hash + Clone,
{
    // Coincidence matrix o[c][k], built over label ids.
    let mut ids: HashMap<L, usize> = HashMap::new();
    let mut coincidence: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut n_total = 0.0;
    for unit in units {
        let values: Vec<usize> = unit
            .iter()
            .flatten()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l.clone()).or_insert(next)
            })
            .collect();
        let m = values.len();
        if m < 2 {
            continue;
        }
        n_total += m as f64;
        let weight = 1.0 / (m - 1) as f64;
        for (i, &c) in values.iter().enumerate() {
            for (j, &k) in values.iter().enumerate() {
                if i != j {
                    *coincidence.entry((c, k)).or_default() += weight;
                }
            }
        }
    }
    if n_total == 0.0 {
        return Err(MetricError::NoPairableValues);
    }
    let mut marginals = vec![0.0; ids.len()];
    let mut observed = 0.0;
    for (&(c, k), &o) in &coincidence {
        marginals[c] += o;
        if c != k {
            observed += o;
        }
    }
    let observed = observed / n_total;
    let sum_sq: f64 = marginals.iter().map(|m| m * m).sum();
    let expected = (n_total * n_total - sum_sq) / (n_total * (n_total - 1.0));
    if expected == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - observed / expected)
}

fn annotator_columns(records: &[AnnotationRecord]) -> BTreeMap<&str, usize> {
    let names: BTreeSet<&str> = records.iter().map(|r| r.annotator_id.as_str()).collect();
    names.into_iter().enumerate().map(|(i, n)| (n, i)).collect()
}

/// One unit per (pair, sentence); one column per annotator.
pub fn source_label_units(records: &[AnnotationRecord]) -> Vec<Vec<Option<bool>>> {
    let cols = annotator_columns(records);
    let mut units: BTreeMap<(&str, usize), Vec<Option<bool>>> = BTreeMap::new();
    for r in records {
        let c = cols[r.annotator_id.as_str()];
        for (i, &l) in r.sentence_labels.iter().enumerate() {
            units
                .entry((r.pair_id.as_str(), i))
                .or_insert_with(|| vec![None; cols.len()])[c] = Some(l);
        }
    }
    units.into_values().collect()
}

/// One unit per pair; one column per annotator.
pub fn reconstructability_units(
    records: &[AnnotationRecord],
) -> Vec<Vec<Option<Reconstructability>>> {
    let cols = annotator_columns(records);
    let mut units: BTreeMap<&str, Vec<Option<Reconstructability>>> = BTreeMap::new();
    for r in records {
        units
            .entry(r.pair_id.as_str())
            .or_insert_with(|| vec![None; cols.len()])[cols[r.annotator_id.as_str()]] =
            Some(r.reconstructability);
    }
    units.into_values().collect()
}
