use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::corpus::GoldLabels;

/// Histograms of where source sentences sit in their documents.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PositionStats {
    /// 1-based source position → count.
    pub positions: BTreeMap<usize, usize>,
    /// Gap between consecutive source positions → count.
    pub intervals: BTreeMap<usize, usize>,
    /// Number of sources in a pair → number of pairs.
    pub source_counts: BTreeMap<usize, usize>,
}

/// Successive differences of sorted 1-based positions.
pub fn intervals(positions: &[usize]) -> Vec<usize> {
    let mut sorted = positions.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).map(|w| w[1] - w[0]).collect()
}

pub fn position_stats(gold: &[GoldLabels]) -> Result<PositionStats, MetricError> {
    if gold.is_empty() {
        return Err(MetricError::EmptyGold);
    }
    let mut stats = PositionStats::default();
    for g in gold {
        let positions: Vec<usize> = g.source_indices().into_iter().map(|i| i + 1).collect();
        *stats.source_counts.entry(positions.len()).or_default() += 1;
        for &p in &positions {
            *stats.positions.entry(p).or_default() += 1;
        }
        for d in intervals(&positions) {
            *stats.intervals.entry(d).or_default() += 1;
        }
    }
    Ok(stats)
}

impl PositionStats {
    /// Tab-separated `histogram\tbin\tcount` rows for external plotting.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("histogram\tbin\tcount\n");
        for (name, hist) in [
            ("position", &self.positions),
            ("interval", &self.intervals),
            ("source_count", &self.source_counts),
        ] {
            for (bin, count) in hist {
                writeln!(out, "{name}\t{bin}\t{count}").unwrap();
            }
        }
        out
    }
}
