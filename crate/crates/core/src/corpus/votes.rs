use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{AnnotationRecord, CorpusError, DocumentSummaryPair, GoldLabels, Reconstructability};

/// Counts `contributes` labels per sentence across annotators.
pub fn aggregate_votes(
    pair: &DocumentSummaryPair,
    records: &[AnnotationRecord],
) -> Result<GoldLabels, CorpusError> {
    if records.is_empty() {
        return Err(CorpusError::NoRecords(pair.pair_id.clone()));
    }
    let mut votes = vec![0u32; pair.len()];
    for r in records {
        if r.pair_id != pair.pair_id {
            return Err(CorpusError::WrongPair {
                expected: pair.pair_id.clone(),
                found: r.pair_id.clone(),
            });
        }
        if r.sentence_labels.len() != pair.len() {
            return Err(CorpusError::LabelCount {
                pair_id: r.pair_id.clone(),
                annotator_id: r.annotator_id.clone(),
                found: r.sentence_labels.len(),
                expected: pair.len(),
            });
        }
        for (v, &l) in votes.iter_mut().zip(&r.sentence_labels) {
            *v += u32::from(l);
        }
    }
    Ok(GoldLabels::from_votes(
        pair.pair_id.clone(),
        votes,
        records.len() as u32,
    ))
}

/// Gold labels for every pair that has at least one record, in corpus order.
/// Records naming a pair outside `pairs` are an error.
pub fn gold_labels(
    pairs: &[DocumentSummaryPair],
    records: &[AnnotationRecord],
) -> Result<Vec<GoldLabels>, CorpusError> {
    let mut by_pair: HashMap<&str, Vec<AnnotationRecord>> = HashMap::new();
    for r in records {
        by_pair
            .entry(r.pair_id.as_str())
            .or_default()
            .push(r.clone());
    }
    let mut out = Vec::new();
    for p in pairs {
        if let Some(rs) = by_pair.remove(p.pair_id.as_str()) {
            out.push(aggregate_votes(p, &rs)?);
        }
    }
    if let Some(unknown) = by_pair.keys().min() {
        return Err(CorpusError::InvalidPair {
            pair_id: unknown.to_string(),
            message: "annotated but not in the corpus".into(),
        });
    }
    Ok(out)
}

/// Which reconstructability verdicts count as acceptable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconstructPolicy {
    #[default]
    StrictYes,
    YesOrPartly,
}

impl ReconstructPolicy {
    fn accepts(self, v: Reconstructability) -> bool {
        match self {
            Self::StrictYes => v == Reconstructability::Yes,
            Self::YesOrPartly => v != Reconstructability::No,
        }
    }
}

/// True when acceptable verdicts form a strict majority. Ties exclude.
pub fn majority_keeps(verdicts: &[Reconstructability], policy: ReconstructPolicy) -> bool {
    let accepted = verdicts.iter().filter(|&&v| policy.accepts(v)).count();
    2 * accepted > verdicts.len()
}

/// Keeps pairs whose annotators, by strict majority, judged the summary
/// reconstructable under `policy`.
pub fn filter_reconstructable(
    pairs: &[DocumentSummaryPair],
    records: &[AnnotationRecord],
    policy: ReconstructPolicy,
) -> Result<Vec<DocumentSummaryPair>, CorpusError> {
    let mut verdicts: HashMap<&str, Vec<Reconstructability>> = HashMap::new();
    for r in records {
        verdicts
            .entry(r.pair_id.as_str())
            .or_default()
            .push(r.reconstructability);
    }
    let mut kept = Vec::new();
    for p in pairs {
        let v = verdicts
            .get(p.pair_id.as_str())
            .ok_or_else(|| CorpusError::NoRecords(p.pair_id.clone()))?;
        if majority_keeps(v, policy) {
            kept.push(p.clone());
        }
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Dataset, SummaryOrigin};
    use Reconstructability::*;

    fn pair(id: &str, n: usize) -> DocumentSummaryPair {
        let sents: Vec<String> = (0..n).map(|i| format!("Sentence {i}.")).collect();
        DocumentSummaryPair::from_sentences(
            id,
            Dataset::Xsum,
            SummaryOrigin::Reference,
            &sents,
            "S.",
        )
        .unwrap()
    }

    fn rec(pair: &str, who: &str, labels: &[u8], v: Reconstructability) -> AnnotationRecord {
        AnnotationRecord {
            pair_id: pair.into(),
            annotator_id: who.into(),
            sentence_labels: labels.iter().map(|&l| l == 1).collect(),
            reconstructability: v,
        }
    }

    #[test]
    fn unanimous_votes() {
        let p = pair("p", 2);
        let recs: Vec<_> = ["a", "b", "c"]
            .iter()
            .map(|w| rec("p", w, &[1, 0], Yes))
            .collect();
        let g = aggregate_votes(&p, &recs).unwrap();
        assert_eq!(g.votes, vec![3, 0]);
        assert!(g.binary_sources[0]);
        assert_eq!(g.n_annotators, 3);
    }

    #[test]
    fn single_vote_is_not_a_source() {
        let p = pair("p", 2);
        let g = aggregate_votes(&p, &[rec("p", "a", &[1, 0], Yes)]).unwrap();
        assert_eq!(g.votes[0], 1);
        assert!(!g.binary_sources[0]);
    }

    #[test]
    fn mixed_votes_brute_force() {
        let p = pair("p", 2);
        let labels: [&[u8]; 3] = [&[1, 0], &[0, 1], &[1, 1]];
        let recs: Vec<_> = labels
            .iter()
            .zip(["A", "B", "C"])
            .map(|(l, w)| rec("p", w, l, Yes))
            .collect();
        let expected: Vec<u32> = (0..2)
            .map(|i| labels.iter().filter(|l| l[i] == 1).count() as u32)
            .collect();
        let g = aggregate_votes(&p, &recs).unwrap();
        assert_eq!(g.votes, expected);
        assert_eq!(g.votes, vec![2, 2]);
        assert_eq!(g.binary_sources, vec![true, true]);
    }

    #[test]
    fn wrong_label_count_is_error() {
        let p = pair("p", 3);
        assert!(matches!(
            aggregate_votes(&p, &[rec("p", "a", &[1, 0], Yes)]),
            Err(CorpusError::LabelCount {
                found: 2,
                expected: 3,
                ..
            })
        ));
    }

    #[test]
    fn annotator_order_does_not_matter() {
        let p = pair("p", 3);
        let mut recs = vec![
            rec("p", "a", &[1, 0, 1], Yes),
            rec("p", "b", &[0, 0, 1], No),
            rec("p", "c", &[1, 1, 0], Partly),
        ];
        let g1 = aggregate_votes(&p, &recs).unwrap();
        recs.reverse();
        assert_eq!(g1, aggregate_votes(&p, &recs).unwrap());
    }

    #[test]
    fn majority_rule_enumerated() {
        // Every multiset of three verdicts against a direct count.
        let all = [Yes, Partly, No];
        for a in all {
            for b in all {
                for c in all {
                    let v = [a, b, c];
                    let yes = v.iter().filter(|&&x| x == Yes).count();
                    let not_no = v.iter().filter(|&&x| x != No).count();
                    assert_eq!(majority_keeps(&v, ReconstructPolicy::StrictYes), yes >= 2);
                    assert_eq!(
                        majority_keeps(&v, ReconstructPolicy::YesOrPartly),
                        not_no >= 2
                    );
                }
            }
        }
        assert!(!majority_keeps(
            &[Yes, Partly, No],
            ReconstructPolicy::StrictYes
        ));
        assert!(!majority_keeps(&[Yes, No], ReconstructPolicy::StrictYes));
    }

    #[test]
    fn filter_keeps_unanimous_yes() {
        let pairs = vec![pair("p", 1), pair("q", 1)];
        let recs = vec![
            rec("p", "a", &[1], Yes),
            rec("p", "b", &[1], Yes),
            rec("q", "a", &[1], No),
            rec("q", "b", &[1], Partly),
        ];
        let strict = filter_reconstructable(&pairs, &recs, ReconstructPolicy::StrictYes).unwrap();
        assert_eq!(strict.len(), 1);
        let lax = filter_reconstructable(&pairs, &recs, ReconstructPolicy::YesOrPartly).unwrap();
        assert_eq!(lax.len(), 1, "tie between partly and no excludes");
    }

    #[test]
    fn filter_without_verdicts_names_pair() {
        let pairs = vec![pair("lonely", 1)];
        match filter_reconstructable(&pairs, &[], ReconstructPolicy::StrictYes) {
            Err(CorpusError::NoRecords(id)) => assert_eq!(id, "lonely"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gold_for_annotated_pairs_only() {
        let pairs = [pair("a", 2), pair("b", 2), pair("c", 2)];
        let records = [
            rec("c", "u1", &[1, 0], Yes),
            rec("a", "u1", &[1, 1], Yes),
            rec("a", "u2", &[1, 0], No),
        ];
        let gold = gold_labels(&pairs, &records).unwrap();
        assert_eq!(gold.len(), 2);
        assert_eq!(
            (gold[0].pair_id.as_str(), gold[0].votes.as_slice()),
            ("a", &[2, 1][..])
        );
        assert_eq!(gold[1].pair_id, "c");
        let stray = [rec("zzz", "u1", &[1], Yes)];
        assert!(matches!(
            gold_labels(&pairs, &stray),
            Err(CorpusError::InvalidPair { .. })
        ));
    }
}
