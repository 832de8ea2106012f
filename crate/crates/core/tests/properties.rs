use proptest::prelude::*;

use srcsent_core::corpus::{
    aggregate_votes, corpus_stats, novel_ngram_rate, parse_pairs, write_pairs, AnnotationRecord,
    Dataset, DocumentSummaryPair, GoldLabels, Reconstructability, SummaryOrigin,
};
use srcsent_core::eval::{ndcg, Gain};
use srcsent_core::model::{cross_attention_score, perplexity_gain, AttentionDump, CopyBiasedLm};
use srcsent_core::synthetic::{generate, word, SyntheticConfig};
use srcsent_core::{ScoreVector, Tokenizer};

fn sentence_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec(0usize..200, 1..10).prop_map(|ids| {
        let words: Vec<String> = ids.into_iter().map(word).collect();
        format!("{}.", words.join(" "))
    })
}

fn pair_strategy(id: usize) -> impl Strategy<Value = DocumentSummaryPair> {
    (
        prop::collection::vec(sentence_strategy(), 1..8),
        prop::collection::vec(0usize..200, 4..12),
        prop::bool::ANY,
    )
        .prop_map(move |(sents, summary, xsum)| {
            let summary: Vec<String> = summary.into_iter().map(word).collect();
            DocumentSummaryPair::from_sentences(
                format!("pair-{id}"),
                if xsum { Dataset::Xsum } else { Dataset::Cnndm },
                SummaryOrigin::Reference,
                &sents,
                summary.join(" "),
            )
            .unwrap()
        })
}

fn corpus_strategy(offset: usize) -> impl Strategy<Value = Vec<(DocumentSummaryPair, Vec<u32>)>> {
    (1usize..6).prop_flat_map(move |n| {
        (0..n)
            .map(|i| {
                pair_strategy(offset + i).prop_flat_map(|p| {
                    let len = p.len();
                    (Just(p), prop::collection::vec(0u32..=3, len))
                })
            })
            .collect::<Vec<_>>()
    })
}

fn gold_for(
    corpus: &[(DocumentSummaryPair, Vec<u32>)],
) -> (Vec<DocumentSummaryPair>, Vec<GoldLabels>) {
    corpus
        .iter()
        .map(|(p, v)| {
            (
                p.clone(),
                GoldLabels::from_votes(p.pair_id.clone(), v.clone(), 3),
            )
        })
        .unzip()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pairs_round_trip_byte_identically(corpus in corpus_strategy(0)) {
        let pairs: Vec<DocumentSummaryPair> = corpus.into_iter().map(|(p, _)| p).collect();
        let mut first = Vec::new();
        write_pairs(&mut first, &pairs).unwrap();
        let loaded = parse_pairs(std::str::from_utf8(&first).unwrap()).unwrap();
        prop_assert_eq!(&loaded, &pairs);
        let mut second = Vec::new();
        write_pairs(&mut second, &loaded).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn key_order_does_not_matter(p in pair_strategy(0)) {
        let mut written = Vec::new();
        write_pairs(&mut written, std::slice::from_ref(&p)).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&written).unwrap();
        // Re-emit with keys in reverse order.
        let obj = value.as_object().unwrap();
        let parts: Vec<String> = obj
            .iter()
            .rev()
            .map(|(k, v)| format!("{}:{}", serde_json::to_string(k).unwrap(), v))
            .collect();
        let reordered = format!("{{{}}}\n", parts.join(","));
        let loaded = parse_pairs(&reordered).unwrap();
        let mut again = Vec::new();
        write_pairs(&mut again, &loaded).unwrap();
        prop_assert_eq!(written, again);
    }

    #[test]
    fn stats_of_concatenation_are_weighted_means(a in corpus_strategy(0), b in corpus_strategy(100)) {
        let tok = Tokenizer::default();
        let (pa, ga) = gold_for(&a);
        let (pb, gb) = gold_for(&b);
        let sa = corpus_stats(&pa, &ga, &tok).unwrap();
        let sb = corpus_stats(&pb, &gb, &tok).unwrap();
        let all_pairs: Vec<_> = pa.iter().chain(&pb).cloned().collect();
        let all_gold: Vec<_> = ga.iter().chain(&gb).cloned().collect();
        let s = corpus_stats(&all_pairs, &all_gold, &tok).unwrap();
        let (na, nb) = (sa.n_pairs as f64, sb.n_pairs as f64);
        let mix = |x: f64, y: f64| (na * x + nb * y) / (na + nb);
        prop_assert_eq!(s.n_pairs, sa.n_pairs + sb.n_pairs);
        prop_assert!((s.mean_sentences - mix(sa.mean_sentences, sb.mean_sentences)).abs() < 1e-9);
        prop_assert!((s.mean_source_sentences - mix(sa.mean_source_sentences, sb.mean_source_sentences)).abs() < 1e-9);
        prop_assert!((s.mean_input_tokens - mix(sa.mean_input_tokens, sb.mean_input_tokens)).abs() < 1e-9);
        prop_assert!((s.mean_summary_tokens - mix(sa.mean_summary_tokens, sb.mean_summary_tokens)).abs() < 1e-9);
        for k in 1..=4 {
            // Summaries have at least four tokens, so every pair counts for every n.
            prop_assert!((s.novel_ngram_rate[&k] - mix(sa.novel_ngram_rate[&k], sb.novel_ngram_rate[&k])).abs() < 1e-9);
        }
    }

    #[test]
    fn copying_the_summary_removes_novelty(p in pair_strategy(0)) {
        let tok = Tokenizer::default();
        let mut sents: Vec<String> = p.sentences.iter().map(|s| s.text.clone()).collect();
        sents.push(p.summary.clone());
        let with_copy = DocumentSummaryPair::from_sentences("c", p.dataset, p.summary_origin, &sents, &p.summary).unwrap();
        let n_tokens = tok.tokenize(&p.summary).len();
        for n in 1..=n_tokens.min(4) {
            prop_assert_eq!(novel_ngram_rate(&with_copy, n, &tok).unwrap(), 0.0);
            prop_assert!(novel_ngram_rate(&p, n, &tok).unwrap() >= 0.0);
        }
    }

    #[test]
    fn votes_ignore_annotator_order(p in pair_strategy(0), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let records: Vec<AnnotationRecord> = (0..3)
            .map(|a| AnnotationRecord {
                pair_id: p.pair_id.clone(),
                annotator_id: format!("ann{a}"),
                sentence_labels: (0..p.len()).map(|i| (i + a) % 2 == 0).collect(),
                reconstructability: Reconstructability::Yes,
            })
            .collect();
        let mut shuffled = records.clone();
        shuffled.shuffle(&mut rng);
        let g = aggregate_votes(&p, &records).unwrap();
        prop_assert_eq!(&g, &aggregate_votes(&p, &shuffled).unwrap());
        prop_assert!(g.source_count() <= p.len());
    }

    #[test]
    fn ndcg_is_permutation_equivariant(
        rows in prop::collection::vec((0u32..=3, -1000i32..1000), 1..15),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        // Distinct scores so no tie-break is involved.
        let mut rows: Vec<(u32, f64)> = rows.into_iter().enumerate().map(|(i, (v, s))| (v, s as f64 + i as f64 * 1e-6)).collect();
        prop_assume!(rows.iter().any(|r| r.0 > 0));
        let eval = |rows: &[(u32, f64)], gain| {
            let gold = GoldLabels::from_votes("p", rows.iter().map(|r| r.0).collect(), 3);
            ndcg(&ScoreVector::new("p", "m", rows.iter().map(|r| r.1).collect()), &gold, gain).unwrap()
        };
        let before = [eval(&rows, Gain::Linear), eval(&rows, Gain::Exponential)];
        rows.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let after = [eval(&rows, Gain::Linear), eval(&rows, Gain::Exponential)];
        prop_assert_eq!(before, after);
    }

    #[test]
    fn head_average_commutes_with_scoring(
        layers in 1usize..4,
        heads in 1usize..4,
        target_len in 1usize..10,
        sizes in prop::collection::vec(1usize..5, 1..5),
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let source_len: usize = sizes.iter().sum();
        let alignment: Vec<usize> = sizes.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat_n(i, k)).collect();
        let mut weights = Vec::new();
        for _ in 0..layers * heads * target_len {
            let row: Vec<f64> = (0..source_len).map(|_| rng.gen::<f64>() + 0.01).collect();
            let t: f64 = row.iter().sum();
            weights.extend(row.into_iter().map(|w| w / t));
        }
        let dump = AttentionDump { pair_id: "p".into(), layers, heads, target_len, source_len, weights, alignment };
        let sents: Vec<String> = (0..sizes.len()).map(|i| format!("S {i}.")).collect();
        let pair = DocumentSummaryPair::from_sentences("p", Dataset::Xsum, SummaryOrigin::System, &sents, "x").unwrap();
        let averaged = cross_attention_score(&pair, &dump, None).unwrap().scores;
        let mut per_head = vec![0.0; sizes.len()];
        for l in 0..layers {
            for h in 0..heads {
                let s = cross_attention_score(&pair, &dump.slice(l, h), None).unwrap().scores;
                for (acc, v) in per_head.iter_mut().zip(s) {
                    *acc += v / (layers * heads) as f64;
                }
            }
        }
        for (a, b) in averaged.iter().zip(&per_head) {
            prop_assert!((a - b).abs() < 1e-9);
            prop_assert!(*a >= 0.0);
        }
    }

    #[test]
    fn synthetic_source_wins_for_any_strong_copy_bias(lambda in 0.5f64..=1.0, seed in any::<u64>()) {
        let corpus = generate(10, seed, &SyntheticConfig::default());
        let lm = CopyBiasedLm::new(lambda, corpus.vocabulary.len()).unwrap();
        for sp in &corpus.pairs {
            let v = perplexity_gain(&sp.pair, &lm, None).unwrap();
            prop_assert_eq!(v.ranking()[0], sp.source_index);
            // Fillers share no token with the summary; dropping one concentrates
            // the copy mass on summary tokens, so their gain is never positive.
            for (i, g) in v.scores.iter().enumerate() {
                if i != sp.source_index {
                    prop_assert!(*g <= 0.0, "filler {} gain {}", i, g);
                }
            }
        }
    }
}
