use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::Rng;
use simtune_core::index::{build_index, Analyzer};
use simtune_core::qpp::{
    difficulty_scores, doc_focus, list_posterior, nqc, per_query_likelihood, query_weights, LikelihoodEstimator,
};
use simtune_core::retrieval::{RankedList, ScoredDoc};
use simtune_core::similarity::Diagnostics;
use simtune_testkit::retrieval::NaiveCorpus;
use simtune_testkit::{random_corpus, seeded};

fn idf(n: f64, df: f64) -> f64 {
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

#[test]
fn focus_is_in_unit_interval_and_matches_a_recount() {
    let analyzer = Analyzer::english();
    let mut rng = seeded(99);
    let mut checked = 0;
    while checked < 1000 {
        let corpus = random_corpus(&mut rng, 250, 1);
        let index = build_index(&analyzer, corpus.docs.iter().map(|(i, t)| (i, t))).unwrap();
        let naive = NaiveCorpus::new(&analyzer, &corpus.docs);
        let n = naive.num_docs() as f64;
        for (i, id) in naive.ids.iter().enumerate() {
            let doc = index.doc_by_external_id(id).unwrap().internal_id;
            let focus = doc_focus(&index, doc);
            if naive.lengths[i] == 0 {
                assert_eq!(focus, 0.0);
                continue;
            }
            assert!(focus > 0.0 && focus <= 1.0, "{focus}");
            let idf_sum: f64 = naive.tfs[i].keys().map(|t| idf(n, naive.df[t] as f64)).sum();
            let kl: f64 = naive.tfs[i]
                .iter()
                .map(|(t, &tf)| {
                    let p = tf as f64 / naive.lengths[i] as f64;
                    p * (p * idf_sum / idf(n, naive.df[t] as f64)).ln()
                })
                .sum();
            assert!((focus - (-kl).exp()).abs() < 1e-12);
            checked += 1;
        }
    }
}

fn list(index: &simtune_core::index::CorpusIndex, scored: &[(&str, f64)]) -> RankedList {
    RankedList {
        query_id: "q".into(),
        config: "test".into(),
        k_requested: 10,
        items: scored
            .iter()
            .enumerate()
            .map(|(i, &(id, score))| ScoredDoc {
                internal_id: index.doc_by_external_id(id).unwrap().internal_id,
                external_id: id.into(),
                score,
                rank: i + 1,
            })
            .collect(),
        diagnostics: Diagnostics::default(),
    }
}

#[test]
fn three_document_likelihood_by_hand() {
    let analyzer = Analyzer::english();
    let docs = [("d1", "sun sun rain"), ("d2", "rain wind"), ("d3", "sun wind wind snow")];
    let index = build_index(&analyzer, docs).unwrap();
    let query = analyzer.analyze("sun wind");
    let l = list(&index, &[("d1", -1.5), ("d3", -2.0), ("d2", -4.0)]);

    // N = 3, avgdl = 3; df(sun) = df(rain) = df(wind) = 2, df(snow) = 1
    let (i2, i1) = (idf(3.0, 2.0), idf(3.0, 1.0));
    let tfn = |tf: f64, dl: f64| tf * 2.2 / (tf + 1.2 * (0.25 + 0.75 * dl / 3.0));
    let bm25 = [i2 * tfn(2.0, 3.0), i2 * tfn(1.0, 4.0) + i2 * tfn(2.0, 4.0), i2 * tfn(1.0, 2.0)];
    let eps = 1e-6 * 2.5;
    let shifted = [2.5 + eps, 2.0 + eps, eps];
    let z: f64 = shifted.iter().sum();
    let query_part: f64 = bm25.iter().zip(shifted).map(|(r, s)| r * s / z).sum();
    let focus = |ps: &[f64], idfs: &[f64]| {
        let total: f64 = idfs.iter().sum();
        (-ps.iter().zip(idfs).map(|(p, i)| p * (p * total / i).ln()).sum::<f64>()).exp()
    };
    let f1 = focus(&[2.0 / 3.0, 1.0 / 3.0], &[i2, i2]);
    let f3 = focus(&[0.25, 0.5, 0.25], &[i2, i2, i1]);
    let f2 = focus(&[0.5, 0.5], &[i2, i2]);
    let expected = query_part * (f1 + f3 + f2) / 3.0;

    let got = per_query_likelihood(&index, &query, &l);
    assert!(!got.degenerate);
    assert!((got.value - expected).abs() < 1e-12, "{} vs {expected}", got.value);
    let cached = LikelihoodEstimator::new(&index).likelihood(&query, &l);
    assert_eq!(cached.value, got.value);
}

#[test]
fn difficulty_is_the_log_of_the_nqc_product() {
    let mut rng = seeded(4);
    let mut table: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for q in 0..30 {
        let row = (0..8).map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(1e-4..2.0) }).collect();
        table.insert(format!("q{q}"), row);
    }
    let v = difficulty_scores(&table);
    for (q, row) in &table {
        let product: f64 = row.iter().map(|x| if *x < 1e-9 { 1e-9 } else { *x }).product();
        assert!((v[q] - product.ln()).abs() < 1e-9);
    }
}

#[test]
fn nqc_is_exactly_scale_invariant_for_binary_scales() {
    let mut rng = seeded(8);
    for _ in 0..1000 {
        let scores: Vec<f64> = (0..rng.gen_range(1..100)).map(|_| rng.gen_range(-30.0..30.0)).collect();
        let corpus = rng.gen_range(-50.0..-0.1);
        let base = nqc(&scores, corpus);
        for c in [0.25, 2.0, 1024.0] {
            let scaled: Vec<f64> = scores.iter().map(|s| s * c).collect();
            assert_eq!(nqc(&scaled, corpus * c).value, base.value);
        }
        let c = rng.gen_range(0.01..100.0);
        let scaled: Vec<f64> = scores.iter().map(|s| s * c).collect();
        assert!((nqc(&scaled, corpus * c).value - base.value).abs() <= 1e-12 * base.value.max(1.0));
    }
}

fn scores() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0..100.0f64, 1..60)
}

proptest! {
    #[test]
    fn posterior_sums_to_one_and_ignores_shifts(s in scores(), shift in -1e3..1e3f64) {
        let p = list_posterior(&s);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|x| *x > 0.0));
        let moved: Vec<f64> = s.iter().map(|x| x + shift).collect();
        for (a, b) in p.iter().zip(list_posterior(&moved)) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn weights_start_at_one_and_never_increase(v in prop::collection::vec(-50.0..10.0f64, 1..40), shift in -100.0..100.0f64) {
        let table: BTreeMap<String, f64> = v.iter().enumerate().map(|(i, x)| (format!("q{i:02}"), *x)).collect();
        let w = query_weights(&table);
        let ranked = w.ranked();
        prop_assert_eq!(ranked.len(), v.len());
        prop_assert_eq!(ranked[0].weight, 1.0);
        prop_assert!(ranked.iter().all(|r| r.weight > 0.0));
        prop_assert!(ranked.windows(2).all(|p| p[1].weight <= p[0].weight && p[0].difficulty <= p[1].difficulty));
        let moved: BTreeMap<String, f64> = table.iter().map(|(q, x)| (q.clone(), x + shift)).collect();
        let w2 = query_weights(&moved);
        for (a, b) in ranked.iter().zip(w2.ranked()) {
            prop_assert_eq!(&a.query_id, &b.query_id);
            prop_assert!((a.weight - b.weight).abs() < 1e-9);
        }
    }
}
