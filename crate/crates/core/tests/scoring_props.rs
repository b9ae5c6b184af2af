use proptest::prelude::*;
use rand::Rng;
use simtune_core::similarity::{
    enumerate_dfr_grid, enumerate_ib_grid, parse_config, score, usecase1_set, CorpusStats, Similarity,
    SimilarityConfig, TermQueryStats,
};
use simtune_testkit::seeded;

fn draw<R: Rng>(rng: &mut R) -> (CorpusStats, TermQueryStats) {
    let num_docs = rng.gen_range(1..=1_000_000u64);
    let avg = rng.gen_range(1.0..2000.0f64);
    let total_terms = ((num_docs as f64 * avg) as u64).max(1);
    let df = rng.gen_range(1..=num_docs);
    let doc_length = rng.gen_range(1..=20_000u64);
    let tf = rng.gen_range(1..=doc_length);
    let ctf = rng.gen_range(tf.max(df)..=total_terms.max(tf.max(df)));
    let corpus = CorpusStats { num_docs, total_terms: total_terms.max(ctf), avg_doc_length: avg };
    (corpus, TermQueryStats { query_tf: rng.gen_range(1..4), tf, df, ctf, doc_length })
}

#[test]
fn every_grid_config_is_finite_and_non_negative_on_random_statistics() {
    let sims: Vec<Similarity> =
        enumerate_dfr_grid().iter().chain(&enumerate_ib_grid()).map(|c| *c.first_stage()).collect();
    assert!(sims.len() >= 107);
    let mut rng = seeded(31);
    for _ in 0..10_000 {
        let (corpus, t) = draw(&mut rng);
        for sim in &sims {
            let s = score(sim, &corpus, &[t]).unwrap();
            assert!(s.is_finite() && s >= 0.0, "{sim:?} {corpus:?} {t:?} -> {s}");
            assert_eq!(s.to_bits(), score(sim, &corpus, &[t]).unwrap().to_bits());
        }
    }
}

#[test]
fn canonical_names_parse_back() {
    let all = enumerate_dfr_grid().into_iter().chain(enumerate_ib_grid()).chain(usecase1_set());
    for c in all {
        assert_eq!(parse_config(&c.canonical_name()).unwrap(), c);
    }
    let names: std::collections::BTreeSet<String> =
        enumerate_dfr_grid().iter().map(SimilarityConfig::canonical_name).collect();
    assert_eq!(names.len(), 105);
}

fn bm25() -> Similarity {
    Similarity::bm25_default()
}

proptest! {
    #[test]
    fn bm25_rises_with_tf_and_falls_with_df(
        n in 2u64..100_000, df_frac in 0.0..1.0f64, dl in 2u64..5000, tf_frac in 0.0..1.0f64, avg in 1.0..1000.0f64,
    ) {
        let df = 1 + ((n - 1) as f64 * df_frac) as u64;
        let tf = 1 + ((dl - 1) as f64 * tf_frac) as u64;
        let corpus = CorpusStats { num_docs: n, total_terms: 10 * n * dl, avg_doc_length: avg };
        let t = TermQueryStats { query_tf: 1, tf, df, ctf: tf.max(df) + 1, doc_length: dl };
        let s = score(&bm25(), &corpus, &[t]).unwrap();
        if tf < dl {
            let more = TermQueryStats { tf: tf + 1, ..t };
            prop_assert!(score(&bm25(), &corpus, &[more]).unwrap() > s);
        }
        if df < n {
            let rarer = TermQueryStats { df: df + 1, ..t };
            prop_assert!(score(&bm25(), &corpus, &[rarer]).unwrap() < s);
        }
    }

    #[test]
    fn bm25_without_length_normalization_ignores_length(tf in 1u64..50, extra in 0u64..5000, other in 0u64..5000) {
        let sim = Similarity::Bm25 { k1: 1.2, b: 0.0 };
        let corpus = CorpusStats { num_docs: 100, total_terms: 100_000, avg_doc_length: 1000.0 };
        let t = TermQueryStats { query_tf: 1, tf, df: 10, ctf: 100, doc_length: tf + extra };
        let u = TermQueryStats { doc_length: tf + other, ..t };
        prop_assert_eq!(score(&sim, &corpus, &[t]).unwrap(), score(&sim, &corpus, &[u]).unwrap());
    }
}
