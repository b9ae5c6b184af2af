use std::collections::BTreeMap;

use proptest::prelude::*;
use simtune_core::index::{build_index, read_index, save_index, write_index, Analyzer};
use simtune_testkit::retrieval::NaiveCorpus;
use simtune_testkit::{random_corpus, seeded};

fn bytes(index: &simtune_core::index::CorpusIndex) -> Vec<u8> {
    let mut out = Vec::new();
    write_index(index, &mut out).unwrap();
    out
}

#[test]
fn statistics_match_a_naive_recount() {
    let analyzer = Analyzer::english();
    let mut rng = seeded(21);
    let corpus = loop {
        let c = random_corpus(&mut rng, 1000, 1);
        if c.docs.len() > 500 {
            break c;
        }
    };
    let index = build_index(&analyzer, corpus.docs.iter().map(|(i, t)| (i, t))).unwrap();
    let naive = NaiveCorpus::new(&analyzer, &corpus.docs);
    assert_eq!(index.num_docs(), naive.num_docs());
    assert_eq!(index.total_terms(), naive.total_terms);
    assert_eq!(index.vocab(), naive.df.keys().cloned().collect::<Vec<_>>().as_slice());
    for term in index.vocab() {
        assert_eq!(index.df_of(term), naive.df[term], "df {term}");
        assert_eq!(index.ctf_of(term), naive.ctf[term], "ctf {term}");
    }
    for (i, id) in naive.ids.iter().enumerate() {
        let doc = index.doc_by_external_id(id).unwrap();
        assert_eq!(doc.length, naive.lengths[i]);
        let tfs: BTreeMap<String, u64> =
            doc.term_freqs.iter().map(|&(t, n)| (index.term(t).to_owned(), u64::from(n))).collect();
        assert_eq!(tfs, naive.tfs[i]);
    }
}

#[test]
fn large_index_resaves_byte_identically() {
    let params = simtune_core::synthetic::SyntheticParams { median_doc_length: 40.0, ..Default::default() };
    let bench = simtune_core::synthetic::generate(&params);
    assert_eq!(bench.docs.len(), 10_000);
    let analyzer = Analyzer::english();
    let index = build_index(&analyzer, bench.docs.iter().map(|d| (&d.id, &d.text))).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.idx");
    save_index(&index, &path).unwrap();
    let first = std::fs::read(&path).unwrap();
    let loaded = read_index(&mut first.as_slice()).unwrap();
    assert_eq!(bytes(&loaded), first);
    assert_eq!(loaded.num_docs(), index.num_docs());
    assert_eq!(loaded.vocab(), index.vocab());
}

#[test]
fn analysis_is_idempotent_on_stemmer_fixed_points() {
    let analyzer = Analyzer::english();
    let once = analyzer.analyze(include_str!("fixtures/english.txt"));
    assert!(once.len() > 100);
    let twice = analyzer.analyze(&once.terms().join(" "));
    assert_eq!(once.len(), twice.len());
    let moved: BTreeMap<&str, &str> =
        once.terms().iter().zip(twice.terms()).filter(|(a, b)| a != b).map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let expected = BTreeMap::from([("agre", "agr"), ("analys", "anali"), ("committe", "committ"), ("decis", "deci")]);
    assert_eq!(moved, expected);
    let vocab: Vec<&String> = once.terms().iter().filter(|t| !expected.contains_key(t.as_str())).collect();
    for t in vocab {
        assert_eq!(analyzer.analyze(t).terms(), std::slice::from_ref(t));
    }
}

#[test]
fn document_models_sum_to_one() {
    let analyzer = Analyzer::english();
    let corpus = random_corpus(&mut seeded(5), 300, 1);
    let index = build_index(&analyzer, corpus.docs.iter().map(|(i, t)| (i, t))).unwrap();
    for id in 0..index.num_docs() as u32 {
        match index.doc_language_model(id) {
            Ok(lm) => assert!((lm.iter().map(|(_, p)| p).sum::<f64>() - 1.0).abs() < 1e-9),
            Err(_) => assert_eq!(index.doc(id).length, 0),
        }
    }
}

proptest! {
    #[test]
    fn postings_agree_with_documents(docs in prop::collection::vec("[a-e ]{0,30}", 1..20)) {
        let analyzer = Analyzer::english();
        let pairs: Vec<(String, String)> = docs.iter().enumerate().map(|(i, t)| (format!("d{i}"), t.clone())).collect();
        prop_assume!(pairs.iter().any(|(_, t)| !analyzer.analyze(t).is_empty()));
        let index = build_index(&analyzer, pairs.iter().map(|(i, t)| (i, t))).unwrap();
        let mut total = 0;
        for t in 0..index.vocab_size() as u32 {
            let postings = index.postings(t);
            prop_assert_eq!(postings.len() as u64, index.df(t));
            prop_assert!(postings.windows(2).all(|w| w[0].doc < w[1].doc));
            let ctf: u64 = postings.iter().map(|p| u64::from(p.tf)).sum();
            prop_assert_eq!(ctf, index.ctf(t));
            for p in postings {
                prop_assert_eq!(index.doc(p.doc).tf(t), p.tf);
            }
            total += ctf;
        }
        prop_assert_eq!(total, index.total_terms());
        let copy = read_index(&mut bytes(&index).as_slice()).unwrap();
        prop_assert_eq!(bytes(&copy), bytes(&index));
    }
}
