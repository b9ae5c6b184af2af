//! Random fixtures and brute-force reference implementations for tests.
//!
//! The references recount every statistic from raw token lists and score
//! every document; they share no code with the index, retrieval, or metric
//! modules of `simtune-core`. Per-term formulas come from
//! [`simtune_core::similarity::term_score`], which is checked separately
//! against an external reference.

pub mod metrics;
pub mod retrieval;
pub mod trial;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic generator for a test seed.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Documents and query strings drawn from a small Zipfian vocabulary.
#[derive(Debug, Clone)]
pub struct RandomCorpus {
    pub docs: Vec<(String, String)>,
    pub queries: Vec<String>,
}

/// Up to `max_docs` documents and `max_queries` queries. Document ids are
/// assigned in shuffled order so id order differs from insertion order.
/// Queries sometimes repeat a term or contain a term absent from the corpus.
pub fn random_corpus<R: Rng>(rng: &mut R, max_docs: usize, max_queries: usize) -> RandomCorpus {
    let vocab_size = rng.gen_range(5..=300);
    let vocab: Vec<String> = (0..vocab_size).map(|i| format!("w{i}")).collect();
    let zipf = WeightedIndex::new((1..=vocab_size).map(|r| 1.0 / r as f64)).expect("positive weights");
    let n_docs = rng.gen_range(1..=max_docs);
    let mut ids: Vec<usize> = (0..n_docs).collect();
    ids.shuffle(rng);
    let mut docs: Vec<(String, String)> = ids
        .into_iter()
        .map(|id| {
            let len = if rng.gen_bool(0.02) { 0 } else { rng.gen_range(1..=80) };
            let text: Vec<&str> = (0..len).map(|_| vocab[zipf.sample(rng)].as_str()).collect();
            (format!("d{id}"), text.join(" "))
        })
        .collect();
    if docs.iter().all(|(_, t)| t.is_empty()) {
        docs[0].1 = vocab[0].clone();
    }
    let n_queries = rng.gen_range(1..=max_queries);
    let queries = (0..n_queries)
        .map(|q| {
            let mut words: Vec<String> =
                (0..rng.gen_range(1..=4)).map(|_| vocab[rng.gen_range(0..vocab_size)].clone()).collect();
            if rng.gen_bool(0.2) {
                words.push(words[0].clone());
            }
            if rng.gen_bool(0.1) {
                words.push(format!("unseen{q}"));
            }
            words.join(" ")
        })
        .collect();
    RandomCorpus { docs, queries }
}
