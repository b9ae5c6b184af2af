//! Label-free relevance estimators.
//!
//! For one configuration and one query, the estimated relevance of the
//! result list `D` is the product of a query-dependent and a
//! corpus-dependent term:
//!
//! ```text
//! L(q, S) = [ Σ_{d∈D} bm25(q, d) · p(d|q, D) ] × [ (1/|D|) Σ_{d∈D} focus(d) ]
//! ```
//!
//! where `p(d|q, D)` normalizes the configuration's own scores over the
//! list and `focus(d) = exp(-KL(p(·|d) ‖ nidf(·)))`. Queries are weighted by
//! difficulty: every configuration votes with its NQC value, the log-product
//! ranks queries from hardest to easiest, and the cumulative-share rule turns
//! that ranking into weights in `(0, 1]`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::index::{AnalyzedText, CorpusIndex, DocId};
use crate::retrieval::{corpus_stats, query_terms, RankedList, RelevanceModel};
use crate::similarity::{score, Similarity, SimilarityConfig, TermQueryStats, LOG_FLOOR};

/// Lower clamp applied to NQC values before taking logs.
pub const NQC_FLOOR: f64 = 1e-9;
/// Relative shift regularizer shared by the list posterior and the query weights.
pub const SHIFT_EPSILON: f64 = 1e-6;

/// Unnormalized relevance estimate for one (query, configuration) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryLikelihood {
    pub query_id: String,
    pub config: String,
    pub value: f64,
    /// Set when the result list was empty and the value defaulted to 0.
    pub degenerate: bool,
}

/// `exp(-KL(p(·|d) ‖ nidf(·)))` over the distinct terms of `d`.
///
/// Zero-length documents have focus 0.
pub fn doc_focus(index: &CorpusIndex, id: DocId) -> f64 {
    let Ok(lm) = index.doc_language_model(id) else {
        log::debug!("document {} is empty; focus set to 0", index.doc(id).external_id);
        return 0.0;
    };
    let idfs: Vec<f64> = lm.iter().map(|&(t, _)| index.idf_by_id(t)).collect();
    let idf_sum: f64 = idfs.iter().sum();
    let kl: f64 = lm.iter().zip(&idfs).map(|(&(_, p), &idf)| p * (p / (idf / idf_sum)).ln()).sum();
    (-kl).exp()
}

/// Focus of every document, indexed by internal id.
pub fn doc_focus_table(index: &CorpusIndex) -> Vec<f64> {
    (0..index.num_docs() as DocId).into_par_iter().map(|id| doc_focus(index, id)).collect()
}

/// BM25 (default parameters) score of `d` for `query`; 0 when nothing matches.
pub fn query_doc_relevance(index: &CorpusIndex, query: &AnalyzedText, id: DocId) -> f64 {
    let doc = index.doc(id);
    let stats: Vec<TermQueryStats> = query_terms(index, query)
        .into_iter()
        .map(|(t, qtf)| TermQueryStats {
            query_tf: qtf,
            tf: u64::from(doc.tf(t)),
            df: index.df(t),
            ctf: index.ctf(t),
            doc_length: doc.length,
        })
        .collect();
    score(&Similarity::bm25_default(), &corpus_stats(index), &stats).unwrap_or(0.0)
}

/// Normalizes list scores into a distribution after shifting them positive.
///
/// Scores are shifted by `-min + eps` with `eps = 1e-6 · (max - min)`.
/// Equal scores give the uniform distribution.
pub fn list_posterior(scores: &[f64]) -> Vec<f64> {
    if scores.is_empty() {
        return Vec::new();
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return vec![1.0 / scores.len() as f64; scores.len()];
    }
    let eps = SHIFT_EPSILON * (max - min);
    let shifted: Vec<f64> = scores.iter().map(|s| s - min + eps).collect();
    let total: f64 = shifted.iter().sum();
    shifted.into_iter().map(|s| s / total).collect()
}

/// Per-query relevance estimator with precomputed document focus.
#[derive(Debug, Clone)]
pub struct LikelihoodEstimator<'a> {
    index: &'a CorpusIndex,
    focus: Vec<f64>,
}

impl<'a> LikelihoodEstimator<'a> {
    pub fn new(index: &'a CorpusIndex) -> Self {
        Self { index, focus: doc_focus_table(index) }
    }

    pub fn focus(&self, id: DocId) -> f64 {
        self.focus[id as usize]
    }

    /// Query-dependent term × corpus-dependent term for one result list.
    pub fn likelihood(&self, query: &AnalyzedText, list: &RankedList) -> QueryLikelihood {
        likelihood_with(self.index, query, list, |id| self.focus(id))
    }
}

/// Computes the per-query likelihood without a precomputed focus table.
pub fn per_query_likelihood(index: &CorpusIndex, query: &AnalyzedText, list: &RankedList) -> QueryLikelihood {
    likelihood_with(index, query, list, |id| doc_focus(index, id))
}

fn likelihood_with(
    index: &CorpusIndex,
    query: &AnalyzedText,
    list: &RankedList,
    focus: impl Fn(DocId) -> f64,
) -> QueryLikelihood {
    let mut out = QueryLikelihood {
        query_id: list.query_id.clone(),
        config: list.config.clone(),
        value: 0.0,
        degenerate: list.is_empty(),
    };
    if list.is_empty() {
        return out;
    }
    let posterior = list_posterior(&list.scores());
    let query_part: f64 =
        list.items.iter().zip(&posterior).map(|(d, p)| query_doc_relevance(index, query, d.internal_id) * p).sum();
    let corpus_part = list.items.iter().map(|d| focus(d.internal_id)).sum::<f64>() / list.len() as f64;
    out.value = query_part * corpus_part;
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Nqc {
    pub value: f64,
    /// Set when the list was empty or the corpus score was zero.
    pub degenerate: bool,
}

/// Population standard deviation of the list scores over `|corpus_score|`.
pub fn nqc(scores: &[f64], corpus_score: f64) -> Nqc {
    if scores.is_empty() || corpus_score == 0.0 || !corpus_score.is_finite() {
        return Nqc { value: 0.0, degenerate: true };
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    Nqc { value: var.sqrt() / corpus_score.abs(), degenerate: false }
}

/// The query's score against the whole corpus treated as one document.
///
/// The corpus document has `tf = ctf` and length `T` for every term. Under
/// the Dirichlet language model that document scores exactly 0, so the
/// corpus query likelihood `Σ ln p(w|C)` is used instead. Rerankers score
/// the corpus with their own relevance model: `Σ_w p(w|R) ln p(w|C)`.
pub fn corpus_score(
    index: &CorpusIndex,
    config: &SimilarityConfig,
    query: &AnalyzedText,
    relevance_model: Option<&RelevanceModel>,
) -> f64 {
    let terms = query_terms(index, query);
    match config {
        SimilarityConfig::Base(Similarity::LmDirichlet { .. }) => {
            terms.iter().map(|&(t, qtf)| f64::from(qtf) * index.collection_prob(t).ln()).sum()
        }
        SimilarityConfig::Base(sim) => {
            let stats: Vec<TermQueryStats> = terms
                .iter()
                .map(|&(t, qtf)| TermQueryStats {
                    query_tf: qtf,
                    tf: index.ctf(t),
                    df: index.df(t),
                    ctf: index.ctf(t),
                    doc_length: index.total_terms(),
                })
                .collect();
            score(sim, &corpus_stats(index), &stats).unwrap_or(0.0)
        }
        SimilarityConfig::Rerank(_) => relevance_model.map_or(0.0, |rm| {
            rm.weights()
                .iter()
                .map(|(term, w)| {
                    let p = index.term_id(term).map_or(0.0, |t| index.collection_prob(t));
                    w * p.max(LOG_FLOOR).ln()
                })
                .sum()
        }),
    }
}

/// `v(q) = Σ_S ln(max(NQC_S(q), 1e-9))` for each query.
pub fn difficulty_scores(nqc_table: &BTreeMap<String, Vec<f64>>) -> BTreeMap<String, f64> {
    nqc_table.iter().map(|(q, values)| (q.clone(), values.iter().map(|v| v.max(NQC_FLOOR).ln()).sum())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedQuery {
    pub query_id: String,
    /// Difficulty score `v(q)`; lower means harder.
    pub difficulty: f64,
    /// 1 for the hardest query.
    pub difficulty_rank: usize,
    pub weight: f64,
}

/// Query weights ordered from hardest (weight 1) to easiest.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct QueryWeights {
    ranked: Vec<WeightedQuery>,
}

impl QueryWeights {
    pub fn ranked(&self) -> &[WeightedQuery] {
        &self.ranked
    }

    pub fn get(&self, query_id: &str) -> Option<f64> {
        self.ranked.iter().find(|w| w.query_id == query_id).map(|w| w.weight)
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }

    pub fn by_query(&self) -> BTreeMap<&str, f64> {
        self.ranked.iter().map(|w| (w.query_id.as_str(), w.weight)).collect()
    }
}

/// Sorts queries by ascending difficulty score and assigns
/// `w_i = 1 - Σ_{j<i} u_j / Σ u`, where `u = v - min(v) + δ` with
/// `δ = 1e-6 · (max - min)`, or 1 when all scores are equal.
pub fn query_weights(v: &BTreeMap<String, f64>) -> QueryWeights {
    let min = v.values().copied().fold(f64::INFINITY, f64::min);
    let max = v.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let delta = if max > min { SHIFT_EPSILON * (max - min) } else { 1.0 };
    let mut order: Vec<(&String, f64)> = v.iter().map(|(q, &s)| (q, s)).collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    let shifted: Vec<f64> = order.iter().map(|(_, s)| s - min + delta).collect();
    let ranked = order
        .iter()
        .zip(cumulative_weights(&shifted))
        .enumerate()
        .map(|(i, ((q, s), weight))| WeightedQuery {
            query_id: (*q).clone(),
            difficulty: *s,
            difficulty_rank: i + 1,
            weight,
        })
        .collect();
    QueryWeights { ranked }
}

/// `w_i = 1 - Σ_{j<i} u_j / Σ_j u_j` for positive `u` already in rank order.
pub fn cumulative_weights(u: &[f64]) -> Vec<f64> {
    let total: f64 = u.iter().sum();
    let mut prefix = 0.0;
    u.iter()
        .map(|x| {
            let w = 1.0 - prefix / total;
            prefix += x;
            w
        })
        .collect()
}
