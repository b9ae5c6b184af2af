//! Query execution, relevance-model reranking and TREC run files.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::index::{AnalyzedText, CorpusIndex, DocId, TermId};
use crate::similarity::{
    score_with_diagnostics, CorpusStats, Diagnostics, FeedbackModel, RerankConfig, Similarity, SimilarityConfig,
    TermQueryStats, LOG_FLOOR,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RetrievalError {
    #[error("query `{0}` is empty after analysis")]
    EmptyQuery(String),
    #[error("retrieval depth must be at least 1")]
    ZeroDepth,
    #[error("cannot build a relevance model from an empty result list")]
    EmptyFeedback,
    #[error("fbdocs must be at least 1")]
    ZeroFeedbackDocs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredDoc {
    pub internal_id: DocId,
    pub external_id: String,
    pub score: f64,
    pub rank: usize,
}

/// Top-k result list for one (query, configuration) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedList {
    pub query_id: String,
    pub config: String,
    pub k_requested: usize,
    pub items: Vec<ScoredDoc>,
    #[serde(skip)]
    pub diagnostics: Diagnostics,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.items.iter().map(|d| d.score).collect()
    }
}

/// Term distribution induced from feedback documents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelevanceModel {
    /// Sorted by term.
    weights: Vec<(String, f64)>,
}

impl RelevanceModel {
    pub fn weights(&self) -> &[(String, f64)] {
        &self.weights
    }

    pub fn weight(&self, term: &str) -> f64 {
        self.weights.binary_search_by(|(t, _)| t.as_str().cmp(term)).map(|i| self.weights[i].1).unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Keeps the `max_terms` heaviest entries (ties by term) and renormalizes.
    fn truncated(mut weights: Vec<(String, f64)>, max_terms: usize) -> Self {
        weights.retain(|(_, w)| *w > 0.0);
        weights.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        weights.truncate(max_terms);
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        for (_, w) in &mut weights {
            *w /= total;
        }
        weights.sort_by(|a, b| a.0.cmp(&b.0));
        Self { weights }
    }
}

/// Result of running one configuration, including the feedback model for
/// rerankers.
#[derive(Debug, Clone)]
pub struct Retrieval {
    pub list: RankedList,
    pub relevance_model: Option<RelevanceModel>,
}

pub fn corpus_stats(index: &CorpusIndex) -> CorpusStats {
    CorpusStats {
        num_docs: index.num_docs() as u64,
        total_terms: index.total_terms(),
        avg_doc_length: index.avg_doc_length(),
    }
}

/// Distinct query terms present in the index, with their query counts.
pub(crate) fn query_terms(index: &CorpusIndex, query: &AnalyzedText) -> Vec<(TermId, u32)> {
    query.term_counts().into_iter().filter_map(|(t, n)| index.term_id(t).map(|id| (id, n))).collect()
}

pub fn run_query(
    index: &CorpusIndex,
    config: &SimilarityConfig,
    query_id: &str,
    query: &AnalyzedText,
    k: usize,
) -> Result<RankedList, RetrievalError> {
    Ok(retrieve(index, config, query_id, query, k)?.list)
}

/// Runs `config` for `query`, returning the top `k` documents.
pub fn retrieve(
    index: &CorpusIndex,
    config: &SimilarityConfig,
    query_id: &str,
    query: &AnalyzedText,
    k: usize,
) -> Result<Retrieval, RetrievalError> {
    if query.is_empty() {
        return Err(RetrievalError::EmptyQuery(query_id.to_owned()));
    }
    if k == 0 {
        return Err(RetrievalError::ZeroDepth);
    }
    match config {
        SimilarityConfig::Base(sim) => {
            let mut list = first_stage(index, sim, query_id, query, k);
            list.config = config.canonical_name();
            Ok(Retrieval { list, relevance_model: None })
        }
        SimilarityConfig::Rerank(rr) => {
            let base = first_stage(index, &rr.base, query_id, query, k);
            if base.is_empty() {
                let list = RankedList { config: config.canonical_name(), ..base };
                return Ok(Retrieval { list, relevance_model: None });
            }
            let model = feedback_model(index, rr, &base, query)?;
            let mut list = rerank(index, &base, &model, rr.smoothing_mu());
            list.config = config.canonical_name();
            list.diagnostics.merge(base.diagnostics);
            Ok(Retrieval { list, relevance_model: Some(model) })
        }
    }
}

fn feedback_model(
    index: &CorpusIndex,
    rr: &RerankConfig,
    base: &RankedList,
    query: &AnalyzedText,
) -> Result<RelevanceModel, RetrievalError> {
    let rm1 = build_rm1(index, base, query, rr.fb_docs, rr.fb_terms, rr.smoothing_mu())?;
    Ok(match rr.model {
        FeedbackModel::Rm1 => rm1,
        FeedbackModel::Rm3 { lambda } => build_rm3(&rm1, query, lambda, rr.fb_terms),
    })
}

fn first_stage(index: &CorpusIndex, sim: &Similarity, query_id: &str, query: &AnalyzedText, k: usize) -> RankedList {
    let terms = query_terms(index, query);
    let corpus = corpus_stats(index);
    // doc -> tf of each query term, in `terms` order
    let mut matches: BTreeMap<DocId, Vec<u64>> = BTreeMap::new();
    for (i, &(term, _)) in terms.iter().enumerate() {
        for p in index.postings(term) {
            matches.entry(p.doc).or_insert_with(|| vec![0; terms.len()])[i] = u64::from(p.tf);
        }
    }
    let mut diagnostics = Diagnostics::default();
    let mut stats = Vec::with_capacity(terms.len());
    let mut scored: Vec<(DocId, f64)> = Vec::with_capacity(matches.len());
    for (doc, tfs) in matches {
        let doc_length = index.doc(doc).length;
        stats.clear();
        stats.extend(terms.iter().zip(&tfs).map(|(&(term, qtf), &tf)| TermQueryStats {
            query_tf: qtf,
            tf,
            df: index.df(term),
            ctf: index.ctf(term),
            doc_length,
        }));
        let s = score_with_diagnostics(sim, &corpus, &stats, &mut diagnostics)
            .expect("candidate documents contain a query term");
        scored.push((doc, s));
    }
    let mut list = ranked(index, query_id, sim.canonical_name(), k, scored);
    list.diagnostics = diagnostics;
    list
}

/// Orders by score descending, then external id ascending.
pub fn compare_scored(index: &CorpusIndex, a: &(DocId, f64), b: &(DocId, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| index.doc(a.0).external_id.cmp(&index.doc(b.0).external_id))
}

fn ranked(index: &CorpusIndex, query_id: &str, config: String, k: usize, mut scored: Vec<(DocId, f64)>) -> RankedList {
    scored.sort_by(|a, b| compare_scored(index, a, b));
    scored.truncate(k);
    let items = scored
        .into_iter()
        .enumerate()
        .map(|(i, (doc, score))| ScoredDoc {
            internal_id: doc,
            external_id: index.doc(doc).external_id.clone(),
            score,
            rank: i + 1,
        })
        .collect();
    RankedList { query_id: query_id.to_owned(), config, k_requested: k, items, diagnostics: Diagnostics::default() }
}

/// Dirichlet-smoothed `ln p(w|d)`; arguments below the log floor are clamped.
fn smoothed_log_prob(index: &CorpusIndex, doc: DocId, term: Option<TermId>, mu: f64, diag: &mut Diagnostics) -> f64 {
    let d = index.doc(doc);
    let (tf, p_coll) = match term {
        Some(t) => (f64::from(d.tf(t)), index.collection_prob(t)),
        None => (0.0, 0.0),
    };
    let p = (tf + mu * p_coll) / (d.length as f64 + mu);
    if p > 0.0 {
        p.ln()
    } else {
        diag.log_clamps += 1;
        LOG_FLOOR.ln()
    }
}

/// RM1 over the top `fb_docs` of `base_list`:
/// `p(w|R) ∝ Σ_d p(w|d) p(q|d)`, with `p(q|d)` the Dirichlet query likelihood
/// normalized over the feedback documents.
pub fn build_rm1(
    index: &CorpusIndex,
    base_list: &RankedList,
    query: &AnalyzedText,
    fb_docs: usize,
    fb_terms: usize,
    mu: f64,
) -> Result<RelevanceModel, RetrievalError> {
    if base_list.is_empty() {
        return Err(RetrievalError::EmptyFeedback);
    }
    if fb_docs == 0 {
        return Err(RetrievalError::ZeroFeedbackDocs);
    }
    let terms = query_terms(index, query);
    let feedback = &base_list.items[..fb_docs.min(base_list.len())];
    let mut diag = Diagnostics::default();
    let log_likelihoods: Vec<f64> = feedback
        .iter()
        .map(|d| {
            terms
                .iter()
                .map(|&(t, n)| f64::from(n) * smoothed_log_prob(index, d.internal_id, Some(t), mu, &mut diag))
                .sum()
        })
        .collect();
    let max = log_likelihoods.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = log_likelihoods.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exp.iter().sum();

    let mut mixture: BTreeMap<TermId, f64> = BTreeMap::new();
    for (d, e) in feedback.iter().zip(&exp) {
        let p_q_d = e / z;
        let lm = index.doc_language_model(d.internal_id).expect("retrieved documents have positive length");
        for (t, p) in lm {
            *mixture.entry(t).or_insert(0.0) += p * p_q_d;
        }
    }
    let weights = mixture.into_iter().map(|(t, w)| (index.term(t).to_owned(), w)).collect();
    Ok(RelevanceModel::truncated(weights, fb_terms))
}

/// `lambda * MLE(query) + (1 - lambda) * rm1`, truncated to `fb_terms`.
pub fn build_rm3(rm1: &RelevanceModel, query: &AnalyzedText, lambda: f64, fb_terms: usize) -> RelevanceModel {
    if lambda == 0.0 && rm1.len() <= fb_terms {
        return rm1.clone();
    }
    let mut mixed: BTreeMap<String, f64> = BTreeMap::new();
    for (t, w) in &rm1.weights {
        *mixed.entry(t.clone()).or_insert(0.0) += (1.0 - lambda) * w;
    }
    let qlen = query.len() as f64;
    if qlen > 0.0 {
        for (t, n) in query.term_counts() {
            *mixed.entry(t.to_owned()).or_insert(0.0) += lambda * f64::from(n) / qlen;
        }
    }
    RelevanceModel::truncated(mixed.into_iter().collect(), fb_terms)
}

/// Rescores every document of `base_list` by `Σ_w p(w|R) ln p_mu(w|d)`.
pub fn rerank(index: &CorpusIndex, base_list: &RankedList, model: &RelevanceModel, mu: f64) -> RankedList {
    let terms: Vec<(Option<TermId>, f64)> = model.weights.iter().map(|(t, w)| (index.term_id(t), *w)).collect();
    let mut diag = Diagnostics::default();
    let scored: Vec<(DocId, f64)> = base_list
        .items
        .iter()
        .map(|d| {
            let s = terms.iter().map(|&(t, w)| w * smoothed_log_prob(index, d.internal_id, t, mu, &mut diag)).sum();
            (d.internal_id, s)
        })
        .collect();
    let mut list = ranked(index, &base_list.query_id, base_list.config.clone(), base_list.k_requested, scored);
    list.diagnostics = diag;
    list
}

/// Writes `qid Q0 docid rank score tag` lines, scores with six decimals.
pub fn write_trec_run<W: Write + ?Sized>(w: &mut W, list: &RankedList) -> io::Result<()> {
    for d in &list.items {
        writeln!(w, "{} Q0 {} {} {:.6} {}", list.query_id, d.external_id, d.rank, d.score, list.config)?;
    }
    Ok(())
}
