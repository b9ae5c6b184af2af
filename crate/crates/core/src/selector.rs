//! Configuration selection: weighted sum of per-query likelihoods, argmax.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::benchmark::{BenchmarkQuery, QueryBenchmark};
use crate::index::CorpusIndex;
use crate::qpp::{self, LikelihoodEstimator, QueryWeights, NQC_FLOOR, SHIFT_EPSILON};
use crate::retrieval::{retrieve, RankedList, RetrievalError};
use crate::similarity::{
    self, default_dfr, default_ib, Diagnostics, Similarity, SimilarityConfig, LOG_FLOOR, NORM_C, NORM_H3_MU, NORM_Z,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectionError {
    #[error("at least two configurations are required, got {0}")]
    TooFewConfigs(usize),
    #[error("configuration `{0}` listed twice")]
    DuplicateConfig(String),
    #[error("benchmark has no queries")]
    NoQueries,
    #[error("every query is empty after analysis")]
    AllQueriesSkipped,
    #[error("query sets differ: missing likelihoods for {missing:?}, unweighted likelihoods for {extra:?}")]
    QueryMismatch { missing: Vec<String>, extra: Vec<String> },
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

/// Estimated benchmark-level relevance of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigUtility {
    pub config: String,
    pub utility: f64,
    /// `likelihood(q) · weight(q)` per query, in ascending query id order.
    pub per_query_contributions: BTreeMap<String, f64>,
}

/// `Σ_q likelihood(q) · weight(q)`, summed in ascending query id order.
pub fn utility(
    config: &str,
    weights: &QueryWeights,
    likelihoods: &BTreeMap<String, f64>,
) -> Result<ConfigUtility, SelectionError> {
    let by_query = weights.by_query();
    let weighted: BTreeSet<&str> = by_query.keys().copied().collect();
    let estimated: BTreeSet<&str> = likelihoods.keys().map(String::as_str).collect();
    if weighted != estimated {
        return Err(SelectionError::QueryMismatch {
            missing: weighted.difference(&estimated).map(|s| s.to_string()).collect(),
            extra: estimated.difference(&weighted).map(|s| s.to_string()).collect(),
        });
    }
    let per_query_contributions: BTreeMap<String, f64> =
        likelihoods.iter().map(|(q, l)| (q.clone(), l * by_query[q.as_str()])).collect();
    let utility = per_query_contributions.values().sum();
    Ok(ConfigUtility { config: config.to_owned(), utility, per_query_contributions })
}

/// One row of the report's configuration ranking.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedConfig {
    pub rank: usize,
    #[serde(flatten)]
    pub utility: ConfigUtility,
    /// Queries whose result list came back empty.
    pub empty_lists: usize,
    /// Queries whose NQC hit the zero-corpus-score or empty-list guard.
    pub degenerate_nqc: usize,
    pub diagnostics: Diagnostics,
}

/// Every constant the selection depends on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionSettings {
    pub depth: usize,
    pub query_doc_relevance: String,
    pub difficulty_predictor: &'static str,
    pub nqc_floor: f64,
    pub shift_epsilon: f64,
    pub weight_order: &'static str,
    pub default_dfr: String,
    pub default_ib: String,
    pub default_lmd_mu: f64,
    pub rm_fb_docs: usize,
    pub rm_fb_terms: usize,
    pub rm3_lambda: f64,
    pub log_floor: f64,
    pub normalization_c: f64,
    pub normalization_h3_mu: f64,
    pub normalization_z: f64,
    pub tie_breaking: &'static str,
}

impl SelectionSettings {
    pub fn new(depth: usize) -> Self {
        Self {
            depth,
            query_doc_relevance: Similarity::bm25_default().canonical_name(),
            difficulty_predictor: "nqc (population standard deviation)",
            nqc_floor: NQC_FLOOR,
            shift_epsilon: SHIFT_EPSILON,
            weight_order: "ascending difficulty score, hardest query first",
            default_dfr: default_dfr().canonical_name(),
            default_ib: default_ib().canonical_name(),
            default_lmd_mu: similarity::DEFAULT_MU,
            rm_fb_docs: similarity::DEFAULT_FB_DOCS,
            rm_fb_terms: similarity::DEFAULT_FB_TERMS,
            rm3_lambda: similarity::DEFAULT_RM3_LAMBDA,
            log_floor: LOG_FLOOR,
            normalization_c: NORM_C,
            normalization_h3_mu: NORM_H3_MU,
            normalization_z: NORM_Z,
            tie_breaking: "documents by external id, queries by id, configurations by canonical name",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub benchmark: String,
    pub chosen: String,
    pub queries_evaluated: usize,
    pub skipped_queries: Vec<String>,
    pub configs: Vec<RankedConfig>,
    pub query_weights: QueryWeights,
    pub settings: SelectionSettings,
}

impl SelectionReport {
    /// Configuration names from highest to lowest utility.
    pub fn ordering(&self) -> Vec<&str> {
        self.configs.iter().map(|c| c.utility.config.as_str()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let width = self.configs.iter().map(|c| c.utility.config.len()).max().unwrap_or(6).max(6);
        let mut out = format!(
            "benchmark: {}\nqueries: {} evaluated, {} skipped\nchosen: {}\n\n{:>4}  {:<width$}  {:>14}\n",
            self.benchmark,
            self.queries_evaluated,
            self.skipped_queries.len(),
            self.chosen,
            "rank",
            "config",
            "utility",
        );
        for c in &self.configs {
            out.push_str(&format!("{:>4}  {:<width$}  {:>14.6}\n", c.rank, c.utility.config, c.utility.utility));
        }
        out.push_str(&format!(
            "\ndefault DFR is {}; default IB is {}; override with explicit config specs\n",
            self.settings.default_dfr, self.settings.default_ib
        ));
        out
    }
}

/// Per (query, configuration) estimates, for offline inspection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QppRow {
    pub query_id: String,
    pub config: String,
    pub likelihood: f64,
    pub nqc: f64,
    pub corpus_score: f64,
}

#[derive(Debug, Clone)]
pub struct ConfigRuns {
    pub config: String,
    /// One list per evaluated query, in ascending query id order.
    pub lists: Vec<RankedList>,
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub report: SelectionReport,
    /// Sorted by configuration name.
    pub runs: Vec<ConfigRuns>,
    /// Sorted by query id, then configuration name.
    pub table: Vec<QppRow>,
}

struct Cell {
    list: RankedList,
    likelihood: qpp::QueryLikelihood,
    nqc: qpp::Nqc,
    corpus_score: f64,
}

/// Runs every configuration on every query at depth `k` and picks the
/// configuration with the highest weighted likelihood.
pub fn select(
    configs: &[SimilarityConfig],
    benchmark: &QueryBenchmark,
    index: &CorpusIndex,
    k: usize,
) -> Result<Selection, SelectionError> {
    if configs.len() < 2 {
        return Err(SelectionError::TooFewConfigs(configs.len()));
    }
    if k == 0 {
        return Err(RetrievalError::ZeroDepth.into());
    }
    let mut configs: Vec<(String, &SimilarityConfig)> = configs.iter().map(|c| (c.canonical_name(), c)).collect();
    configs.sort_by(|a, b| a.0.cmp(&b.0));
    if let Some(w) = configs.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(SelectionError::DuplicateConfig(w[0].0.clone()));
    }
    if benchmark.is_empty() {
        return Err(SelectionError::NoQueries);
    }
    let (queries, skipped): (Vec<&BenchmarkQuery>, Vec<&BenchmarkQuery>) =
        benchmark.queries().iter().partition(|q| !q.analyzed.is_empty());
    let skipped_queries: Vec<String> = skipped.iter().map(|q| q.id.clone()).collect();
    for id in &skipped_queries {
        log::warn!("query {id} is empty after analysis; skipped");
    }
    if queries.is_empty() {
        return Err(SelectionError::AllQueriesSkipped);
    }

    let estimator = LikelihoodEstimator::new(index);
    let pairs: Vec<(usize, usize)> = (0..configs.len()).flat_map(|c| (0..queries.len()).map(move |q| (c, q))).collect();
    let cells: Vec<Cell> = pairs
        .par_iter()
        .map(|&(c, q)| -> Result<Cell, SelectionError> {
            let config = configs[c].1;
            let query = queries[q];
            let r = retrieve(index, config, &query.id, &query.analyzed, k)?;
            let corpus_score = qpp::corpus_score(index, config, &query.analyzed, r.relevance_model.as_ref());
            let nqc = qpp::nqc(&r.list.scores(), corpus_score);
            let likelihood = estimator.likelihood(&query.analyzed, &r.list);
            Ok(Cell { list: r.list, likelihood, nqc, corpus_score })
        })
        .collect::<Result<_, _>>()?;
    let cell = |c: usize, q: usize| &cells[c * queries.len() + q];

    let nqc_table: BTreeMap<String, Vec<f64>> = queries
        .iter()
        .enumerate()
        .map(|(q, query)| (query.id.clone(), (0..configs.len()).map(|c| cell(c, q).nqc.value).collect()))
        .collect();
    let weights = qpp::query_weights(&qpp::difficulty_scores(&nqc_table));

    let mut ranked = Vec::with_capacity(configs.len());
    for (c, (name, _)) in configs.iter().enumerate() {
        let likelihoods: BTreeMap<String, f64> =
            queries.iter().enumerate().map(|(q, query)| (query.id.clone(), cell(c, q).likelihood.value)).collect();
        let mut diagnostics = Diagnostics::default();
        for q in 0..queries.len() {
            diagnostics.merge(cell(c, q).list.diagnostics);
        }
        ranked.push(RankedConfig {
            rank: 0,
            utility: utility(name, &weights, &likelihoods)?,
            empty_lists: (0..queries.len()).filter(|&q| cell(c, q).list.is_empty()).count(),
            degenerate_nqc: (0..queries.len()).filter(|&q| cell(c, q).nqc.degenerate).count(),
            diagnostics,
        });
    }
    ranked.sort_by(|a, b| {
        b.utility.utility.total_cmp(&a.utility.utility).then_with(|| a.utility.config.cmp(&b.utility.config))
    });
    for (i, r) in ranked.iter_mut().enumerate() {
        r.rank = i + 1;
    }

    let mut table = Vec::with_capacity(cells.len());
    for (q, query) in queries.iter().enumerate() {
        for (c, (name, _)) in configs.iter().enumerate() {
            let x = cell(c, q);
            table.push(QppRow {
                query_id: query.id.clone(),
                config: name.clone(),
                likelihood: x.likelihood.value,
                nqc: x.nqc.value,
                corpus_score: x.corpus_score,
            });
        }
    }

    let mut cells = cells.into_iter();
    let runs = configs
        .iter()
        .map(|(name, _)| ConfigRuns {
            config: name.clone(),
            lists: cells.by_ref().take(queries.len()).map(|x| x.list).collect(),
        })
        .collect();

    let report = SelectionReport {
        benchmark: benchmark.id.clone(),
        chosen: ranked[0].utility.config.clone(),
        queries_evaluated: queries.len(),
        skipped_queries,
        configs: ranked,
        query_weights: weights,
        settings: SelectionSettings::new(k),
    };
    Ok(Selection { report, runs, table })
}
