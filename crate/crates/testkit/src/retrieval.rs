//! Score-everything retrieval over recounted statistics.

use std::collections::BTreeMap;

use simtune_core::index::{AnalyzedText, Analyzer};
use simtune_core::similarity::{
    enumerate_dfr_grid, enumerate_ib_grid, term_score, CorpusStats, Diagnostics, FeedbackModel, RerankConfig,
    Similarity, SimilarityConfig, TermQueryStats, LOG_FLOOR,
};

/// Term counts recomputed from analyzed text.
#[derive(Debug, Clone)]
pub struct NaiveCorpus {
    pub ids: Vec<String>,
    pub tfs: Vec<BTreeMap<String, u64>>,
    pub lengths: Vec<u64>,
    pub df: BTreeMap<String, u64>,
    pub ctf: BTreeMap<String, u64>,
    pub total_terms: u64,
}

impl NaiveCorpus {
    pub fn new<S: AsRef<str>>(analyzer: &Analyzer, docs: &[(S, S)]) -> Self {
        let mut c = NaiveCorpus {
            ids: Vec::new(),
            tfs: Vec::new(),
            lengths: Vec::new(),
            df: BTreeMap::new(),
            ctf: BTreeMap::new(),
            total_terms: 0,
        };
        for (id, text) in docs {
            let terms = analyzer.analyze(text.as_ref());
            let mut tf: BTreeMap<String, u64> = BTreeMap::new();
            for t in terms.iter() {
                *tf.entry(t.to_owned()).or_insert(0) += 1;
            }
            for (t, n) in &tf {
                *c.df.entry(t.clone()).or_insert(0) += 1;
                *c.ctf.entry(t.clone()).or_insert(0) += n;
            }
            c.total_terms += terms.len() as u64;
            c.lengths.push(terms.len() as u64);
            c.tfs.push(tf);
            c.ids.push(id.as_ref().to_owned());
        }
        c
    }

    pub fn num_docs(&self) -> usize {
        self.ids.len()
    }

    pub fn stats(&self) -> CorpusStats {
        CorpusStats {
            num_docs: self.ids.len() as u64,
            total_terms: self.total_terms,
            avg_doc_length: self.total_terms as f64 / self.ids.len() as f64,
        }
    }

    fn tf(&self, doc: usize, term: &str) -> u64 {
        self.tfs[doc].get(term).copied().unwrap_or(0)
    }

    fn ln_smoothed(&self, doc: usize, term: &str, mu: f64) -> f64 {
        let p_coll = self.ctf.get(term).map_or(0.0, |&c| c as f64 / self.total_terms as f64);
        let p = (self.tf(doc, term) as f64 + mu * p_coll) / (self.lengths[doc] as f64 + mu);
        if p > 0.0 {
            p.ln()
        } else {
            LOG_FLOOR.ln()
        }
    }

    /// Distinct query terms present in the corpus with their query counts, by term.
    fn known_terms(&self, query: &AnalyzedText) -> Vec<(String, u32)> {
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for t in query.iter() {
            *counts.entry(t.to_owned()).or_insert(0) += 1;
        }
        counts.into_iter().filter(|(t, _)| self.df.contains_key(t)).collect()
    }
}

/// `(doc index, score)` sorted by score descending, then id ascending.
fn sorted(corpus: &NaiveCorpus, mut scored: Vec<(usize, f64)>, k: usize) -> Vec<(usize, f64)> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| corpus.ids[a.0].cmp(&corpus.ids[b.0])));
    scored.truncate(k);
    scored
}

fn base_scores(corpus: &NaiveCorpus, sim: &Similarity, query: &AnalyzedText, k: usize) -> Vec<(usize, f64)> {
    let stats = corpus.stats();
    let terms = corpus.known_terms(query);
    let mut scored = Vec::new();
    for doc in 0..corpus.num_docs() {
        let mut total = 0.0;
        let mut matched = false;
        for (t, qtf) in &terms {
            let tf = corpus.tf(doc, t);
            if tf == 0 {
                continue;
            }
            matched = true;
            let s = TermQueryStats {
                query_tf: *qtf,
                tf,
                df: corpus.df[t],
                ctf: corpus.ctf[t],
                doc_length: corpus.lengths[doc],
            };
            total += f64::from(*qtf) * term_score(sim, &stats, &s, &mut Diagnostics::default());
        }
        if matched {
            scored.push((doc, total));
        }
    }
    sorted(corpus, scored, k)
}

fn keep_heaviest(mut weights: Vec<(String, f64)>, n: usize) -> Vec<(String, f64)> {
    weights.retain(|(_, w)| *w > 0.0);
    weights.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    weights.truncate(n);
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut weights {
        *w /= total;
    }
    weights.sort_by(|a, b| a.0.cmp(&b.0));
    weights
}

/// Relevance model over the top documents of `base`, sorted by term.
pub fn relevance_model(
    corpus: &NaiveCorpus,
    rr: &RerankConfig,
    base: &[(usize, f64)],
    query: &AnalyzedText,
) -> Vec<(String, f64)> {
    let mu = rr.smoothing_mu();
    let feedback = &base[..rr.fb_docs.min(base.len())];
    let terms = corpus.known_terms(query);
    let loglik: Vec<f64> = feedback
        .iter()
        .map(|&(d, _)| terms.iter().map(|(t, n)| f64::from(*n) * corpus.ln_smoothed(d, t, mu)).sum())
        .collect();
    let max = loglik.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = loglik.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = e.iter().sum();
    let mut mixture: BTreeMap<String, f64> = BTreeMap::new();
    for (&(d, _), e) in feedback.iter().zip(&e) {
        let p_q_d = e / z;
        for (t, tf) in &corpus.tfs[d] {
            *mixture.entry(t.clone()).or_insert(0.0) += (*tf as f64 / corpus.lengths[d] as f64) * p_q_d;
        }
    }
    let rm1 = keep_heaviest(mixture.into_iter().collect(), rr.fb_terms);
    match rr.model {
        FeedbackModel::Rm1 => rm1,
        FeedbackModel::Rm3 { lambda } => {
            if lambda == 0.0 && rm1.len() <= rr.fb_terms {
                return rm1;
            }
            let mut mixed: BTreeMap<String, f64> = BTreeMap::new();
            for (t, w) in &rm1 {
                *mixed.entry(t.clone()).or_insert(0.0) += (1.0 - lambda) * w;
            }
            let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
            for t in query.iter() {
                *counts.entry(t).or_insert(0) += 1;
            }
            for (t, n) in counts {
                *mixed.entry(t.to_owned()).or_insert(0.0) += lambda * f64::from(n) / query.len() as f64;
            }
            keep_heaviest(mixed.into_iter().collect(), rr.fb_terms)
        }
    }
}

/// Top `k` `(external id, score)` pairs for any configuration.
pub fn brute_force(
    corpus: &NaiveCorpus,
    config: &SimilarityConfig,
    query: &AnalyzedText,
    k: usize,
) -> Vec<(String, f64)> {
    let ranked = match config {
        SimilarityConfig::Base(sim) => base_scores(corpus, sim, query, k),
        SimilarityConfig::Rerank(rr) => {
            let base = base_scores(corpus, &rr.base, query, k);
            if base.is_empty() {
                base
            } else {
                let model = relevance_model(corpus, rr, &base, query);
                let mu = rr.smoothing_mu();
                let rescored = base
                    .iter()
                    .map(|&(d, _)| (d, model.iter().map(|(t, w)| w * corpus.ln_smoothed(d, t, mu)).sum()))
                    .collect();
                sorted(corpus, rescored, k)
            }
        }
    };
    ranked.into_iter().map(|(d, s)| (corpus.ids[d].clone(), s)).collect()
}

/// Configurations covering every family. Successive `round`s walk through
/// the DFR and IB grids and vary the base and feedback parameters.
pub fn family_sample(round: usize) -> Vec<SimilarityConfig> {
    let dfr = enumerate_dfr_grid();
    let ib = enumerate_ib_grid();
    let k1 = [0.6, 1.2, 2.0][round % 3];
    let b = [0.0, 0.75, 1.0][round % 3];
    let mu = [10.0, 500.0, 2000.0][round % 3];
    let rerank_base =
        [Similarity::LmDirichlet { mu }, Similarity::Bm25 { k1, b }, *dfr[round % dfr.len()].first_stage()];
    let mut configs = vec![
        SimilarityConfig::Base(Similarity::Bm25 { k1, b }),
        SimilarityConfig::Base(Similarity::LmDirichlet { mu }),
    ];
    configs.extend((0..3).map(|j| dfr[(round * 3 + j) % dfr.len()]));
    configs.extend((0..2).map(|j| ib[(round * 2 + j) % ib.len()]));
    configs.push(SimilarityConfig::Rerank(RerankConfig {
        base: rerank_base[round % 3],
        model: FeedbackModel::Rm1,
        fb_docs: [1, 5, 10][round % 3],
        fb_terms: [3, 25, 50][(round / 3) % 3],
    }));
    configs.push(SimilarityConfig::Rerank(RerankConfig {
        base: rerank_base[(round + 1) % 3],
        model: FeedbackModel::Rm3 { lambda: [0.0, 0.5, 1.0, 0.3][round % 4] },
        fb_docs: [10, 3, 20][round % 3],
        fb_terms: [25, 5, 10][(round / 2) % 3],
    }));
    configs
}

/// Compares an engine result list with [`brute_force`]: same ids in the same
/// order and scores within `tol`.
pub fn compare_lists(engine: &[(String, f64)], oracle: &[(String, f64)], tol: f64) -> Result<(), String> {
    if engine.len() != oracle.len() {
        return Err(format!("length {} vs oracle {}", engine.len(), oracle.len()));
    }
    for (i, (e, o)) in engine.iter().zip(oracle).enumerate() {
        if e.0 != o.0 {
            return Err(format!("rank {}: {} vs oracle {}", i + 1, e.0, o.0));
        }
        if (e.1 - o.1).abs() > tol || !e.1.is_finite() {
            return Err(format!("rank {}: score {} vs oracle {}", i + 1, e.1, o.1));
        }
    }
    Ok(())
}
