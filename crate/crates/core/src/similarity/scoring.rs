//! Per-term scoring formulas. See `FORMULAS.md` at the crate root for the
//! formulas with worked numbers.

use serde::Serialize;
use thiserror::Error;

use super::config::{AfterEffect, BasicModel, DfrConfig, Distribution, IbConfig, IbLambda, Normalization, Similarity};
use crate::index::idf;

/// Smallest argument passed to a logarithm.
pub const LOG_FLOOR: f64 = 1e-10;
/// `c` of the H1 and H2 normalizations.
pub const NORM_C: f64 = 1.0;
/// Dirichlet prior of the H3 normalization.
pub const NORM_H3_MU: f64 = 800.0;
/// Exponent of the Z normalization.
pub const NORM_Z: f64 = 0.3;

/// Corpus-wide constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusStats {
    pub num_docs: u64,
    pub total_terms: u64,
    pub avg_doc_length: f64,
}

/// Statistics of one query term against one document.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermQueryStats {
    /// Occurrences of the term in the query.
    pub query_tf: u32,
    pub tf: u64,
    pub df: u64,
    pub ctf: u64,
    pub doc_length: u64,
}

/// Counts of numerical guards that fired while scoring.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    pub log_clamps: u64,
    pub negative_floors: u64,
}

impl Diagnostics {
    pub fn merge(&mut self, other: Diagnostics) {
        self.log_clamps += other.log_clamps;
        self.negative_floors += other.negative_floors;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("no query term occurs in the document")]
    NoMatchingTerm,
}

/// Sums per-term scores over the query terms present in the document.
pub fn score(sim: &Similarity, corpus: &CorpusStats, terms: &[TermQueryStats]) -> Result<f64, ScoreError> {
    score_with_diagnostics(sim, corpus, terms, &mut Diagnostics::default())
}

pub fn score_with_diagnostics(
    sim: &Similarity,
    corpus: &CorpusStats,
    terms: &[TermQueryStats],
    diag: &mut Diagnostics,
) -> Result<f64, ScoreError> {
    let mut total = 0.0;
    let mut matched = false;
    for t in terms.iter().filter(|t| t.tf > 0) {
        matched = true;
        total += f64::from(t.query_tf) * term_score(sim, corpus, t, diag);
    }
    if matched {
        Ok(total)
    } else {
        Err(ScoreError::NoMatchingTerm)
    }
}

/// Score contribution of a single matching term (`tf > 0`).
pub fn term_score(sim: &Similarity, corpus: &CorpusStats, t: &TermQueryStats, diag: &mut Diagnostics) -> f64 {
    debug_assert!(t.tf > 0 && t.doc_length >= t.tf);
    let mut g = Guard { diag };
    match *sim {
        Similarity::Bm25 { k1, b } => bm25(k1, b, corpus, t),
        Similarity::LmDirichlet { mu } => {
            let p_coll = t.ctf as f64 / corpus.total_terms as f64;
            g.ln(1.0 + t.tf as f64 / (mu * p_coll)) + g.ln(mu / (t.doc_length as f64 + mu))
        }
        Similarity::Dfr(c) => {
            let v = dfr(c, corpus, t, &mut g);
            g.floor(v)
        }
        Similarity::Ib(c) => {
            let v = ib(c, corpus, t, &mut g);
            g.floor(v)
        }
    }
}

fn bm25(k1: f64, b: f64, corpus: &CorpusStats, t: &TermQueryStats) -> f64 {
    let tf = t.tf as f64;
    let norm = 1.0 - b + b * t.doc_length as f64 / corpus.avg_doc_length;
    idf(corpus.num_docs, t.df) * tf * (k1 + 1.0) / (tf + k1 * norm)
}

struct Guard<'a> {
    diag: &'a mut Diagnostics,
}

impl Guard<'_> {
    fn arg(&mut self, x: f64) -> f64 {
        if x > 0.0 {
            x
        } else {
            self.diag.log_clamps += 1;
            LOG_FLOOR
        }
    }

    fn ln(&mut self, x: f64) -> f64 {
        self.arg(x).ln()
    }

    fn log2(&mut self, x: f64) -> f64 {
        self.arg(x).log2()
    }

    fn floor(&mut self, x: f64) -> f64 {
        if x >= 0.0 {
            x
        } else {
            self.diag.negative_floors += 1;
            0.0
        }
    }
}

fn tf_normalization(n: Normalization, corpus: &CorpusStats, t: &TermQueryStats, g: &mut Guard) -> f64 {
    let tf = t.tf as f64;
    let dl = t.doc_length as f64;
    let avgdl = corpus.avg_doc_length;
    match n {
        Normalization::H1 => tf * NORM_C * avgdl / dl,
        Normalization::H2 => tf * g.log2(1.0 + NORM_C * avgdl / dl),
        Normalization::H3 => {
            let p_coll = (t.ctf as f64 + 1.0) / (corpus.total_terms as f64 + 1.0);
            (tf + NORM_H3_MU * p_coll) / (dl + NORM_H3_MU) * NORM_H3_MU
        }
        Normalization::Z => tf * (avgdl / dl).powf(NORM_Z),
        Normalization::No => tf,
    }
}

fn dfr(c: DfrConfig, corpus: &CorpusStats, t: &TermQueryStats, g: &mut Guard) -> f64 {
    let tfn = tf_normalization(c.normalization, corpus, t, g);
    basic_model(c.basic_model, corpus, t, tfn, g) * after_effect(c.after_effect, t, tfn)
}

fn basic_model(m: BasicModel, corpus: &CorpusStats, t: &TermQueryStats, tfn: f64, g: &mut Guard) -> f64 {
    let n_docs = corpus.num_docs as f64;
    let ctf = t.ctf as f64;
    let df = t.df as f64;
    match m {
        BasicModel::Be => {
            let f = ctf + 1.0 + tfn;
            let n = f + n_docs;
            let mut fpart = |n: f64, m: f64| (m + 0.5) * g.log2(n / m) + (n - m) * g.log2(n);
            let a = fpart(n + f - 1.0, n + f - tfn - 2.0);
            let b = fpart(f, f - tfn);
            -g.log2((n - 1.0) * std::f64::consts::E) + a - b
        }
        BasicModel::D => {
            let f = ctf + 1.0 + tfn;
            let phi = tfn / f;
            let nphi = 1.0 - phi;
            let p = 1.0 / (n_docs + 1.0);
            let d = phi * g.log2(phi / p) + nphi * g.log2(nphi / (1.0 - p));
            d * f + 0.5 * g.log2(1.0 + 2.0 * std::f64::consts::PI * tfn * nphi)
        }
        BasicModel::G => {
            let f = ctf + 1.0;
            let lambda = f / (n_docs + f);
            g.log2(lambda + 1.0) + tfn * g.log2((1.0 + lambda) / lambda)
        }
        BasicModel::If => tfn * g.log2(1.0 + (n_docs + 1.0) / (ctf + 0.5)),
        BasicModel::In => tfn * g.log2((n_docs + 1.0) / (df + 0.5)),
        BasicModel::Ine => {
            let ne = n_docs * (1.0 - ((n_docs - 1.0) / n_docs).powf(ctf));
            tfn * g.log2((n_docs + 1.0) / (ne + 0.5))
        }
        BasicModel::P => {
            let lambda = (ctf + 1.0) / (n_docs + 1.0);
            tfn * g.log2(tfn / lambda)
                + (lambda + 1.0 / (12.0 * tfn) - tfn) * std::f64::consts::LOG2_E
                + 0.5 * g.log2(2.0 * std::f64::consts::PI * tfn)
        }
    }
}

fn after_effect(a: AfterEffect, t: &TermQueryStats, tfn: f64) -> f64 {
    match a {
        AfterEffect::B => {
            let f = t.ctf as f64 + 1.0;
            let n = t.df as f64 + 1.0;
            (f + 1.0) / (n * (tfn + 1.0))
        }
        AfterEffect::L => 1.0 / (tfn + 1.0),
        AfterEffect::No => 1.0,
    }
}

fn ib(c: IbConfig, corpus: &CorpusStats, t: &TermQueryStats, g: &mut Guard) -> f64 {
    let tfn = tf_normalization(c.normalization, corpus, t, g);
    let n_docs = corpus.num_docs as f64;
    let lambda = match c.lambda {
        IbLambda::Df => (t.df as f64 + 1.0) / (n_docs + 1.0),
        IbLambda::Ttf => (t.ctf as f64 + 1.0) / (n_docs + 1.0),
    };
    match c.distribution {
        Distribution::Ll => -g.ln(lambda / (tfn + lambda)),
        Distribution::Spl => {
            let lambda = if lambda == 1.0 { 0.99 } else { lambda };
            -g.ln((lambda.powf(tfn / (tfn + 1.0)) - lambda) / (1.0 - lambda))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::config::{enumerate_dfr_grid, enumerate_ib_grid, SimilarityConfig};

    fn one_doc() -> (CorpusStats, TermQueryStats) {
        // corpus {d1: "a a b"}, query "a"
        (
            CorpusStats { num_docs: 1, total_terms: 3, avg_doc_length: 3.0 },
            TermQueryStats { query_tf: 1, tf: 2, df: 1, ctf: 2, doc_length: 3 },
        )
    }

    #[test]
    fn bm25_hand_case() {
        let (c, t) = one_doc();
        let s = score(&Similarity::bm25_default(), &c, &[t]).unwrap();
        // idf = ln(4/3), tf part = 2 * 2.2 / (2 + 1.2) = 1.375
        let expected = (4.0f64 / 3.0).ln() * 1.375;
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 0.395563).abs() < 1e-6);
    }

    #[test]
    fn lmd_vanishes_for_huge_mu() {
        let (c, t) = one_doc();
        let s = score(&Similarity::LmDirichlet { mu: 1e9 }, &c, &[t]).unwrap();
        assert!(s.abs() < 1e-3, "{s}");
        assert!(s <= 0.0);
    }

    #[test]
    fn no_matching_term_is_an_error() {
        let (c, mut t) = one_doc();
        t.tf = 0;
        let dfr = Similarity::dfr(BasicModel::G, AfterEffect::No, Normalization::No);
        assert_eq!(score(&dfr, &c, &[t]), Err(ScoreError::NoMatchingTerm));
    }

    #[test]
    fn query_tf_multiplies() {
        let (c, t) = one_doc();
        let sim = Similarity::bm25_default();
        let once = score(&sim, &c, &[t]).unwrap();
        let twice = score(&sim, &c, &[TermQueryStats { query_tf: 2, ..t }]).unwrap();
        assert_eq!(twice, 2.0 * once);
    }

    #[test]
    fn bm25_b_zero_ignores_length() {
        let (c, t) = one_doc();
        let sim = Similarity::Bm25 { k1: 1.2, b: 0.0 };
        let a = score(&sim, &c, &[t]).unwrap();
        let b = score(&sim, &c, &[TermQueryStats { doc_length: 300, ..t }]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn spl_lambda_one_is_nudged() {
        // df == N makes the DF lambda exactly 1
        let c = CorpusStats { num_docs: 4, total_terms: 40, avg_doc_length: 10.0 };
        let t = TermQueryStats { query_tf: 1, tf: 3, df: 4, ctf: 8, doc_length: 10 };
        let sim = Similarity::ib(Distribution::Spl, IbLambda::Df, Normalization::No);
        let s = score(&sim, &c, &[t]).unwrap();
        let expected = -((0.99f64.powf(0.75) - 0.99) / 0.01).ln();
        assert!((s - expected).abs() < 1e-12);
    }

    #[test]
    fn guards_keep_everything_finite_on_extremes() {
        let corpora = [
            CorpusStats { num_docs: 1, total_terms: 1, avg_doc_length: 1.0 },
            CorpusStats { num_docs: 2, total_terms: 1000, avg_doc_length: 500.0 },
        ];
        let mut configs = enumerate_dfr_grid();
        configs.extend(enumerate_ib_grid());
        for c in &corpora {
            for t in [
                TermQueryStats { query_tf: 1, tf: 1, df: 1, ctf: 1, doc_length: 1 },
                TermQueryStats { query_tf: 1, tf: 1, df: c.num_docs, ctf: c.total_terms, doc_length: c.total_terms },
            ] {
                for cfg in &configs {
                    let SimilarityConfig::Base(sim) = cfg else { unreachable!() };
                    let mut d = Diagnostics::default();
                    let s = score_with_diagnostics(sim, c, &[t], &mut d).unwrap();
                    assert!(s.is_finite() && s >= 0.0, "{cfg} {t:?} -> {s}");
                }
            }
        }
    }
}
