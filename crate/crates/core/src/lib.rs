//! Label-free selection of search-engine similarity configurations.
//!
//! The crate indexes a text corpus, scores queries under a set of candidate
//! similarity configurations (BM25, Dirichlet language model, the 105-point
//! divergence-from-randomness grid, information-based models and relevance-model
//! rerankers) and picks the configuration whose result lists look best according
//! to a query-performance-prediction utility. No relevance judgments are needed
//! for selection; the [`eval`] module scores a selection after the fact when
//! judgments are available.
//!
//! ```
//! use simtune_core::index::{Analyzer, build_index};
//! use simtune_core::similarity::SimilarityConfig;
//! use simtune_core::retrieval::run_query;
//!
//! let analyzer = Analyzer::english();
//! let docs = vec![("d1", "the quick brown fox"), ("d2", "a lazy dog")];
//! let index = build_index(&analyzer, docs).unwrap();
//! let config: SimilarityConfig = "bm25".parse().unwrap();
//! let query = analyzer.analyze("fox");
//! let list = run_query(&index, &config, "q1", &query, 10).unwrap();
//! assert_eq!(list.items[0].external_id, "d1");
//! ```

pub mod benchmark;
pub mod eval;
pub mod index;
pub mod qpp;
pub mod retrieval;
pub mod selector;
pub mod similarity;
pub mod synthetic;

/// Default retrieval depth.
pub const DEFAULT_DEPTH: usize = 100;
