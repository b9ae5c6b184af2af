//! Scoring functions and the configuration grammar.
//!
//! A configuration is written as `family(:part)*`:
//!
//! | spec | meaning |
//! |------|---------|
//! | `bm25:k1=1.2,b=0.75` | Okapi BM25 |
//! | `lmd:mu=2000` | Dirichlet-smoothed query likelihood |
//! | `dfr:G:B:H2` | divergence from randomness: basic model, after effect, normalization |
//! | `ib:SPL:DF:H2` | information-based: distribution, lambda, normalization |
//! | `rm3:base=lmd:mu=2000;fbdocs=10;fbterms=25;lambda=0.5` | relevance-model reranking |
//!
//! Component names are case-insensitive and `NO`/`none` disables the
//! after effect or normalization.

mod config;
mod scoring;

pub use config::*;
pub use scoring::*;
