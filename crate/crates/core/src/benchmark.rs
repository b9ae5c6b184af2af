//! Query benchmarks: topics in `qid<TAB>query text` form.

use std::collections::HashSet;
use std::io::BufRead;

use thiserror::Error;

use crate::index::{AnalyzedText, Analyzer};

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("topics line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate query id `{0}`")]
    DuplicateQuery(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkQuery {
    pub id: String,
    pub text: String,
    pub analyzed: AnalyzedText,
}

/// A sample of domain queries, kept in ascending id order.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryBenchmark {
    pub id: String,
    queries: Vec<BenchmarkQuery>,
}

impl QueryBenchmark {
    pub fn new(id: impl Into<String>, queries: Vec<BenchmarkQuery>) -> Result<Self, BenchmarkError> {
        let mut seen = HashSet::new();
        for q in &queries {
            if !seen.insert(q.id.as_str()) {
                return Err(BenchmarkError::DuplicateQuery(q.id.clone()));
            }
        }
        let mut queries = queries;
        queries.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(Self { id: id.into(), queries })
    }

    /// Analyzes `(id, text)` pairs.
    pub fn from_pairs<I, S, T>(id: impl Into<String>, analyzer: &Analyzer, pairs: I) -> Result<Self, BenchmarkError>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let queries = pairs
            .into_iter()
            .map(|(id, text)| {
                let text = text.into();
                BenchmarkQuery { id: id.into(), analyzed: analyzer.analyze(&text), text }
            })
            .collect();
        Self::new(id, queries)
    }

    pub fn queries(&self) -> &[BenchmarkQuery] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

/// Reads a TSV topics file. Blank lines and lines starting with `#` are skipped.
pub fn read_topics<R: BufRead>(
    id: impl Into<String>,
    analyzer: &Analyzer,
    reader: R,
) -> Result<QueryBenchmark, BenchmarkError> {
    let mut pairs = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (qid, text) = trimmed.split_once('\t').ok_or_else(|| BenchmarkError::Malformed {
            line: n + 1,
            message: "expected `qid<TAB>query text`".into(),
        })?;
        let qid = qid.trim();
        if qid.is_empty() {
            return Err(BenchmarkError::Malformed { line: n + 1, message: "empty query id".into() });
        }
        pairs.push((qid.to_owned(), text.to_owned()));
    }
    QueryBenchmark::from_pairs(id, analyzer, pairs)
}
