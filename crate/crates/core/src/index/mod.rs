//! Inverted index and corpus statistics.

mod analysis;
pub mod corpus;
mod store;

use std::collections::HashMap;

use thiserror::Error;

pub use analysis::{AnalyzedText, Analyzer};
pub use store::{load_index, read_index, save_index, write_index, FORMAT_VERSION, MAGIC};

pub type TermId = u32;
pub type DocId = u32;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("corpus has no indexable terms")]
    EmptyCorpus,
    #[error("document {0} has zero length")]
    DegenerateDocument(DocId),
    #[error("index format error: {0}")]
    Format(String),
    #[error("corpus parse error at {location}: {message}")]
    Corpus { location: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: DocId,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentRecord {
    pub external_id: String,
    pub internal_id: DocId,
    /// Sorted by term id.
    pub term_freqs: Vec<(TermId, u32)>,
    pub length: u64,
}

impl DocumentRecord {
    pub fn tf(&self, term: TermId) -> u32 {
        self.term_freqs.binary_search_by_key(&term, |&(t, _)| t).map(|i| self.term_freqs[i].1).unwrap_or(0)
    }
}

/// Immutable inverted index over a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusIndex {
    docs: Vec<DocumentRecord>,
    /// Sorted, so term ids follow lexicographic order.
    vocab: Vec<String>,
    term_lookup: HashMap<String, TermId>,
    doc_lookup: HashMap<String, DocId>,
    postings: Vec<Vec<Posting>>,
    ctf: Vec<u64>,
    total_terms: u64,
    avg_doc_length: f64,
}

impl CorpusIndex {
    /// Assembles an index from the vocabulary and document records; every
    /// derived statistic is recomputed here.
    pub(crate) fn from_parts(vocab: Vec<String>, docs: Vec<DocumentRecord>) -> Result<Self, IndexError> {
        let mut postings = vec![Vec::new(); vocab.len()];
        let mut ctf = vec![0u64; vocab.len()];
        let mut total_terms = 0u64;
        let mut doc_lookup = HashMap::with_capacity(docs.len());
        for doc in &docs {
            if doc_lookup.insert(doc.external_id.clone(), doc.internal_id).is_some() {
                return Err(IndexError::DuplicateId(doc.external_id.clone()));
            }
            for &(term, tf) in &doc.term_freqs {
                postings[term as usize].push(Posting { doc: doc.internal_id, tf });
                ctf[term as usize] += u64::from(tf);
            }
            total_terms += doc.length;
        }
        if total_terms == 0 {
            return Err(IndexError::EmptyCorpus);
        }
        let term_lookup = vocab.iter().enumerate().map(|(i, t)| (t.clone(), i as TermId)).collect();
        let avg_doc_length = total_terms as f64 / docs.len() as f64;
        Ok(Self { docs, vocab, term_lookup, doc_lookup, postings, ctf, total_terms, avg_doc_length })
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn total_terms(&self) -> u64 {
        self.total_terms
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn docs(&self) -> &[DocumentRecord] {
        &self.docs
    }

    pub fn doc(&self, id: DocId) -> &DocumentRecord {
        &self.docs[id as usize]
    }

    pub fn doc_by_external_id(&self, external_id: &str) -> Option<&DocumentRecord> {
        self.doc_lookup.get(external_id).map(|&id| self.doc(id))
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.term_lookup.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.vocab[id as usize]
    }

    pub fn postings(&self, term: TermId) -> &[Posting] {
        &self.postings[term as usize]
    }

    pub fn df(&self, term: TermId) -> u64 {
        self.postings[term as usize].len() as u64
    }

    pub fn ctf(&self, term: TermId) -> u64 {
        self.ctf[term as usize]
    }

    /// Document frequency by term string; 0 for unseen terms.
    pub fn df_of(&self, term: &str) -> u64 {
        self.term_id(term).map_or(0, |t| self.df(t))
    }

    pub fn ctf_of(&self, term: &str) -> u64 {
        self.term_id(term).map_or(0, |t| self.ctf(t))
    }

    /// BM25 idf, `ln(1 + (N - df + 0.5) / (df + 0.5))`. Unseen terms have df 0.
    pub fn idf(&self, term: &str) -> f64 {
        idf(self.num_docs() as u64, self.df_of(term))
    }

    pub fn idf_by_id(&self, term: TermId) -> f64 {
        idf(self.num_docs() as u64, self.df(term))
    }

    /// Collection probability `ctf / total_terms`.
    pub fn collection_prob(&self, term: TermId) -> f64 {
        self.ctf(term) as f64 / self.total_terms as f64
    }

    /// Maximum-likelihood language model of a document, sorted by term id.
    pub fn doc_language_model(&self, id: DocId) -> Result<Vec<(TermId, f64)>, IndexError> {
        let doc = self.doc(id);
        if doc.length == 0 {
            return Err(IndexError::DegenerateDocument(id));
        }
        let len = doc.length as f64;
        Ok(doc.term_freqs.iter().map(|&(t, tf)| (t, f64::from(tf) / len)).collect())
    }
}

pub fn idf(num_docs: u64, df: u64) -> f64 {
    let n = num_docs as f64;
    let df = df as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

/// Single-writer index builder.
#[derive(Debug, Default)]
pub struct IndexBuilder {
    docs: Vec<(String, HashMap<String, u32>)>,
    seen: HashMap<String, usize>,
}

impl IndexBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_document(&mut self, external_id: &str, text: &AnalyzedText) -> Result<(), IndexError> {
        if self.seen.contains_key(external_id) {
            return Err(IndexError::DuplicateId(external_id.to_owned()));
        }
        let mut counts = HashMap::new();
        for term in text.iter() {
            *counts.entry(term.to_owned()).or_insert(0u32) += 1;
        }
        self.seen.insert(external_id.to_owned(), self.docs.len());
        self.docs.push((external_id.to_owned(), counts));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn finish(self) -> Result<CorpusIndex, IndexError> {
        let mut vocab: Vec<String> = self.docs.iter().flat_map(|(_, counts)| counts.keys().cloned()).collect();
        vocab.sort_unstable();
        vocab.dedup();
        let ids: HashMap<&str, TermId> = vocab.iter().enumerate().map(|(i, t)| (t.as_str(), i as TermId)).collect();
        let docs = self
            .docs
            .iter()
            .enumerate()
            .map(|(i, (external_id, counts))| {
                let mut term_freqs: Vec<(TermId, u32)> = counts.iter().map(|(t, &tf)| (ids[t.as_str()], tf)).collect();
                term_freqs.sort_unstable();
                let length = term_freqs.iter().map(|&(_, tf)| u64::from(tf)).sum();
                DocumentRecord { external_id: external_id.clone(), internal_id: i as DocId, term_freqs, length }
            })
            .collect();
        CorpusIndex::from_parts(vocab, docs)
    }
}

/// Analyzes and indexes `(external_id, text)` pairs.
pub fn build_index<I, S, T>(analyzer: &Analyzer, docs: I) -> Result<CorpusIndex, IndexError>
where
    I: IntoIterator<Item = (S, T)>,
    S: AsRef<str>,
    T: AsRef<str>,
{
    let mut builder = IndexBuilder::new();
    for (id, text) in docs {
        builder.add_document(id.as_ref(), &analyzer.analyze(text.as_ref()))?;
    }
    builder.finish()
}
