//! English text analysis: tokenize, lowercase, drop stopwords, Porter-stem.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

const ENGLISH_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// The analyzed form of a piece of text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzedText {
    terms: Vec<String>,
}

impl AnalyzedText {
    pub fn new(terms: Vec<String>) -> Self {
        Self { terms }
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    /// Distinct terms with their in-text counts, sorted by term.
    pub fn term_counts(&self) -> Vec<(&str, u32)> {
        let mut sorted: Vec<&str> = self.iter().collect();
        sorted.sort_unstable();
        let mut out: Vec<(&str, u32)> = Vec::new();
        for t in sorted {
            match out.last_mut() {
                Some((last, n)) if *last == t => *n += 1,
                _ => out.push((t, 1)),
            }
        }
        out
    }

    pub fn into_terms(self) -> Vec<String> {
        self.terms
    }
}

impl std::fmt::Display for AnalyzedText {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.terms.join(" "))
    }
}

/// Lowercasing, stopping and stemming analyzer.
#[derive(Debug, Clone)]
pub struct Analyzer {
    stopwords: HashSet<String>,
}

impl Default for Analyzer {
    fn default() -> Self {
        Self::english()
    }
}

impl Analyzer {
    /// Analyzer with the bundled 33-word English stopword list.
    pub fn english() -> Self {
        Self::with_stopwords(ENGLISH_STOPWORDS.lines())
    }

    pub fn with_stopwords<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let stopwords = words.into_iter().map(|w| w.as_ref().trim().to_lowercase()).filter(|w| !w.is_empty()).collect();
        Self { stopwords }
    }

    /// Loads a stopword list, one word per line.
    pub fn from_stopword_file(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(Self::with_stopwords(text.lines()))
    }

    pub fn is_stopword(&self, term: &str) -> bool {
        self.stopwords.contains(term)
    }

    pub fn stopword_count(&self) -> usize {
        self.stopwords.len()
    }

    pub fn analyze(&self, text: &str) -> AnalyzedText {
        let mut terms = Vec::new();
        for raw in tokenize(text) {
            let lowered = raw.to_lowercase();
            let token = strip_possessive(&lowered);
            let token: String = token.chars().filter(|c| !is_apostrophe(*c)).collect();
            if token.is_empty() || self.is_stopword(&token) {
                continue;
            }
            let stemmed = porter_stemmer::stem(&token);
            // stems can collide with stopwords
            if stemmed.is_empty() || self.is_stopword(&stemmed) {
                continue;
            }
            terms.push(stemmed);
        }
        AnalyzedText { terms }
    }

    /// Analyzes raw bytes, replacing invalid UTF-8 sequences first.
    pub fn analyze_bytes(&self, bytes: &[u8]) -> AnalyzedText {
        self.analyze(&String::from_utf8_lossy(bytes))
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn strip_possessive(token: &str) -> &str {
    for suffix in ["'s", "\u{2019}s"] {
        if let Some(stripped) = token.strip_suffix(suffix) {
            return stripped;
        }
    }
    token
}

/// Splits on non-alphanumeric characters. Apostrophes are kept only when
/// they sit between two alphanumeric characters ("ibm's", "don't").
fn tokenize(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &(pos, c)) in chars.iter().enumerate() {
        let keep = c.is_alphanumeric()
            || (is_apostrophe(c) && start.is_some() && chars.get(i + 1).is_some_and(|(_, n)| n.is_alphanumeric()));
        match (keep, start) {
            (true, None) => start = Some(pos),
            (false, Some(s)) => {
                tokens.push(&text[s..pos]);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(&text[s..]);
    }
    tokens
}
