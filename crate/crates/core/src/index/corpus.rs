//! Corpus readers: JSONL (`{"id": ..., "text": ...}` per line) and TREC SGML.

use std::io::BufRead;
use std::str::FromStr;

use serde::Deserialize;

use super::IndexError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Trec,
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(Self::Jsonl),
            "trec" => Ok(Self::Trec),
            other => Err(format!("unknown corpus format `{other}` (expected jsonl or trec)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
}

#[derive(Deserialize)]
struct JsonDoc {
    id: String,
    text: String,
}

pub fn read_corpus<R: BufRead>(reader: R, format: CorpusFormat) -> Result<Vec<RawDocument>, IndexError> {
    match format {
        CorpusFormat::Jsonl => read_jsonl(reader),
        CorpusFormat::Trec => read_trec(reader),
    }
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<RawDocument>, IndexError> {
    let mut docs = Vec::new();
    for (n, line) in reader.split(b'\n').enumerate() {
        let line = line?;
        let line = String::from_utf8_lossy(&line);
        if line.trim().is_empty() {
            continue;
        }
        let doc: JsonDoc = serde_json::from_str(&line)
            .map_err(|e| IndexError::Corpus { location: format!("line {}", n + 1), message: e.to_string() })?;
        docs.push(RawDocument { id: doc.id, text: doc.text });
    }
    Ok(docs)
}

/// Reads `<DOC>` blocks. The `<DOCNO>` element names the document; every
/// other tag is stripped and the remaining text becomes the body.
pub fn read_trec<R: BufRead>(mut reader: R) -> Result<Vec<RawDocument>, IndexError> {
    let mut raw = Vec::new();
    reader.read_to_end(&mut raw)?;
    let text = String::from_utf8_lossy(&raw);
    let mut docs = Vec::new();
    let mut rest: &str = &text;
    let mut block = 0usize;
    while let Some(start) = rest.find("<DOC>") {
        block += 1;
        let after = &rest[start + "<DOC>".len()..];
        let end = after.find("</DOC>").ok_or_else(|| IndexError::Corpus {
            location: format!("DOC block {block}"),
            message: "missing </DOC>".into(),
        })?;
        let body = &after[..end];
        docs.push(parse_trec_doc(body, block)?);
        rest = &after[end + "</DOC>".len()..];
    }
    Ok(docs)
}

fn parse_trec_doc(body: &str, block: usize) -> Result<RawDocument, IndexError> {
    let err = |message: &str| IndexError::Corpus { location: format!("DOC block {block}"), message: message.into() };
    let open = body.find("<DOCNO>").ok_or_else(|| err("missing <DOCNO>"))?;
    let id_start = open + "<DOCNO>".len();
    let close = body[id_start..].find("</DOCNO>").ok_or_else(|| err("missing </DOCNO>"))? + id_start;
    let id = body[id_start..close].trim().to_owned();
    if id.is_empty() {
        return Err(err("empty <DOCNO>"));
    }
    let remainder = format!("{} {}", &body[..open], &body[close + "</DOCNO>".len()..]);
    Ok(RawDocument { id, text: strip_tags(&remainder) })
}

fn strip_tags(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_tag = false;
    for c in s.chars() {
        match c {
            '<' => {
                in_tag = true;
                out.push(' ');
            }
            '>' if in_tag => in_tag = false,
            _ if !in_tag => out.push(c),
            _ => {}
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}
