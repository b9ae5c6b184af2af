//! Binary index persistence.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "SIMTIDX\0"
//! version    u8
//! vocab      u32 count, then per term: u32 byte length + UTF-8 bytes (sorted)
//! docs       u32 count, then per doc: u32 length + external id bytes,
//!            u32 entry count, then (u32 term id, u32 tf) pairs sorted by term id
//! ```
//!
//! Postings and collection statistics are rebuilt from the document records
//! on load.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{CorpusIndex, DocId, DocumentRecord, IndexError, TermId};

pub const MAGIC: &[u8; 8] = b"SIMTIDX\0";
pub const FORMAT_VERSION: u8 = 1;

pub fn save_index(index: &CorpusIndex, path: &Path) -> Result<(), IndexError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_index(index, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_index(path: &Path) -> Result<CorpusIndex, IndexError> {
    let mut r = BufReader::new(File::open(path)?);
    read_index(&mut r)
}

pub fn write_index<W: Write>(index: &CorpusIndex, w: &mut W) -> Result<(), IndexError> {
    w.write_all(MAGIC)?;
    w.write_all(&[FORMAT_VERSION])?;
    write_u32(w, index.vocab.len())?;
    for term in &index.vocab {
        write_str(w, term)?;
    }
    write_u32(w, index.docs.len())?;
    for doc in &index.docs {
        write_str(w, &doc.external_id)?;
        write_u32(w, doc.term_freqs.len())?;
        for &(term, tf) in &doc.term_freqs {
            w.write_all(&term.to_le_bytes())?;
            w.write_all(&tf.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_index<R: Read>(r: &mut R) -> Result<CorpusIndex, IndexError> {
    let mut magic = [0u8; 8];
    read_exact(r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(IndexError::Format("bad magic header".into()));
    }
    let mut version = [0u8; 1];
    read_exact(r, &mut version, "version")?;
    if version[0] != FORMAT_VERSION {
        return Err(IndexError::Format(format!(
            "unsupported format version {} (expected {FORMAT_VERSION})",
            version[0]
        )));
    }

    let vocab_len = read_u32(r, "vocabulary size")? as usize;
    let mut vocab = Vec::with_capacity(vocab_len.min(1 << 20));
    for _ in 0..vocab_len {
        let term = read_string(r, "term")?;
        if term.is_empty() {
            return Err(IndexError::Format("empty term in vocabulary".into()));
        }
        if vocab.last().is_some_and(|prev: &String| *prev >= term) {
            return Err(IndexError::Format("vocabulary not strictly sorted".into()));
        }
        vocab.push(term);
    }

    let doc_count = read_u32(r, "document count")? as usize;
    let mut docs = Vec::with_capacity(doc_count.min(1 << 20));
    for i in 0..doc_count {
        let external_id = read_string(r, "document id")?;
        let entries = read_u32(r, "document entry count")? as usize;
        let mut term_freqs: Vec<(TermId, u32)> = Vec::with_capacity(entries.min(1 << 16));
        let mut length = 0u64;
        for _ in 0..entries {
            let term = read_u32(r, "term id")?;
            let tf = read_u32(r, "term frequency")?;
            if term as usize >= vocab.len() {
                return Err(IndexError::Format(format!("term id {term} out of range")));
            }
            if tf == 0 {
                return Err(IndexError::Format("zero term frequency".into()));
            }
            if term_freqs.last().is_some_and(|&(prev, _)| prev >= term) {
                return Err(IndexError::Format("document terms not sorted".into()));
            }
            term_freqs.push((term, tf));
            length += u64::from(tf);
        }
        docs.push(DocumentRecord { external_id, internal_id: i as DocId, term_freqs, length });
    }

    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(IndexError::Format("trailing bytes after index".into()));
    }
    CorpusIndex::from_parts(vocab, docs)
}

fn write_u32<W: Write>(w: &mut W, v: usize) -> Result<(), IndexError> {
    let v = u32::try_from(v).map_err(|_| IndexError::Format(format!("{v} exceeds u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_str<W: Write>(w: &mut W, s: &str) -> Result<(), IndexError> {
    write_u32(w, s.len())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<(), IndexError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => IndexError::Format(format!("truncated while reading {what}")),
        _ => IndexError::Io(e),
    })
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32, IndexError> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_string<R: Read>(r: &mut R, what: &str) -> Result<String, IndexError> {
    let len = read_u32(r, what)? as usize;
    let mut buf = Vec::new();
    r.take(len as u64).read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(IndexError::Format(format!("truncated while reading {what}")));
    }
    String::from_utf8(buf).map_err(|_| IndexError::Format(format!("{what} is not valid UTF-8")))
}
