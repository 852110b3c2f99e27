//! Versioned binary snapshot of a [`SearchIndex`].
//!
//! Layout (all integers little-endian, strings are a `u32` byte length
//! followed by UTF-8 bytes):
//!
//! ```text
//! magic    "DVBM"
//! version  u32 (= 1)
//! k1, b    f64, f64
//! excerpt  u32  characters per hit excerpt
//! n_docs   u32
//! per document:
//!   ada, header, body   string x3
//!   n_terms             u32
//!   per term: term string, tf u32   (sorted by term)
//! ```
//!
//! Term frequencies are stored, so loading does not re-run the analyzer.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::bm25::{Bm25Params, IndexedDoc, SearchIndex};

const MAGIC: &[u8; 4] = b"DVBM";
const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not an index snapshot")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u32),
    #[error("snapshot string is not UTF-8")]
    BadString,
}

fn put_u32(w: &mut impl Write, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_str(w: &mut impl Write, s: &str) -> io::Result<()> {
    put_u32(w, u32::try_from(s.len()).expect("string shorter than 4 GiB"))?;
    w.write_all(s.as_bytes())
}

fn get_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_f64(r: &mut impl Read) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn get_str(r: &mut impl Read) -> Result<String, SnapshotError> {
    let len = get_u32(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| SnapshotError::BadString)
}

pub fn write_snapshot(index: &SearchIndex, w: &mut impl Write) -> io::Result<()> {
    w.write_all(MAGIC)?;
    put_u32(w, VERSION)?;
    let params = index.params();
    w.write_all(&params.k1.to_le_bytes())?;
    w.write_all(&params.b.to_le_bytes())?;
    put_u32(w, index.excerpt_chars() as u32)?;
    let mut docs: Vec<&IndexedDoc> = index.docs().iter().collect();
    docs.sort_by(|a, b| a.ada.cmp(&b.ada));
    put_u32(w, docs.len() as u32)?;
    for doc in docs {
        put_str(w, &doc.ada)?;
        put_str(w, &doc.header)?;
        put_str(w, &doc.body)?;
        put_u32(w, doc.term_freqs.len() as u32)?;
        for (term, tf) in &doc.term_freqs {
            put_str(w, term)?;
            put_u32(w, *tf)?;
        }
    }
    Ok(())
}

pub fn read_snapshot(r: &mut impl Read) -> Result<SearchIndex, SnapshotError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = get_u32(r)?;
    if version != VERSION {
        return Err(SnapshotError::UnsupportedVersion(version));
    }
    let params = Bm25Params { k1: get_f64(r)?, b: get_f64(r)? };
    let excerpt = get_u32(r)? as usize;
    let mut index = SearchIndex::new(params).with_excerpt_chars(excerpt);
    let n_docs = get_u32(r)?;
    for _ in 0..n_docs {
        let ada = get_str(r)?;
        let header = get_str(r)?;
        let body = get_str(r)?;
        let n_terms = get_u32(r)?;
        let mut term_freqs = Vec::with_capacity(n_terms as usize);
        for _ in 0..n_terms {
            let term = get_str(r)?;
            term_freqs.push((term, get_u32(r)?));
        }
        let length = term_freqs.iter().map(|(_, tf)| u64::from(*tf)).sum();
        index.insert(IndexedDoc { ada, header, body, length, term_freqs });
    }
    Ok(index)
}

pub fn save_snapshot(index: &SearchIndex, path: &Path) -> Result<(), SnapshotError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_snapshot(index, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<SearchIndex, SnapshotError> {
    read_snapshot(&mut BufReader::new(File::open(path)?))
}
