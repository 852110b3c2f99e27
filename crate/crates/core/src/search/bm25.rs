use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::analyzer::analyze_greek;
use crate::corpus::{render_metadata_header, StoredDocument};

/// Characters of stored content returned with each hit.
pub const DEFAULT_EXCERPT_CHARS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

/// `ln(1 + (N - df + 0.5) / (df + 0.5))`
pub fn idf(n_docs: f64, df: f64) -> f64 {
    (1.0 + (n_docs - df + 0.5) / (df + 0.5)).ln()
}

/// One term's contribution to a document score.
pub fn term_score(params: Bm25Params, idf: f64, tf: f64, doc_len: f64, avg_doc_len: f64) -> f64 {
    let norm = if avg_doc_len > 0.0 { doc_len / avg_doc_len } else { 0.0 };
    idf * (tf * (params.k1 + 1.0)) / (tf + params.k1 * (1.0 - params.b + params.b * norm))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexedDoc {
    pub ada: String,
    pub header: String,
    pub body: String,
    /// Number of analyzed terms.
    pub length: u64,
    /// Term frequencies sorted by term.
    pub term_freqs: Vec<(String, u32)>,
}

impl IndexedDoc {
    pub fn from_parts(ada: String, header: String, body: String) -> Self {
        let content = format!("{header}\n\n{body}");
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for term in analyze_greek(&content) {
            *counts.entry(term).or_insert(0) += 1;
        }
        let length = counts.values().map(|&c| u64::from(c)).sum();
        Self { ada, header, body, length, term_freqs: counts.into_iter().collect() }
    }

    pub fn content(&self) -> String {
        format!("{}\n\n{}", self.header, self.body)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchHit {
    pub ada: String,
    pub score: f64,
    /// First characters of the stored content (header, blank line, body).
    pub excerpt: String,
    pub header: String,
    /// First characters of the body alone.
    pub body: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexStats {
    pub n_docs: u64,
    pub avg_doc_len: f64,
    pub df: HashMap<String, u64>,
}

impl IndexStats {
    pub fn df(&self, term: &str) -> u64 {
        self.df.get(term).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("the index holds no documents")]
    EmptyIndex,
    #[error("k must be at least 1")]
    InvalidK,
}

/// In-memory inverted index scored with BM25 over the "content" field
/// (metadata header + body).
#[derive(Debug, Clone)]
pub struct SearchIndex {
    params: Bm25Params,
    excerpt_chars: usize,
    docs: Vec<IndexedDoc>,
    slots: HashMap<String, usize>,
    /// term -> (slot -> tf)
    postings: HashMap<String, BTreeMap<usize, u32>>,
    total_len: u64,
}

impl Default for SearchIndex {
    fn default() -> Self {
        Self::new(Bm25Params::default())
    }
}

fn prefix_chars(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

impl SearchIndex {
    pub fn new(params: Bm25Params) -> Self {
        Self {
            params,
            excerpt_chars: DEFAULT_EXCERPT_CHARS,
            docs: Vec::new(),
            slots: HashMap::new(),
            postings: HashMap::new(),
            total_len: 0,
        }
    }

    pub fn with_excerpt_chars(mut self, n: usize) -> Self {
        self.excerpt_chars = n;
        self
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn excerpt_chars(&self) -> usize {
        self.excerpt_chars
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> &[IndexedDoc] {
        &self.docs
    }

    pub fn get(&self, ada: &str) -> Option<&IndexedDoc> {
        self.slots.get(ada).map(|&slot| &self.docs[slot])
    }

    /// Indexes `header + "\n\n" + body`. Re-indexing an ADA replaces it.
    pub fn index_document(&mut self, doc: &StoredDocument) {
        let header = render_metadata_header(&doc.record);
        self.insert(IndexedDoc::from_parts(doc.record.ada.clone(), header, doc.body_markdown.clone()));
    }

    /// Inserts an already analyzed document (upsert).
    pub fn insert(&mut self, doc: IndexedDoc) {
        let slot = match self.slots.get(&doc.ada) {
            Some(&slot) => {
                let old = std::mem::replace(&mut self.docs[slot], doc);
                self.total_len -= old.length;
                for (term, _) in &old.term_freqs {
                    if let Some(list) = self.postings.get_mut(term) {
                        list.remove(&slot);
                        if list.is_empty() {
                            self.postings.remove(term);
                        }
                    }
                }
                slot
            }
            None => {
                self.slots.insert(doc.ada.clone(), self.docs.len());
                self.docs.push(doc);
                self.docs.len() - 1
            }
        };
        let doc = &self.docs[slot];
        self.total_len += doc.length;
        for (term, tf) in &doc.term_freqs {
            self.postings.entry(term.clone()).or_default().insert(slot, *tf);
        }
    }

    pub fn avg_doc_len(&self) -> f64 {
        if self.docs.is_empty() {
            0.0
        } else {
            self.total_len as f64 / self.docs.len() as f64
        }
    }

    pub fn df(&self, term: &str) -> u64 {
        self.postings.get(term).map_or(0, |p| p.len() as u64)
    }

    pub fn stats(&self) -> IndexStats {
        IndexStats {
            n_docs: self.docs.len() as u64,
            avg_doc_len: self.avg_doc_len(),
            df: self.postings.iter().map(|(t, p)| (t.clone(), p.len() as u64)).collect(),
        }
    }

    /// Top-`k` documents for `query`. Each distinct analyzed query term
    /// contributes once; ties are broken by ascending ADA.
    pub fn search(&self, query: &str, k: usize) -> Result<Vec<SearchHit>, SearchError> {
        if k == 0 {
            return Err(SearchError::InvalidK);
        }
        if self.docs.is_empty() {
            return Err(SearchError::EmptyIndex);
        }
        let mut terms = analyze_greek(query);
        terms.sort();
        terms.dedup();

        let n = self.docs.len() as f64;
        let avgdl = self.avg_doc_len();
        let mut scores: HashMap<usize, f64> = HashMap::new();
        for term in &terms {
            let Some(list) = self.postings.get(term) else { continue };
            let term_idf = idf(n, list.len() as f64);
            for (&slot, &tf) in list {
                let s = term_score(self.params, term_idf, f64::from(tf), self.docs[slot].length as f64, avgdl);
                *scores.entry(slot).or_insert(0.0) += s;
            }
        }
        let mut ranked: Vec<(usize, f64)> = scores.into_iter().collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| self.docs[a.0].ada.cmp(&self.docs[b.0].ada))
        });
        ranked.truncate(k);
        Ok(ranked
            .into_iter()
            .map(|(slot, score)| {
                let doc = &self.docs[slot];
                SearchHit {
                    ada: doc.ada.clone(),
                    score,
                    excerpt: prefix_chars(&doc.content(), self.excerpt_chars).to_string(),
                    header: doc.header.clone(),
                    body: prefix_chars(&doc.body, self.excerpt_chars).to_string(),
                }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DecisionRecord, DocumentSource};

    fn doc(ada: &str, subject: &str, body: &str) -> StoredDocument {
        let mut record = DecisionRecord::minimal(ada);
        record.subject = subject.into();
        StoredDocument {
            record,
            body_markdown: body.into(),
            source: DocumentSource::PreextractedText,
            extraction_tool: "test".into(),
            stored_at: 0,
        }
    }

    #[test]
    fn empty_index_and_bad_k() {
        let idx = SearchIndex::default();
        assert_eq!(idx.search("x", 8), Err(SearchError::EmptyIndex));
        let mut idx = SearchIndex::default();
        idx.index_document(&doc("ΑΑΑΑ4690Ω8-ΑΑΑ", "", ""));
        assert_eq!(idx.search("x", 0), Err(SearchError::InvalidK));
    }

    #[test]
    fn subject_term_is_found() {
        let mut idx = SearchIndex::default();
        idx.index_document(&doc("ΑΑΑΑ4690Ω8-ΑΑΑ", "Ανάθεση καθαριότητας", "κείμενο"));
        idx.index_document(&doc("ΒΒΒΒ4690Ω8-ΒΒΒ", "Πρόσληψη προσωπικού", "κείμενο"));
        let hits = idx.search("καθαριότητα", 8).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].ada, "ΑΑΑΑ4690Ω8-ΑΑΑ");
        assert!(hits[0].excerpt.starts_with("ADA: ΑΑΑΑ4690Ω8-ΑΑΑ"));
    }

    #[test]
    fn upsert_replaces_old_terms() {
        let mut idx = SearchIndex::default();
        idx.index_document(&doc("ΑΑΑΑ4690Ω8-ΑΑΑ", "", "μοναδικόπρωτο"));
        assert_eq!(idx.search("μοναδικόπρωτο", 8).unwrap().len(), 1);
        idx.index_document(&doc("ΑΑΑΑ4690Ω8-ΑΑΑ", "", "μοναδικόδεύτερο"));
        assert!(idx.search("μοναδικόπρωτο", 8).unwrap().is_empty());
        assert_eq!(idx.search("μοναδικόδεύτερο", 8).unwrap().len(), 1);
        assert_eq!(idx.len(), 1);
    }

    #[test]
    fn stopword_query_is_empty() {
        let mut idx = SearchIndex::default();
        idx.index_document(&doc("ΑΑΑΑ4690Ω8-ΑΑΑ", "", "και το"));
        assert!(idx.search("και το του", 8).unwrap().is_empty());
    }

    #[test]
    fn repeated_term_ranks_first() {
        let mut idx = SearchIndex::default();
        idx.index_document(&doc("ΑΑΑΑ4690Ω8-ΑΑΑ", "", "σύμβαση έργου"));
        idx.index_document(&doc("ΒΒΒΒ4690Ω8-ΒΒΒ", "", "σύμβαση σύμβαση έργου"));
        idx.index_document(&doc("ΓΓΓΓ4690Ω8-ΓΓΓ", "", "άσχετο κείμενο"));
        let hits = idx.search("σύμβαση", 8).unwrap();
        assert_eq!(hits[0].ada, "ΒΒΒΒ4690Ω8-ΒΒΒ");
        assert_eq!(hits[1].ada, "ΑΑΑΑ4690Ω8-ΑΑΑ");
        assert!(hits[0].score > hits[1].score);
        // saturation: doubling tf gains less than a factor of two
        assert!(hits[0].score < 2.0 * hits[1].score);
    }

    #[test]
    fn single_doc_score_matches_hand_computation() {
        // Body-only documents via insert() so lengths are exact.
        let mut idx = SearchIndex::default();
        idx.insert(IndexedDoc {
            ada: "A".into(),
            header: String::new(),
            body: String::new(),
            length: 3,
            term_freqs: vec![("γατ".into(), 2), ("σκυλ".into(), 1)],
        });
        idx.insert(IndexedDoc {
            ada: "B".into(),
            header: String::new(),
            body: String::new(),
            length: 1,
            term_freqs: vec![("σκυλ".into(), 1)],
        });
        // "γάτα" analyzes to "γατ". N=2, df=1: idf = ln(1 + 1.5/1.5) = ln 2; avgdl = 2, |A| = 3
        // tf part = 2*2.2 / (2 + 1.2*(0.25 + 0.75*1.5)) = 4.4 / 3.65
        let expected = 2f64.ln() * 4.4 / 3.65;
        let hits = idx.search("γάτα", 8).unwrap();
        assert_eq!(hits.len(), 1);
        assert!((hits[0].score - expected).abs() < 1e-9, "{} vs {expected}", hits[0].score);
    }

    #[test]
    fn stats_track_documents() {
        let mut idx = SearchIndex::default();
        for i in 0..1000 {
            idx.index_document(&doc(&format!("Ψ{i:07}ΟΕ-ΑΒΓ"), "θέμα", &format!("κείμενο {i}")));
        }
        let stats = idx.stats();
        assert_eq!(stats.n_docs, 1000);
        assert!(stats.df.values().all(|&df| df <= 1000));
        assert_eq!(stats.df(&super::super::analyzer::stem("θεμα")), 1000);
    }

    #[test]
    fn excerpt_is_truncated_by_chars() {
        let mut idx = SearchIndex::default().with_excerpt_chars(10);
        idx.index_document(&doc("ΑΑΑΑ4690Ω8-ΑΑΑ", "", "ελληνικό κείμενο μεγάλο"));
        let hits = idx.search("κείμενο", 1).unwrap();
        assert_eq!(hits[0].excerpt.chars().count(), 10);
        assert_eq!(hits[0].body, "ελληνικό κ");
    }
}
