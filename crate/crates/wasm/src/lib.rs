//! Browser bindings for the static demo page in `www/`.
//!
//! Exports return JSON text; the page parses it. The plain Rust functions
//! behind them are public so they can be tested natively.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use diavgeia_core::boilerplate::{baseline_segment, tokenize_words, SpanLabel, DEFAULT_MIN_RUN, DEFAULT_M_FRAC};
use diavgeia_core::corpus::{find_adas, validate_ada};
use diavgeia_core::qaeval::{extract_amounts, Amount};
use diavgeia_core::search::{IndexedDoc, SearchIndex};

const SAMPLES: &str = include_str!("../samples.json");

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct Sample {
    pub ada: String,
    pub organization: String,
    pub subject: String,
    pub body: String,
}

pub fn samples() -> Vec<Sample> {
    serde_json::from_str(SAMPLES).expect("bundled samples parse")
}

#[derive(Debug, Serialize, PartialEq)]
pub struct ScanResult {
    pub adas: Vec<String>,
    pub amounts: Vec<String>,
    pub amount_cents: Vec<i64>,
    /// Sum of all amounts, Greek formatted.
    pub total: String,
}

/// Decision identifiers and euro amounts mentioned in `text`.
pub fn scan_text(text: &str) -> ScanResult {
    let amounts = extract_amounts(text);
    let total = amounts.iter().fold(Amount::from_cents(0), |acc, a| acc + *a);
    ScanResult {
        adas: find_adas(text),
        amounts: amounts.iter().map(ToString::to_string).collect(),
        amount_cents: amounts.iter().map(|a| a.cents()).collect(),
        total: total.to_string(),
    }
}

#[derive(Debug, Serialize)]
pub struct Word {
    pub text: String,
    pub boilerplate: bool,
}

#[derive(Debug, Serialize)]
pub struct Highlight {
    pub neighbors: Vec<String>,
    pub words: Vec<Word>,
    pub boilerplate_share: f64,
}

#[derive(Debug, Serialize)]
pub struct Hit {
    pub ada: String,
    pub score: f64,
    pub subject: String,
    pub organization: String,
    pub excerpt: String,
}

/// A small in-memory BM25 index, seeded with the bundled sample decisions.
#[wasm_bindgen]
pub struct Library {
    index: SearchIndex,
    meta: HashMap<String, Sample>,
}

impl Default for Library {
    fn default() -> Self {
        let mut lib = Library { index: SearchIndex::default(), meta: HashMap::new() };
        for s in samples() {
            lib.insert(s);
        }
        lib
    }
}

impl Library {
    fn insert(&mut self, s: Sample) {
        let header = format!("Θέμα: {}\nΦορέας: {}", s.subject, s.organization);
        self.index.insert(IndexedDoc::from_parts(s.ada.clone(), header, s.body.clone()));
        self.meta.insert(s.ada.clone(), s);
    }

    pub fn add_document(&mut self, ada: &str, subject: &str, organization: &str, body: &str) -> Result<(), String> {
        let ada = ada.trim();
        if !validate_ada(ada) {
            return Err(format!("{ada:?} is not a valid ADA"));
        }
        if body.trim().is_empty() {
            return Err("document text is empty".into());
        }
        self.insert(Sample { ada: ada.into(), organization: organization.into(), subject: subject.into(), body: body.into() });
        Ok(())
    }

    pub fn search_hits(&self, query: &str, k: usize) -> Result<Vec<Hit>, String> {
        let hits = self.index.search(query, k.max(1)).map_err(|e| e.to_string())?;
        Ok(hits
            .into_iter()
            .map(|h| {
                let m = &self.meta[&h.ada];
                Hit { subject: m.subject.clone(), organization: m.organization.clone(), ada: h.ada, score: h.score, excerpt: h.body }
            })
            .collect())
    }

    /// Marks the words of `text` that recur across its `n` most similar
    /// library documents. Documents with the identical text are skipped.
    pub fn highlight_text(&self, text: &str, n: usize) -> Result<Highlight, String> {
        if tokenize_words(text).is_empty() {
            return Err("document text is empty".into());
        }
        let hits = self.index.search(text, n.max(1) + 1).map_err(|e| e.to_string())?;
        let neighbors: Vec<&Sample> =
            hits.iter().map(|h| &self.meta[&h.ada]).filter(|m| m.body.trim() != text.trim()).take(n.max(1)).collect();
        let bodies: Vec<&str> = neighbors.iter().map(|m| m.body.as_str()).collect();
        let seg = baseline_segment("", text, &bodies, DEFAULT_M_FRAC, DEFAULT_MIN_RUN).map_err(|e| e.to_string())?;
        let labels = seg.labels();
        let words: Vec<Word> = tokenize_words(text)
            .into_iter()
            .zip(&labels)
            .map(|(w, l)| Word { text: w.to_string(), boilerplate: *l == SpanLabel::Boilerplate })
            .collect();
        let share = seg.count(SpanLabel::Boilerplate) as f64 / words.len() as f64;
        Ok(Highlight { neighbors: neighbors.iter().map(|m| m.ada.clone()).collect(), words, boilerplate_share: share })
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("demo values serialize")
}

#[wasm_bindgen]
impl Library {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Library {
        Library::default()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.len() == 0
    }

    /// `[{ada, organization, subject, body}]`
    pub fn documents(&self) -> String {
        let mut docs: Vec<&Sample> = self.meta.values().collect();
        docs.sort_by(|a, b| a.ada.cmp(&b.ada));
        to_json(&docs)
    }

    pub fn add(&mut self, ada: &str, subject: &str, organization: &str, body: &str) -> Result<(), JsError> {
        self.add_document(ada, subject, organization, body).map_err(|e| JsError::new(&e))
    }

    /// `[{ada, score, subject, organization, excerpt}]`
    pub fn search(&self, query: &str, k: usize) -> Result<String, JsError> {
        self.search_hits(query, k).map(|h| to_json(&h)).map_err(|e| JsError::new(&e))
    }

    /// `{neighbors, words: [{text, boilerplate}], boilerplate_share}`
    pub fn highlight(&self, text: &str, neighbors: usize) -> Result<String, JsError> {
        self.highlight_text(text, neighbors).map(|h| to_json(&h)).map_err(|e| JsError::new(&e))
    }
}

/// `{adas, amounts, amount_cents, total}`
#[wasm_bindgen]
pub fn scan(text: &str) -> String {
    to_json(&scan_text(text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_valid() {
        let s = samples();
        assert_eq!(s.len(), 12);
        assert!(s.iter().all(|d| validate_ada(&d.ada)));
        assert_eq!(Library::default().len(), 12);
    }

    #[test]
    fn scan_finds_identifiers_and_amounts() {
        let r = scan_text("Με την ΑΔΑ ΨΘ4ΚΟΡ1Φ-7ΑΒ εγκρίθηκαν 73.225,56 € και 381,22 €. Όχι το ΑΒΓ-12.");
        assert_eq!(r.adas, ["ΨΘ4ΚΟΡ1Φ-7ΑΒ"]);
        assert_eq!(r.amounts, ["73.225,56", "381,22"]);
        assert_eq!(r.amount_cents, [7_322_556, 38_122]);
        assert_eq!(r.total, "73.606,78");
        assert_eq!(scan_text("").total, "0,00");
    }

    #[test]
    fn search_ranks_the_matching_decision_first() {
        let lib = Library::default();
        let hits = lib.search_hits("ανελκυστήρων", 3).unwrap();
        assert_eq!(hits[0].ada, "6ΣΞΠΩΗΓ2-Ξ2Κ");
        assert!(hits[0].subject.contains("ανελκυστήρων"));
        assert!(hits.windows(2).all(|w| w[0].score >= w[1].score));
        assert!(lib.search_hits("ανελκυστήρων", 0).unwrap().len() <= 1);
    }

    #[test]
    fn added_documents_are_searchable() {
        let mut lib = Library::default();
        assert!(lib.add_document("όχι-ada", "x", "y", "κείμενο").is_err());
        assert!(lib.add_document("ΑΒΓΔ1234-ΕΖΗ", "x", "y", "  ").is_err());
        lib.add_document("ΑΒΓΔ1234-ΕΖΗ", "Δενδροφύτευση", "ΔΗΜΟΣ ΘΗΡΑΣ", "Δενδροφύτευση πλατειών και πεζοδρομίων.").unwrap();
        assert_eq!(lib.len(), 13);
        assert_eq!(lib.search_hits("δενδροφύτευση", 1).unwrap()[0].ada, "ΑΒΓΔ1234-ΕΖΗ");
    }

    #[test]
    fn template_words_are_highlighted() {
        let lib = Library::default();
        let sample = &samples()[0];
        let h = lib.highlight_text(&sample.body, 3).unwrap();
        assert_eq!(h.neighbors.len(), 3);
        assert!(!h.neighbors.contains(&sample.ada));
        let bp: Vec<&str> = h.words.iter().filter(|w| w.boilerplate).map(|w| w.text.as_str()).collect();
        let ct: Vec<&str> = h.words.iter().filter(|w| !w.boilerplate).map(|w| w.text.as_str()).collect();
        assert!(bp.contains(&"ΑΠΟΦΑΣΙΖΟΥΜΕ"));
        assert!(ct.contains(&"ΧΑΡΤΟΠΩΛΕΙΟ"));
        assert!(h.boilerplate_share > 0.3 && h.boilerplate_share < 1.0, "{}", h.boilerplate_share);
        assert!(lib.highlight_text(" ", 3).is_err());
    }
}
