use std::collections::{BTreeMap, HashMap};

use crate::embedding::Encoder;
use crate::search::{analyze_greek, IndexStats, SearchIndex};

/// 100 · max(0, cosine) of the two embeddings; 0 when either text cannot be
/// embedded (e.g. it is empty).
pub fn semantic_score(a: &str, b: &str, encoder: &dyn Encoder) -> f64 {
    let (Ok(u), Ok(v)) = (encoder.encode(a), encoder.encode(b)) else { return 0.0 };
    let denom = u.norm() * v.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (100.0 * u.dot(&v) / denom).clamp(0.0, 100.0)
}

/// Document frequencies for TF-IDF weighting.
pub trait DocFreq {
    fn n_docs(&self) -> u64;
    fn df(&self, term: &str) -> u64;
}

impl DocFreq for IndexStats {
    fn n_docs(&self) -> u64 {
        self.n_docs
    }
    fn df(&self, term: &str) -> u64 {
        IndexStats::df(self, term)
    }
}

impl DocFreq for SearchIndex {
    fn n_docs(&self) -> u64 {
        self.len() as u64
    }
    fn df(&self, term: &str) -> u64 {
        SearchIndex::df(self, term)
    }
}

/// Frequencies over just the two compared texts.
#[derive(Debug, Clone, Default)]
pub struct PairDf {
    df: HashMap<String, u64>,
}

impl PairDf {
    pub fn new(a: &str, b: &str) -> Self {
        let mut df: HashMap<String, u64> = HashMap::new();
        for text in [a, b] {
            let mut terms = analyze_greek(text);
            terms.sort();
            terms.dedup();
            for t in terms {
                *df.entry(t).or_default() += 1;
            }
        }
        Self { df }
    }
}

impl DocFreq for PairDf {
    fn n_docs(&self) -> u64 {
        2
    }
    fn df(&self, term: &str) -> u64 {
        self.df.get(term).copied().unwrap_or(0)
    }
}

fn term_counts(text: &str) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    for t in analyze_greek(text) {
        *m.entry(t).or_insert(0.0) += 1.0;
    }
    m
}

/// 100 · cosine of raw-count TF × ln(N / (1 + df)) vectors over analyzed
/// terms. When a vector has no weight at all (every idf is 0), identical
/// non-empty term counts score 100 and anything else 0.
pub fn tfidf_similarity(a: &str, b: &str, df: &dyn DocFreq) -> f64 {
    let (ta, tb) = (term_counts(a), term_counts(b));
    let n = df.n_docs() as f64;
    let idf = |t: &str| (n / (1.0 + df.df(t) as f64)).ln();
    let weigh = |m: &BTreeMap<String, f64>| -> BTreeMap<String, f64> { m.iter().map(|(t, tf)| (t.clone(), tf * idf(t))).collect() };
    let (wa, wb) = (weigh(&ta), weigh(&tb));
    let norm = |w: &BTreeMap<String, f64>| w.values().map(|x| x * x).sum::<f64>().sqrt();
    let (na, nb) = (norm(&wa), norm(&wb));
    if na == 0.0 || nb == 0.0 || !n.is_finite() {
        return if !ta.is_empty() && ta == tb { 100.0 } else { 0.0 };
    }
    // Shared terms in sorted order, so swapping the arguments gives the same sum.
    let dot: f64 = wa.iter().filter_map(|(t, x)| wb.get(t).map(|y| x * y)).sum();
    (100.0 * dot / (na * nb)).clamp(0.0, 100.0)
}
