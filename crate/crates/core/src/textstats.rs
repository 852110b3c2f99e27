//! Corpus statistics: token, character and sentence counts per document and
//! their aggregate over a corpus store.
//!
//! The per-document pass runs on a dedicated thread pool; aggregation sorts
//! the per-document values by ADA before reducing, so the result does not
//! depend on worker count or visit order.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusLayout, StoredDocument};

/// Maps text to a sequence of token ids.
pub trait Tokenizer: Send + Sync {
    fn encode(&self, text: &str) -> Vec<u32>;
}

/// Whitespace + punctuation splitter.
///
/// A token is either a maximal run of alphanumeric characters or a single
/// character that is neither alphanumeric nor whitespace. Ids are a stable
/// 32-bit FNV-1a hash of the token text.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceTokenizer;

fn fnv1a32(s: &str) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for b in s.bytes() {
        h ^= u32::from(b);
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

impl ReferenceTokenizer {
    pub fn split(text: &str) -> Vec<&str> {
        let mut out = Vec::new();
        let mut word_start: Option<usize> = None;
        for (i, c) in text.char_indices() {
            if c.is_alphanumeric() {
                word_start.get_or_insert(i);
                continue;
            }
            if let Some(start) = word_start.take() {
                out.push(&text[start..i]);
            }
            if !c.is_whitespace() {
                out.push(&text[i..i + c.len_utf8()]);
            }
        }
        if let Some(start) = word_start {
            out.push(&text[start..]);
        }
        out
    }
}

impl Tokenizer for ReferenceTokenizer {
    fn encode(&self, text: &str) -> Vec<u32> {
        Self::split(text).into_iter().map(fnv1a32).collect()
    }
}

pub fn count_tokens(text: &str, tokenizer: &dyn Tokenizer) -> u64 {
    tokenizer.encode(text).len() as u64
}

fn is_sentence_terminator(c: char) -> bool {
    // U+037E is the Greek question mark, canonically equivalent to ';'.
    matches!(c, '.' | '!' | '?' | ';' | '\u{037E}')
}

/// Number of segments delimited by `. ! ? ;` (or end of text) that contain
/// at least one non-whitespace character.
pub fn estimate_sentences(text: &str) -> u64 {
    text.split(is_sentence_terminator).filter(|seg| !seg.trim().is_empty()).count() as u64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocStats {
    pub ada: String,
    pub organization: String,
    pub tokens: u64,
    pub characters: u64,
    pub sentences: u64,
}

impl DocStats {
    /// Counts over the document body.
    pub fn of(doc: &StoredDocument, tokenizer: &dyn Tokenizer) -> Self {
        let body = &doc.body_markdown;
        Self {
            ada: doc.record.ada.clone(),
            organization: doc.record.organization_id.clone(),
            tokens: count_tokens(body, tokenizer),
            characters: body.chars().count() as u64,
            sentences: estimate_sentences(body),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_docs: u64,
    /// Metadata files found, including unreadable ones.
    pub raw_files: u64,
    pub distinct_adas: u64,
    pub read_errors: u64,
    pub total_tokens: u64,
    pub mean_tokens: f64,
    /// Lower median for even-sized corpora.
    pub median_tokens: u64,
    /// Population standard deviation.
    pub std_tokens: f64,
    pub max_tokens: u64,
    pub total_chars: u64,
    pub mean_chars: f64,
    pub total_sentences: u64,
    pub mean_sentences: f64,
    pub org_histogram: BTreeMap<String, u64>,
}

impl CorpusStats {
    /// Aggregates per-document stats. Empty input yields zeros everywhere.
    pub fn aggregate(mut docs: Vec<DocStats>) -> Self {
        docs.sort_by(|a, b| a.ada.cmp(&b.ada).then(a.tokens.cmp(&b.tokens)));
        let n = docs.len() as u64;
        let total_tokens: u64 = docs.iter().map(|d| d.tokens).sum();
        let total_chars: u64 = docs.iter().map(|d| d.characters).sum();
        let total_sentences: u64 = docs.iter().map(|d| d.sentences).sum();
        let mean = |total: u64| if n == 0 { 0.0 } else { total as f64 / n as f64 };
        let mean_tokens = mean(total_tokens);

        let mut tokens: Vec<u64> = docs.iter().map(|d| d.tokens).collect();
        tokens.sort_unstable();
        let median_tokens = if tokens.is_empty() { 0 } else { tokens[(tokens.len() - 1) / 2] };
        let std_tokens = if n == 0 {
            0.0
        } else {
            let ss: f64 = tokens.iter().map(|&t| (t as f64 - mean_tokens).powi(2)).sum();
            (ss / n as f64).sqrt()
        };

        let mut org_histogram = BTreeMap::new();
        for d in &docs {
            *org_histogram.entry(d.organization.clone()).or_insert(0) += 1;
        }
        let distinct_adas = docs.iter().map(|d| d.ada.as_str()).collect::<BTreeSet<_>>().len() as u64;

        Self {
            n_docs: n,
            raw_files: n,
            distinct_adas,
            read_errors: 0,
            total_tokens,
            mean_tokens,
            median_tokens,
            std_tokens,
            max_tokens: tokens.last().copied().unwrap_or(0),
            total_chars,
            mean_chars: mean(total_chars),
            total_sentences,
            mean_sentences: mean(total_sentences),
            org_histogram,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("worker count must be at least 1")]
    InvalidWorkers,
    #[error("failed to build thread pool: {0}")]
    Pool(String),
}

/// Statistics over every document in a corpus store, computed on `workers`
/// threads. Unreadable files are counted in `read_errors`.
pub fn compute_corpus_stats(
    layout: &CorpusLayout,
    workers: usize,
    tokenizer: &dyn Tokenizer,
) -> Result<CorpusStats, StatsError> {
    if workers == 0 {
        return Err(StatsError::InvalidWorkers);
    }
    let files = layout.metadata_files();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| StatsError::Pool(e.to_string()))?;
    let results: Vec<Option<DocStats>> = pool.install(|| {
        files
            .par_iter()
            .with_min_len(64)
            .map(|path| match layout.load_metadata_file(path) {
                Ok(doc) => Some(DocStats::of(&doc, tokenizer)),
                Err(e) => {
                    log::warn!("skipping {}: {e}", path.display());
                    None
                }
            })
            .collect()
    });
    let read_errors = results.iter().filter(|r| r.is_none()).count() as u64;
    let mut stats = CorpusStats::aggregate(results.into_iter().flatten().collect());
    stats.raw_files = files.len() as u64;
    stats.read_errors = read_errors;
    Ok(stats)
}

/// The `n` organizations with most documents; ties by organization id.
pub fn top_organizations(stats: &CorpusStats, n: usize) -> Vec<(String, u64)> {
    let mut orgs: Vec<(String, u64)> = stats.org_histogram.iter().map(|(k, v)| (k.clone(), *v)).collect();
    orgs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    orgs.truncate(n);
    orgs
}

/// Two-column rendering in the order of the usual corpus summary table.
pub fn render_table(stats: &CorpusStats) -> String {
    let rows: Vec<(&str, String)> = vec![
        ("Number of Documents", stats.n_docs.to_string()),
        ("Total Tokens", stats.total_tokens.to_string()),
        ("Unique Documents Read", stats.distinct_adas.to_string()),
        ("Average Tokens per Document", format!("{:.2}", stats.mean_tokens)),
        ("Median Tokens per Document", stats.median_tokens.to_string()),
        ("Standard Deviation (Tokens per Document)", format!("{:.2}", stats.std_tokens)),
        ("Maximum Tokens in a Document", stats.max_tokens.to_string()),
        ("Total Characters", stats.total_chars.to_string()),
        ("Average Characters per Document", format!("{:.2}", stats.mean_chars)),
        ("Total Sentences", stats.total_sentences.to_string()),
        ("Average Sentences per Document", format!("{:.2}", stats.mean_sentences)),
    ];
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        out.push_str(&format!("{k:<width$}  {v:>14}\n"));
    }
    if stats.read_errors > 0 {
        out.push_str(&format!("({} files could not be read)\n", stats.read_errors));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(ada: &str, org: &str, tokens: u64) -> DocStats {
        DocStats { ada: ada.into(), organization: org.into(), tokens, characters: tokens * 5, sentences: 1 }
    }

    #[test]
    fn token_counts() {
        let t = ReferenceTokenizer;
        assert_eq!(count_tokens("", &t), 0);
        assert_eq!(count_tokens("α β γ", &t), 3);
        assert_eq!(count_tokens("Ποσό: 1.333,00 €", &t), 8);
        let text = "Αρ. πρωτ. 12/2021";
        assert_eq!(count_tokens(text, &t), t.encode(text).len() as u64);
    }

    #[test]
    fn sentence_estimates() {
        assert_eq!(estimate_sentences(""), 0);
        assert_eq!(estimate_sentences("Α. Β; Γ"), 3);
        assert_eq!(estimate_sentences("..."), 0);
        assert_eq!(estimate_sentences("Τι\u{037E} Ναι!"), 2);
        assert_eq!(estimate_sentences("  .  . "), 0);
    }

    #[test]
    fn closed_form_aggregate() {
        let s = CorpusStats::aggregate(vec![ds("A", "o", 1), ds("B", "o", 2), ds("C", "p", 3)]);
        assert_eq!(s.n_docs, 3);
        assert_eq!(s.total_tokens, 6);
        assert_eq!(s.mean_tokens, 2.0);
        assert_eq!(s.median_tokens, 2);
        assert!((s.std_tokens - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(s.max_tokens, 3);
        assert_eq!(s.org_histogram.get("o"), Some(&2));
    }

    #[test]
    fn empty_aggregate_is_zero() {
        let s = CorpusStats::aggregate(Vec::new());
        assert_eq!(s.n_docs, 0);
        assert_eq!(s.total_tokens, 0);
        assert_eq!(s.mean_tokens, 0.0);
        assert_eq!(s.mean_chars, 0.0);
        assert_eq!(s.std_tokens, 0.0);
        assert_eq!(s.median_tokens, 0);
    }

    #[test]
    fn lower_median_on_even_count() {
        let s = CorpusStats::aggregate(vec![ds("A", "o", 10), ds("B", "o", 1), ds("C", "o", 4), ds("D", "o", 7)]);
        assert_eq!(s.median_tokens, 4);
    }

    #[test]
    fn top_orgs() {
        let mut s = CorpusStats::aggregate(Vec::new());
        s.org_histogram = [("A".to_string(), 2), ("B".to_string(), 5)].into_iter().collect();
        assert_eq!(top_organizations(&s, 1), vec![("B".to_string(), 5)]);
        assert_eq!(top_organizations(&s, 10).len(), 2);
        assert!(top_organizations(&s, 0).is_empty());
        s.org_histogram = [("B".to_string(), 3), ("A".to_string(), 3)].into_iter().collect();
        assert_eq!(top_organizations(&s, 2), vec![("A".to_string(), 3), ("B".to_string(), 3)]);
    }

    #[test]
    fn zero_workers_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let layout = CorpusLayout::new(dir.path());
        assert!(matches!(compute_corpus_stats(&layout, 0, &ReferenceTokenizer), Err(StatsError::InvalidWorkers)));
    }

    #[test]
    fn unreadable_files_are_counted() {
        let dir = tempfile::tempdir().unwrap();
        let layout = CorpusLayout::new(dir.path());
        let shard = dir.path().join("ab");
        std::fs::create_dir_all(&shard).unwrap();
        std::fs::write(shard.join("broken.json"), "not json").unwrap();
        let s = compute_corpus_stats(&layout, 2, &ReferenceTokenizer).unwrap();
        assert_eq!(s.raw_files, 1);
        assert_eq!(s.read_errors, 1);
        assert_eq!(s.n_docs, 0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn additivity(xs in proptest::collection::vec(0u64..10_000, 0..40), ys in proptest::collection::vec(0u64..10_000, 0..40)) {
                let a: Vec<DocStats> = xs.iter().enumerate().map(|(i, &t)| ds(&format!("A{i}"), "o", t)).collect();
                let b: Vec<DocStats> = ys.iter().enumerate().map(|(i, &t)| ds(&format!("B{i}"), "p", t)).collect();
                let sa = CorpusStats::aggregate(a.clone());
                let sb = CorpusStats::aggregate(b.clone());
                let mut all = a;
                all.extend(b);
                let s = CorpusStats::aggregate(all);
                prop_assert_eq!(s.total_tokens, sa.total_tokens + sb.total_tokens);
                prop_assert_eq!(s.total_chars, sa.total_chars + sb.total_chars);
                prop_assert_eq!(s.n_docs, sa.n_docs + sb.n_docs);
                if s.n_docs > 0 {
                    prop_assert!((s.mean_tokens - s.total_tokens as f64 / s.n_docs as f64).abs() < 1e-9);
                }
            }

            #[test]
            fn order_independent(mut xs in proptest::collection::vec(0u64..1000, 0..30), seed in any::<u64>()) {
                let docs: Vec<DocStats> = xs.iter().enumerate().map(|(i, &t)| ds(&format!("D{i:03}"), "o", t)).collect();
                let s1 = CorpusStats::aggregate(docs.clone());
                let mut shuffled = docs;
                let n = shuffled.len();
                if n > 1 {
                    shuffled.rotate_left((seed as usize) % n);
                    shuffled.reverse();
                }
                prop_assert_eq!(s1, CorpusStats::aggregate(shuffled));
                xs.clear();
            }
        }
    }
}
