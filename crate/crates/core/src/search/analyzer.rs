//! Greek text analyzer: folding, word segmentation, stopwords, light stemming.

use std::collections::HashSet;
use std::sync::OnceLock;

use unicode_normalization::char::{decompose_canonical, is_combining_mark};

const STOPWORDS_TXT: &str = include_str!("../../data/greek_stopwords.txt");
const SUFFIXES_TXT: &str = include_str!("../../data/greek_suffixes.txt");

/// Minimum number of characters a stem keeps.
const MIN_STEM_CHARS: usize = 3;

fn data_lines(raw: &str) -> impl Iterator<Item = &str> {
    raw.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| data_lines(STOPWORDS_TXT).collect())
}

/// Suffixes ordered longest first.
fn suffixes() -> &'static [&'static str] {
    static LIST: OnceLock<Vec<&'static str>> = OnceLock::new();
    LIST.get_or_init(|| {
        let mut v: Vec<&str> = data_lines(SUFFIXES_TXT).collect();
        v.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
        v
    })
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

/// Lowercases, strips accents and diacritics (tonos, dialytika, ...) and
/// maps final sigma to σ.
pub fn fold(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        for lower in c.to_lowercase() {
            decompose_canonical(lower, |d| {
                if !is_combining_mark(d) {
                    out.push(if d == 'ς' { 'σ' } else { d });
                }
            });
        }
    }
    out
}

/// Repeatedly removes the longest table suffix while at least
/// `MIN_STEM_CHARS` characters remain. Tokens with digits are left alone.
pub fn stem(token: &str) -> String {
    if token.chars().any(|c| c.is_numeric()) {
        return token.to_string();
    }
    let mut current = token.to_string();
    'outer: loop {
        let len = current.chars().count();
        for suffix in suffixes() {
            let slen = suffix.chars().count();
            if len >= slen + MIN_STEM_CHARS && current.ends_with(suffix) {
                current.truncate(current.len() - suffix.len());
                continue 'outer;
            }
        }
        return current;
    }
}

/// Folded words of `text` before stopword removal and stemming.
pub fn folded_words(text: &str) -> Vec<String> {
    fold(text)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Full analysis chain: fold, segment on non-alphanumerics, drop stopwords,
/// stem, and drop stems that collide with stopwords.
pub fn analyze_greek(text: &str) -> Vec<String> {
    folded_words(text)
        .into_iter()
        .filter(|w| !is_stopword(w))
        .map(|w| stem(&w))
        .filter(|w| !is_stopword(w))
        .collect()
}
