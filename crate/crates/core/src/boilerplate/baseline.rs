use std::collections::HashMap;

use super::segmentation::{tokenize_words, Classifier, Segmentation, Segmenter, SpanLabel};
use super::BoilerplateError;

pub const DEFAULT_M_FRAC: f64 = 0.5;
pub const DEFAULT_MIN_RUN: usize = 3;

/// Interns words so the alignment compares integers.
#[derive(Default)]
struct Vocab<'a>(HashMap<&'a str, u32>);

impl<'a> Vocab<'a> {
    fn ids(&mut self, words: &[&'a str]) -> Vec<u32> {
        words
            .iter()
            .map(|w| {
                let next = self.0.len() as u32;
                *self.0.entry(w).or_insert(next)
            })
            .collect()
    }
}

/// Last row of the LCS length table of `a` against every prefix of `b`.
fn lcs_row(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut row = vec![0u32; b.len() + 1];
    for &x in a {
        let mut diag = 0;
        for j in 0..b.len() {
            let up = row[j + 1];
            row[j + 1] = if x == b[j] { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row
}

/// Marks the positions of `a` used by one longest common subsequence with
/// `b` (Hirschberg, linear space). `offset` is the position of `a[0]` in `mask`.
fn lcs_mark(a: &[u32], b: &[u32], mask: &mut [bool], offset: usize) {
    // Common prefix and suffix are always part of some LCS.
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    for m in &mut mask[offset..offset + prefix] {
        *m = true;
    }
    let (a, b, offset) = (&a[prefix..], &b[prefix..], offset + prefix);
    let suffix = a.iter().rev().zip(b.iter().rev()).take_while(|(x, y)| x == y).count();
    for m in &mut mask[offset + a.len() - suffix..offset + a.len()] {
        *m = true;
    }
    let (a, b) = (&a[..a.len() - suffix], &b[..b.len() - suffix]);

    if a.is_empty() || b.is_empty() {
        return;
    }
    if a.len() == 1 {
        if b.contains(&a[0]) {
            mask[offset] = true;
        }
        return;
    }
    let mid = a.len() / 2;
    let left = lcs_row(&a[..mid], b);
    let ra: Vec<u32> = a[mid..].iter().rev().copied().collect();
    let rb: Vec<u32> = b.iter().rev().copied().collect();
    let right = lcs_row(&ra, &rb);
    let split = (0..=b.len()).max_by_key(|&k| (left[k] + right[b.len() - k], std::cmp::Reverse(k))).unwrap_or(0);
    lcs_mark(&a[..mid], &b[..split], mask, offset);
    lcs_mark(&a[mid..], &b[split..], mask, offset + mid);
}

/// Flips the shortest run below `min_run` into its surroundings until none
/// is left. Among equally short runs, boilerplate runs go first (so ties
/// resolve to content), then the leftmost.
fn smooth(labels: &mut [SpanLabel], min_run: usize) {
    loop {
        let seg = Segmentation::from_labels("", labels);
        if seg.spans.len() <= 1 {
            return;
        }
        let victim = seg
            .spans
            .iter()
            .filter(|s| s.len() < min_run)
            .min_by_key(|s| (s.len(), s.label != SpanLabel::Boilerplate, s.start));
        match victim {
            Some(s) => {
                for l in &mut labels[s.start..s.end] {
                    *l = s.label.flipped();
                }
            }
            None => return,
        }
    }
}

/// Multi-neighbor LCS voting segmenter.
///
/// A word is boilerplate when an LCS alignment with at least
/// `ceil(m_frac * neighbors)` neighbors (minimum one) covers it.
pub fn baseline_segment(
    ada: &str,
    doc: &str,
    neighbors: &[&str],
    m_frac: f64,
    min_run: usize,
) -> Result<Segmentation, BoilerplateError> {
    if neighbors.is_empty() {
        return Err(BoilerplateError::NoNeighbors);
    }
    let words = tokenize_words(doc);
    let mut vocab = Vocab::default();
    let ids = vocab.ids(&words);
    let mut votes = vec![0usize; words.len()];
    for neighbor in neighbors {
        let nids = vocab.ids(&tokenize_words(neighbor));
        let mut mask = vec![false; ids.len()];
        lcs_mark(&ids, &nids, &mut mask, 0);
        for (v, hit) in votes.iter_mut().zip(mask) {
            *v += usize::from(hit);
        }
    }
    let needed = ((m_frac * neighbors.len() as f64).ceil() as usize).max(1);
    let mut labels: Vec<SpanLabel> = votes
        .iter()
        .map(|&v| if v >= needed { SpanLabel::Boilerplate } else { SpanLabel::Content })
        .collect();
    smooth(&mut labels, min_run);
    Ok(Segmentation::from_labels(ada, &labels))
}

#[derive(Debug, Clone, Copy)]
pub struct BaselineSegmenter {
    pub m_frac: f64,
    pub min_run: usize,
}

impl Default for BaselineSegmenter {
    fn default() -> Self {
        Self { m_frac: DEFAULT_M_FRAC, min_run: DEFAULT_MIN_RUN }
    }
}

impl Segmenter for BaselineSegmenter {
    fn name(&self) -> &str {
        "baseline-lcs"
    }

    fn segment(&self, ada: &str, doc: &str, neighbors: &[&str]) -> Result<Segmentation, BoilerplateError> {
        baseline_segment(ada, doc, neighbors, self.m_frac, self.min_run)
    }
}

/// Likelihood = share of the document's words the baseline segmenter labels
/// as boilerplate. An empty document scores 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct BaselineClassifier {
    pub segmenter: BaselineSegmenter,
}

impl Classifier for BaselineClassifier {
    fn name(&self) -> &str {
        "baseline-lcs-share"
    }

    fn classify(&self, doc: &str, neighbors: &[&str]) -> Result<f64, BoilerplateError> {
        let seg = self.segmenter.segment("", doc, neighbors)?;
        let n = seg.word_count();
        Ok(if n == 0 { 0.0 } else { seg.count(SpanLabel::Boilerplate) as f64 / n as f64 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boilerplate::Span;
    use SpanLabel::{Boilerplate as BP, Content as CT};

    /// Plain quadratic LCS length, used as the oracle for the linear-space version.
    fn lcs_len(a: &[u32], b: &[u32]) -> usize {
        let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for i in 0..a.len() {
            for j in 0..b.len() {
                t[i + 1][j + 1] = if a[i] == b[j] { t[i][j] + 1 } else { t[i][j + 1].max(t[i + 1][j]) };
            }
        }
        t[a.len()][b.len()]
    }

    #[test]
    fn identical_is_all_boilerplate() {
        let doc = "Ο Δήμαρχος αποφασίζει την έγκριση της δαπάνης";
        let s = baseline_segment("x", doc, &[doc], DEFAULT_M_FRAC, DEFAULT_MIN_RUN).unwrap();
        assert_eq!(s.spans, vec![Span { label: BP, start: 0, end: 7 }]);
    }

    #[test]
    fn disjoint_is_all_content() {
        let s = baseline_segment("x", "α β γ δ", &["ε ζ η"], DEFAULT_M_FRAC, DEFAULT_MIN_RUN).unwrap();
        assert_eq!(s.spans, vec![Span { label: CT, start: 0, end: 4 }]);
    }

    #[test]
    fn hand_lcs_example() {
        let s = baseline_segment("x", "Α Β Γ X Δ Ε", &["Α Β Γ Y Δ Ε"], 1.0, 1).unwrap();
        assert_eq!(
            s.spans,
            vec![
                Span { label: BP, start: 0, end: 3 },
                Span { label: CT, start: 3, end: 4 },
                Span { label: BP, start: 4, end: 6 }
            ]
        );
    }

    #[test]
    fn no_neighbors_is_an_error() {
        assert_eq!(baseline_segment("x", "α", &[], 0.5, 3), Err(BoilerplateError::NoNeighbors));
    }

    #[test]
    fn voting_threshold() {
        // "β" is shared with one of two neighbors only.
        let doc = "α β γ";
        let n = ["α x γ", "α β γ"];
        assert_eq!(baseline_segment("x", doc, &n, 1.0, 1).unwrap().labels(), vec![BP, CT, BP]);
        assert_eq!(baseline_segment("x", doc, &n, 0.5, 1).unwrap().labels(), vec![BP, BP, BP]);
    }

    #[test]
    fn smoothing_prefers_content_on_ties() {
        let mut labels = vec![CT, CT, CT, BP, CT, CT, CT, CT, BP, BP, BP];
        smooth(&mut labels, 3);
        assert_eq!(labels, vec![CT, CT, CT, CT, CT, CT, CT, CT, BP, BP, BP]);
        // One-word runs of both labels: the boilerplate one flips first.
        let mut labels = vec![BP, CT, BP, BP, BP, CT, CT, CT];
        smooth(&mut labels, 3);
        assert_eq!(labels, vec![BP, BP, BP, BP, BP, CT, CT, CT]);
        let mut labels = vec![BP, CT];
        smooth(&mut labels, 3);
        assert_eq!(labels, vec![CT, CT]);
    }

    #[test]
    fn classifier_share() {
        let c = BaselineClassifier::default();
        assert_eq!(c.classify("α β γ δ", &["α β γ δ"]).unwrap(), 1.0);
        assert_eq!(c.classify("α β γ δ", &["ε"]).unwrap(), 0.0);
        assert_eq!(c.classify("", &["ε"]).unwrap(), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn hirschberg_marks_an_lcs(a in proptest::collection::vec(0u32..5, 0..40), b in proptest::collection::vec(0u32..5, 0..40)) {
                let mut mask = vec![false; a.len()];
                lcs_mark(&a, &b, &mut mask, 0);
                let picked: Vec<u32> = a.iter().zip(&mask).filter(|(_, &m)| m).map(|(&x, _)| x).collect();
                prop_assert_eq!(picked.len(), lcs_len(&a, &b));
                // The marked words must form a subsequence of b.
                let mut it = b.iter();
                prop_assert!(picked.iter().all(|x| it.any(|y| y == x)));
            }

            #[test]
            fn output_is_a_partition(doc in "[αβγδ ]{0,60}", ns in proptest::collection::vec("[αβγε ]{0,60}", 1..4), m in 0.0f64..=1.0, run in 1usize..5) {
                let refs: Vec<&str> = ns.iter().map(String::as_str).collect();
                let s = baseline_segment("x", &doc, &refs, m, run).unwrap();
                prop_assert!(s.validate(tokenize_words(&doc).len()).is_ok());
                if s.spans.len() > 1 {
                    prop_assert!(s.spans.iter().all(|sp| sp.len() >= run));
                }
            }
        }
    }
}
