use serde::Serialize;

use super::segmentation::{tokenize_words, Segmentation, SpanLabel};
use super::BoilerplateError;

/// Unit-cost edit distance over word sequences.
pub fn word_levenshtein<T: PartialEq>(x: &[T], y: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=y.len()).collect();
    let mut cur = vec![0; y.len() + 1];
    for (i, a) in x.iter().enumerate() {
        cur[0] = i + 1;
        for (j, b) in y.iter().enumerate() {
            let sub = prev[j] + usize::from(a != b);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[y.len()]
}

/// Word-level Levenshtein distance divided by the longer word count.
pub fn reconstruction_error(x: &str, y: &str) -> f64 {
    let (xw, yw) = (tokenize_words(x), tokenize_words(y));
    let longest = xw.len().max(yw.len());
    if longest == 0 {
        return 0.0;
    }
    word_levenshtein(&xw, &yw) as f64 / longest as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerScores {
    /// Correct boilerplate words over all words of the document.
    pub of_total: f64,
    /// Correct boilerplate words over the true boilerplate words; `None`
    /// when the truth has no boilerplate.
    pub of_true_boilerplate: Option<f64>,
}

pub fn boilerplate_extraction_rate(predicted: &Segmentation, truth: &Segmentation) -> Result<BerScores, BoilerplateError> {
    let (p, t) = (predicted.labels(), truth.labels());
    if p.len() != t.len() {
        return Err(BoilerplateError::Mismatch { expected: t.len(), actual: p.len() });
    }
    let both = p.iter().zip(&t).filter(|(a, b)| **a == SpanLabel::Boilerplate && **b == SpanLabel::Boilerplate).count();
    let true_bp = truth.count(SpanLabel::Boilerplate);
    Ok(BerScores {
        of_total: if t.is_empty() { 0.0 } else { both as f64 / t.len() as f64 },
        of_true_boilerplate: (true_bp > 0).then(|| both as f64 / true_bp as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use SpanLabel::{Boilerplate as BP, Content as CT};

    #[test]
    fn re_examples() {
        assert_eq!(reconstruction_error("α β γ", "α β γ"), 0.0);
        assert_eq!(reconstruction_error("α β γ", "α δ γ"), 1.0 / 3.0);
        assert_eq!(reconstruction_error("α β γ", ""), 1.0);
        assert_eq!(reconstruction_error("", ""), 0.0);
        assert_eq!(reconstruction_error("α β", "β α β"), 1.0 / 3.0);
    }

    #[test]
    fn levenshtein_classics() {
        let k: Vec<char> = "kitten".chars().collect();
        let s: Vec<char> = "sitting".chars().collect();
        assert_eq!(word_levenshtein(&k, &s), 3);
    }

    fn seg(bp: &[usize], n: usize) -> Segmentation {
        let labels: Vec<SpanLabel> = (0..n).map(|i| if bp.contains(&i) { BP } else { CT }).collect();
        Segmentation::from_labels("x", &labels)
    }

    #[test]
    fn ber_examples() {
        let all = seg(&(0..10).collect::<Vec<_>>(), 10);
        assert_eq!(boilerplate_extraction_rate(&all, &all).unwrap().of_total, 1.0);
        let none = seg(&[], 10);
        let four = seg(&[0, 1, 2, 3], 10);
        assert_eq!(boilerplate_extraction_rate(&none, &four).unwrap().of_total, 0.0);
        let r = boilerplate_extraction_rate(&seg(&[0, 1, 2], 10), &seg(&[1, 2, 3], 10)).unwrap();
        assert!((r.of_total - 0.2).abs() < 1e-15);
        assert!((r.of_true_boilerplate.unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(boilerplate_extraction_rate(&none, &none).unwrap().of_true_boilerplate, None);
        assert!(matches!(boilerplate_extraction_rate(&none, &seg(&[], 9)), Err(BoilerplateError::Mismatch { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn words() -> impl Strategy<Value = String> {
            proptest::collection::vec("[αβγ]{1,2}", 0..15).prop_map(|w| w.join(" "))
        }

        proptest! {
            #[test]
            fn re_is_a_normalized_metric(x in words(), y in words()) {
                prop_assert_eq!(reconstruction_error(&x, &x), 0.0);
                let xy = reconstruction_error(&x, &y);
                prop_assert_eq!(xy, reconstruction_error(&y, &x));
                prop_assert!((0.0..=1.0).contains(&xy));
            }

            #[test]
            fn ber_is_bounded_by_true_share(p in proptest::collection::vec(any::<bool>(), 1..30), t in proptest::collection::vec(any::<bool>(), 30)) {
                let n = p.len();
                let lab = |v: &[bool]| Segmentation::from_labels("x", &v.iter().map(|&b| if b { BP } else { CT }).collect::<Vec<_>>());
                let (ps, ts) = (lab(&p), lab(&t[..n]));
                let r = boilerplate_extraction_rate(&ps, &ts).unwrap();
                let bound = ts.count(BP) as f64 / n as f64;
                prop_assert!(r.of_total <= bound + 1e-15);
                let covers = (0..n).all(|i| !t[i] || p[i]);
                prop_assert_eq!(covers, r.of_total == bound);
            }
        }
    }
}
