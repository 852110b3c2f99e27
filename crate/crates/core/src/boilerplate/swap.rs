use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{boilerplate_extraction_rate, reconstruction_error, BerScores};
use super::segmentation::{extract_parts, tokenize_words, ExtractedParts, Segmentation, Segmenter, SpanLabel};
use super::BoilerplateError;

/// Fills `host`'s content slots with `guest` contents in order.
///
/// Surplus contents are joined into the final slot; missing ones leave
/// their slot empty. A host without content slots gets the contents
/// appended at the end.
fn fill(host: &ExtractedParts, guest: &[String]) -> String {
    let slots = host.order.iter().filter(|l| **l == SpanLabel::Content).count();
    let mut out: Vec<&str> = Vec::new();
    let mut skeleton = host.skeleton.iter();
    let mut slot = 0;
    for label in &host.order {
        match label {
            SpanLabel::Boilerplate => out.extend(skeleton.next().map(String::as_str)),
            SpanLabel::Content => {
                if slot + 1 == slots {
                    out.extend(guest.iter().skip(slot).map(String::as_str));
                } else {
                    out.extend(guest.get(slot).map(String::as_str));
                }
                slot += 1;
            }
        }
    }
    if slots == 0 {
        out.extend(guest.iter().map(String::as_str));
    }
    out.retain(|s| !s.is_empty());
    out.join(" ")
}

/// Swaps main content between two segmented documents.
///
/// Returns `(A', B')` where `A'` is A's skeleton carrying B's contents.
pub fn swap_reconstruct(
    doc_a: &str,
    seg_a: &Segmentation,
    doc_b: &str,
    seg_b: &Segmentation,
) -> Result<(String, String), BoilerplateError> {
    let a = extract_parts(doc_a, seg_a)?;
    let b = extract_parts(doc_b, seg_b)?;
    Ok((fill(&a, &b.contents), fill(&b, &a.contents)))
}

/// One side of an evaluation pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDocument {
    pub ada: String,
    pub text: String,
    /// Embedding-space neighbor texts handed to the segmenter.
    pub neighbors: Vec<String>,
    /// Annotated segmentation, when available.
    #[serde(default)]
    pub truth: Option<Segmentation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapPair {
    pub pair_id: String,
    pub a: PairDocument,
    pub b: PairDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwapEvalResult {
    pub pair_id: String,
    /// RE of A' (A's skeleton, B's content) against B.
    pub re_ab: f64,
    /// RE of B' against A.
    pub re_ba: f64,
    pub ber_a: Option<BerScores>,
    pub ber_b: Option<BerScores>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: 0.0, std: 0.0, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        Self { mean, std: var.sqrt(), n }
    }

    /// Same figure scaled by 100.
    pub fn percent(&self) -> Self {
        Self { mean: self.mean * 100.0, std: self.std * 100.0, n: self.n }
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = f.precision().unwrap_or(4);
        write!(f, "{:.p$} ± {:.p$}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwapFailure {
    pub pair_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwapAggregate {
    pub re_ab: MeanStd,
    pub re_ba: MeanStd,
    /// Per-pair mean of both directions.
    pub re: MeanStd,
    /// BER with the whole document as denominator, over annotated documents.
    pub ber: MeanStd,
    /// BER with the true boilerplate count as denominator.
    pub ber_of_true_boilerplate: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwapReport {
    pub segmenter: String,
    pub results: Vec<SwapEvalResult>,
    pub failures: Vec<SwapFailure>,
    pub aggregate: SwapAggregate,
}

impl SwapReport {
    pub fn render_table(&self) -> String {
        let a = &self.aggregate;
        let mut out = String::new();
        out.push_str(&format!("Segmenter: {}\n", self.segmenter));
        out.push_str(&format!("Pairs evaluated: {} (failed: {})\n", self.results.len(), self.failures.len()));
        out.push_str(&format!("Reconstruction error (mean ± std): {}\n", a.re));
        out.push_str(&format!("  A' vs B: {}\n  B' vs A: {}\n", a.re_ab, a.re_ba));
        if a.ber.n > 0 {
            out.push_str(&format!("Boilerplate extraction rate %: {:.2}\n", a.ber.percent()));
            out.push_str(&format!("  of true boilerplate %: {:.2}\n", a.ber_of_true_boilerplate.percent()));
        }
        out
    }
}

fn evaluate_pair(pair: &SwapPair, segmenter: &dyn Segmenter) -> Result<SwapEvalResult, BoilerplateError> {
    let segment = |d: &PairDocument| {
        let refs: Vec<&str> = d.neighbors.iter().map(String::as_str).collect();
        let seg = segmenter.segment(&d.ada, &d.text, &refs)?;
        seg.validate(tokenize_words(&d.text).len())?;
        Ok::<_, BoilerplateError>(seg)
    };
    let (seg_a, seg_b) = (segment(&pair.a)?, segment(&pair.b)?);
    let (a_prime, b_prime) = swap_reconstruct(&pair.a.text, &seg_a, &pair.b.text, &seg_b)?;
    let ber = |seg: &Segmentation, d: &PairDocument| d.truth.as_ref().map(|t| boilerplate_extraction_rate(seg, t)).transpose();
    Ok(SwapEvalResult {
        pair_id: pair.pair_id.clone(),
        re_ab: reconstruction_error(&a_prime, &pair.b.text),
        re_ba: reconstruction_error(&b_prime, &pair.a.text),
        ber_a: ber(&seg_a, &pair.a)?,
        ber_b: ber(&seg_b, &pair.b)?,
    })
}

/// Segments both sides of every pair, swaps contents and scores the
/// reconstructions. Failed pairs are reported and left out of the aggregate.
pub fn run_swap_evaluation(pairs: &[SwapPair], segmenter: &dyn Segmenter) -> SwapReport {
    let outcomes: Vec<_> = pairs.par_iter().map(|p| (p, evaluate_pair(p, segmenter))).collect();
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (pair, outcome) in outcomes {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => failures.push(SwapFailure { pair_id: pair.pair_id.clone(), error: e.to_string() }),
        }
    }
    let col = |f: &dyn Fn(&SwapEvalResult) -> f64| results.iter().map(f).collect::<Vec<_>>();
    let bers: Vec<BerScores> = results.iter().flat_map(|r| [r.ber_a, r.ber_b]).flatten().collect();
    let aggregate = SwapAggregate {
        re_ab: MeanStd::of(&col(&|r| r.re_ab)),
        re_ba: MeanStd::of(&col(&|r| r.re_ba)),
        re: MeanStd::of(&col(&|r| (r.re_ab + r.re_ba) / 2.0)),
        ber: MeanStd::of(&bers.iter().map(|b| b.of_total).collect::<Vec<_>>()),
        ber_of_true_boilerplate: MeanStd::of(&bers.iter().filter_map(|b| b.of_true_boilerplate).collect::<Vec<_>>()),
    };
    SwapReport { segmenter: segmenter.name().to_string(), results, failures, aggregate }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boilerplate::BaselineSegmenter;
    use SpanLabel::{Boilerplate as BP, Content as CT};

    fn labels(pattern: &str) -> Vec<SpanLabel> {
        pattern.chars().map(|c| if c == 'B' { BP } else { CT }).collect()
    }

    #[test]
    fn identical_template_single_slot() {
        let a = "Ο Δήμαρχος εγκρίνει δαπάνη ποσού 100 € για καθαρισμό";
        let b = "Ο Δήμαρχος εγκρίνει δαπάνη ποσού 250 € για φύτευση δέντρων";
        let sa = Segmentation::from_labels("a", &labels("BBBBBCCCC"));
        let sb = Segmentation::from_labels("b", &labels("BBBBBCCCCC"));
        let (a2, b2) = swap_reconstruct(a, &sa, b, &sb).unwrap();
        assert_eq!(a2, b);
        assert_eq!(b2, a);
        assert_eq!(reconstruction_error(&a2, b), 0.0);
    }

    #[test]
    fn all_content_degenerate() {
        let sa = Segmentation::uniform("a", CT, 2);
        let sb = Segmentation::uniform("b", CT, 3);
        assert_eq!(swap_reconstruct("α β", &sa, "γ δ ε", &sb).unwrap(), ("γ δ ε".into(), "α β".into()));
    }

    #[test]
    fn slot_count_mismatch() {
        // A: B C B C B (2 slots), B: B C B (1 slot).
        let a = "s1 x s2 y s3";
        let sa = Segmentation::from_labels("a", &labels("BCBCB"));
        let b = "t1 z t2";
        let sb = Segmentation::from_labels("b", &labels("BCB"));
        let (a2, b2) = swap_reconstruct(a, &sa, b, &sb).unwrap();
        assert_eq!(a2, "s1 z s2 s3");
        // B's single slot takes both of A's contents.
        assert_eq!(b2, "t1 x y t2");
    }

    #[test]
    fn no_slots_appends() {
        let sa = Segmentation::uniform("a", BP, 2);
        let sb = Segmentation::from_labels("b", &labels("BC"));
        assert_eq!(swap_reconstruct("α β", &sa, "γ δ", &sb).unwrap(), ("α β δ".into(), "γ".into()));
    }

    #[test]
    fn mean_std_format() {
        let m = MeanStd { mean: 0.0097, std: 0.0370, n: 100 };
        assert_eq!(m.to_string(), "0.0097 ± 0.0370");
        assert_eq!(format!("{:.2}", MeanStd { mean: 0.756, std: 0.1, n: 1 }.percent()), "75.60 ± 10.00");
        let s = MeanStd::of(&[1.0, 3.0]);
        assert_eq!((s.mean, s.std), (2.0, 1.0));
    }

    fn doc(ada: &str, text: &str, neighbor: &str) -> PairDocument {
        PairDocument { ada: ada.into(), text: text.into(), neighbors: vec![neighbor.into()], truth: None }
    }

    #[test]
    fn hand_computed_perturbations() {
        // Each side is segmented against its partner.
        let a = "α β γ κ1 κ2 κ3 δ ε ζ";
        let b = "α β γ λ1 λ2 λ3 δ ε ζ";
        // B's skeleton has an extra trailing word θ. Its 1-word content run
        // is smoothed into boilerplate, so A' lacks θ and B' keeps it.
        let c = "α β γ λ1 λ2 λ3 δ ε ζ θ";
        let pairs = vec![
            SwapPair { pair_id: "same".into(), a: doc("a", a, b), b: doc("b", b, a) },
            SwapPair { pair_id: "perturbed".into(), a: doc("a", a, c), b: doc("c", c, a) },
        ];
        let report = run_swap_evaluation(&pairs, &BaselineSegmenter::default());
        assert!(report.failures.is_empty());
        assert_eq!((report.results[0].re_ab, report.results[0].re_ba), (0.0, 0.0));
        // One deletion over ten words in each direction.
        assert_eq!((report.results[1].re_ab, report.results[1].re_ba), (0.1, 0.1));
        assert_eq!(report.aggregate.re.mean, 0.05);
        assert!((report.aggregate.re.std - 0.05).abs() < 1e-15);
    }

    #[test]
    fn failures_are_counted() {
        let bad = SwapPair {
            pair_id: "bad".into(),
            a: PairDocument { ada: "a".into(), text: "α".into(), neighbors: vec![], truth: None },
            b: doc("b", "β", "α"),
        };
        let report = run_swap_evaluation(&[bad], &BaselineSegmenter::default());
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.aggregate.re.n, 0);
    }
}
