use serde::{Deserialize, Serialize};

use super::BoilerplateError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpanLabel {
    #[serde(rename = "BP")]
    Boilerplate,
    #[serde(rename = "CT")]
    Content,
}

impl SpanLabel {
    pub fn flipped(self) -> Self {
        match self {
            Self::Boilerplate => Self::Content,
            Self::Content => Self::Boilerplate,
        }
    }
}

/// Labeled half-open word range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub label: SpanLabel,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Whitespace-delimited words; punctuation stays attached.
pub fn tokenize_words(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// Ordered maximal spans partitioning a document's words.
///
/// Serialized as `{"ada": …, "spans": [{"label": "BP"|"CT", "start": …, "end": …}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    pub ada: String,
    pub spans: Vec<Span>,
}

impl Segmentation {
    /// Builds a segmentation from per-word labels, merging runs.
    pub fn from_labels(ada: impl Into<String>, labels: &[SpanLabel]) -> Self {
        let mut spans: Vec<Span> = Vec::new();
        for (i, &label) in labels.iter().enumerate() {
            match spans.last_mut() {
                Some(last) if last.label == label => last.end = i + 1,
                _ => spans.push(Span { label, start: i, end: i + 1 }),
            }
        }
        Self { ada: ada.into(), spans }
    }

    /// A single span covering `word_count` words (none for an empty document).
    pub fn uniform(ada: impl Into<String>, label: SpanLabel, word_count: usize) -> Self {
        Self::from_labels(ada, &vec![label; word_count])
    }

    /// Checks spans and merges adjacent spans that share a label.
    ///
    /// Fails on gaps, overlaps, empty spans, or coverage other than
    /// `[0, word_count)`.
    pub fn normalized(ada: impl Into<String>, spans: &[Span], word_count: usize) -> Result<Self, BoilerplateError> {
        let mut expected = 0;
        for s in spans {
            if s.start != expected {
                let kind = if s.start < expected { "overlap" } else { "gap" };
                return Err(BoilerplateError::InvalidSpans(format!("{kind} at word {expected}")));
            }
            if s.end <= s.start {
                return Err(BoilerplateError::InvalidSpans(format!("empty span at word {}", s.start)));
            }
            expected = s.end;
        }
        if expected != word_count {
            return Err(BoilerplateError::Mismatch { expected: word_count, actual: expected });
        }
        let labels: Vec<SpanLabel> =
            spans.iter().flat_map(|s| std::iter::repeat_n(s.label, s.len())).collect();
        Ok(Self::from_labels(ada, &labels))
    }

    pub fn word_count(&self) -> usize {
        self.spans.last().map_or(0, |s| s.end)
    }

    pub fn labels(&self) -> Vec<SpanLabel> {
        self.spans.iter().flat_map(|s| std::iter::repeat_n(s.label, s.len())).collect()
    }

    pub fn count(&self, label: SpanLabel) -> usize {
        self.spans.iter().filter(|s| s.label == label).map(Span::len).sum()
    }

    /// Verifies the partition invariant for a document of `word_count` words.
    pub fn validate(&self, word_count: usize) -> Result<(), BoilerplateError> {
        let mut expected = 0;
        for (i, s) in self.spans.iter().enumerate() {
            if s.start != expected || s.end <= s.start {
                return Err(BoilerplateError::InvalidSpans(format!("span {i} is not contiguous")));
            }
            if i > 0 && self.spans[i - 1].label == s.label {
                return Err(BoilerplateError::InvalidSpans(format!("span {i} repeats the previous label")));
            }
            expected = s.end;
        }
        if expected != word_count {
            return Err(BoilerplateError::Mismatch { expected: word_count, actual: expected });
        }
        Ok(())
    }
}

/// Boilerplate skeleton and content spans of one document, in span order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedParts {
    pub skeleton: Vec<String>,
    pub contents: Vec<String>,
    /// Labels of the spans in document order.
    pub order: Vec<SpanLabel>,
}

impl ExtractedParts {
    /// Re-interleaves skeleton and contents into the document's words.
    pub fn interleave(&self) -> Vec<String> {
        let (mut bp, mut ct) = (self.skeleton.iter(), self.contents.iter());
        let mut words = Vec::new();
        for label in &self.order {
            let part = match label {
                SpanLabel::Boilerplate => bp.next(),
                SpanLabel::Content => ct.next(),
            };
            if let Some(part) = part {
                words.extend(part.split_whitespace().map(str::to_owned));
            }
        }
        words
    }
}

/// Splits `doc` into boilerplate span texts and content span texts.
pub fn extract_parts(doc: &str, seg: &Segmentation) -> Result<ExtractedParts, BoilerplateError> {
    let words = tokenize_words(doc);
    seg.validate(words.len())?;
    let mut parts = ExtractedParts { skeleton: Vec::new(), contents: Vec::new(), order: Vec::new() };
    for span in &seg.spans {
        let text = words[span.start..span.end].join(" ");
        match span.label {
            SpanLabel::Boilerplate => parts.skeleton.push(text),
            SpanLabel::Content => parts.contents.push(text),
        }
        parts.order.push(span.label);
    }
    Ok(parts)
}

/// Computes a segmentation for a document given its neighbors' texts.
pub trait Segmenter: Send + Sync {
    fn name(&self) -> &str;
    fn segment(&self, ada: &str, doc: &str, neighbors: &[&str]) -> Result<Segmentation, BoilerplateError>;
}

/// Likelihood in `[0, 1]` that a document comes from a reusable template.
pub trait Classifier: Send + Sync {
    fn name(&self) -> &str;
    fn classify(&self, doc: &str, neighbors: &[&str]) -> Result<f64, BoilerplateError>;
}
