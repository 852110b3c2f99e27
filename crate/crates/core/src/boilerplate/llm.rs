//! Segmenter and classifier adapters over a completion model.

use serde::Deserialize;

use super::segmentation::{tokenize_words, Classifier, Segmentation, Segmenter, Span};
use super::BoilerplateError;
use crate::model::ChatModel;

pub const SEGMENT_PROMPT_V1: &str = include_str!("../../prompts/segment_v1.txt");
pub const CLASSIFY_PROMPT_V1: &str = include_str!("../../prompts/classify_v1.txt");

/// Neighbor texts are cut to this many characters inside prompts.
const NEIGHBOR_CHARS: usize = 4000;

fn neighbor_block(neighbors: &[&str]) -> String {
    neighbors
        .iter()
        .enumerate()
        .map(|(i, n)| format!("--- related decision {} ---\n{}", i + 1, n.chars().take(NEIGHBOR_CHARS).collect::<String>()))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn render_segment_prompt(doc: &str, neighbors: &[&str]) -> String {
    let words = tokenize_words(doc);
    let listed: Vec<String> = words.iter().enumerate().map(|(i, w)| format!("{i}:{w}")).collect();
    SEGMENT_PROMPT_V1
        .replace("{word_count}", &words.len().to_string())
        .replace("{neighbors}", &neighbor_block(neighbors))
        .replace("{words}", &listed.join(" "))
}

pub fn render_classify_prompt(doc: &str, neighbors: &[&str]) -> String {
    CLASSIFY_PROMPT_V1.replace("{neighbors}", &neighbor_block(neighbors)).replace("{document}", doc)
}

/// Strips a Markdown code fence if the whole reply is wrapped in one.
pub(crate) fn unfence(raw: &str) -> &str {
    let t = raw.trim();
    let Some(rest) = t.strip_prefix("```") else { return t };
    let rest = rest.trim_start_matches(|c: char| c.is_alphanumeric());
    rest.strip_suffix("```").unwrap_or(rest).trim()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpanReply {
    Wrapped { spans: Vec<Span> },
    Bare(Vec<Span>),
}

/// Parses a span list reply into a segmentation for a `word_count`-word
/// document. Adjacent spans with the same label are merged.
pub fn parse_segmentation(ada: &str, raw: &str, word_count: usize) -> Result<Segmentation, BoilerplateError> {
    let unparseable = |reason: String| BoilerplateError::UnparseableResponse { reason, raw: raw.to_string() };
    let spans = match serde_json::from_str::<SpanReply>(unfence(raw)) {
        Ok(SpanReply::Wrapped { spans }) | Ok(SpanReply::Bare(spans)) => spans,
        Err(e) => return Err(unparseable(e.to_string())),
    };
    Segmentation::normalized(ada, &spans, word_count).map_err(|e| unparseable(e.to_string()))
}

/// Accepts a bare number or `{"likelihood": x}` with x in `[0, 1]`.
pub fn parse_likelihood(raw: &str) -> Result<f64, BoilerplateError> {
    let text = unfence(raw);
    let value = text.parse::<f64>().ok().or_else(|| {
        #[derive(Deserialize)]
        struct L {
            likelihood: f64,
        }
        serde_json::from_str::<L>(text).ok().map(|l| l.likelihood)
    });
    match value {
        Some(v) if (0.0..=1.0).contains(&v) => Ok(v),
        Some(v) => Err(BoilerplateError::UnparseableResponse { reason: format!("likelihood {v} outside [0, 1]"), raw: raw.into() }),
        None => Err(BoilerplateError::UnparseableResponse { reason: "no likelihood found".into(), raw: raw.into() }),
    }
}

pub struct LlmSegmenter<M> {
    pub model: M,
}

impl<M: ChatModel> Segmenter for LlmSegmenter<M> {
    fn name(&self) -> &str {
        self.model.model()
    }

    fn segment(&self, ada: &str, doc: &str, neighbors: &[&str]) -> Result<Segmentation, BoilerplateError> {
        let prompt = render_segment_prompt(doc, neighbors);
        let raw = self.model.complete(&prompt).map_err(|e| BoilerplateError::Remote(e.to_string()))?;
        parse_segmentation(ada, &raw, tokenize_words(doc).len())
    }
}

pub struct LlmClassifier<M> {
    pub model: M,
}

impl<M: ChatModel> Classifier for LlmClassifier<M> {
    fn name(&self) -> &str {
        self.model.model()
    }

    fn classify(&self, doc: &str, neighbors: &[&str]) -> Result<f64, BoilerplateError> {
        let prompt = render_classify_prompt(doc, neighbors);
        let raw = self.model.complete(&prompt).map_err(|e| BoilerplateError::Remote(e.to_string()))?;
        parse_likelihood(&raw)
    }
}
