use std::collections::HashMap;

use super::{Prompt, StructuredAnswer, STRUCTURED_INSTRUCTIONS_V1};
use crate::boilerplate::llm::unfence;
use crate::corpus::validate_ada;
use crate::model::ChatModel;
use crate::textstats::ReferenceTokenizer;

pub const DEFAULT_MAX_OUTPUT_TOKENS: usize = 1500;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerationError {
    #[error("generator failed: {0}")]
    Failed(String),
    #[error("structured reply rejected: {reason}")]
    Schema { reason: String, raw: String },
}

/// Text generation behind a port. Implementations stream chunks through
/// `on_chunk` and return the full text; the caller applies the output limit.
pub trait Generator: Send + Sync {
    fn name(&self) -> &str;

    fn generate(&self, prompt: &Prompt, on_chunk: &mut dyn FnMut(&str)) -> Result<String, GenerationError>;

    /// Raw reply to the structured-output request.
    fn generate_structured_raw(&self, prompt: &Prompt) -> Result<String, GenerationError>;

    /// Structured reply checked against the answer schema; one retry on a
    /// non-conforming reply.
    fn generate_structured(&self, prompt: &Prompt) -> Result<StructuredAnswer, GenerationError> {
        let require_citations = !prompt.evidence.adas.is_empty();
        let mut last = None;
        for _ in 0..2 {
            let raw = self.generate_structured_raw(prompt)?;
            match parse_structured_answer(&raw, require_citations) {
                Ok(a) => return Ok(a),
                Err(reason) => last = Some(GenerationError::Schema { reason, raw }),
            }
        }
        Err(last.expect("at least one attempt"))
    }
}

/// Parses `{"concise_answer", "detailed_explanation", "citations"}`,
/// optionally inside a code fence.
pub fn parse_structured_answer(raw: &str, require_citations: bool) -> Result<StructuredAnswer, String> {
    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Reply {
        concise_answer: String,
        detailed_explanation: String,
        citations: Vec<String>,
    }
    let r: Reply = serde_json::from_str(unfence(raw)).map_err(|e| e.to_string())?;
    if r.concise_answer.trim().is_empty() {
        return Err("empty concise_answer".into());
    }
    let citations: Vec<String> = r.citations.into_iter().map(|c| c.trim().to_string()).collect();
    if let Some(bad) = citations.iter().find(|c| !validate_ada(c)) {
        return Err(format!("invalid citation {bad:?}"));
    }
    if require_citations && citations.is_empty() {
        return Err("no citations although evidence was supplied".into());
    }
    Ok(StructuredAnswer { concise_answer: r.concise_answer, detailed_explanation: r.detailed_explanation, citations })
}

/// Prefix of `text` holding at most `max_tokens` reference tokens.
pub fn truncate_tokens(text: &str, max_tokens: usize) -> &str {
    let tokens = ReferenceTokenizer::split(text);
    if tokens.len() <= max_tokens {
        return text;
    }
    if max_tokens == 0 {
        return "";
    }
    let last = tokens[max_tokens - 1];
    let end = last.as_ptr() as usize - text.as_ptr() as usize + last.len();
    &text[..end]
}

/// Forwards streamed chunks until the token limit, then drops the rest.
pub(crate) struct Limiter<'a> {
    max_tokens: usize,
    buf: String,
    sent: usize,
    done: bool,
    sink: &'a mut dyn FnMut(&str),
}

impl<'a> Limiter<'a> {
    pub(crate) fn new(max_tokens: usize, sink: &'a mut dyn FnMut(&str)) -> Self {
        Self { max_tokens, buf: String::new(), sent: 0, done: false, sink }
    }

    pub(crate) fn push(&mut self, chunk: &str) {
        if self.done {
            return;
        }
        self.buf.push_str(chunk);
        let tokens = ReferenceTokenizer::split(&self.buf);
        // With the limit reached, only text up to the last allowed token is
        // safe to send: trailing whitespace may still be cut.
        let allowed = match tokens.len().checked_sub(self.max_tokens) {
            None => self.buf.len(),
            Some(_) if self.max_tokens == 0 => 0,
            Some(extra) => {
                let last = tokens[self.max_tokens - 1];
                self.done = extra > 0;
                last.as_ptr() as usize - self.buf.as_ptr() as usize + last.len()
            }
        };
        self.done |= self.max_tokens == 0 && !tokens.is_empty();
        if allowed > self.sent {
            (self.sink)(&self.buf[self.sent..allowed]);
            self.sent = allowed;
        }
    }

    /// Sends any held-back text when the stream ends within the limit.
    pub(crate) fn finish(mut self) {
        if !self.done && self.sent < self.buf.len() {
            (self.sink)(&self.buf[self.sent..]);
            self.sent = self.buf.len();
        }
    }
}

/// Hermetic generator: answers with the opening of the top evidence block
/// and cites its ADA.
#[derive(Debug, Clone, Default)]
pub struct ExtractiveGenerator;

fn first_sentence(text: &str, max_chars: usize) -> String {
    let text = text.trim();
    let end = text.find(['.', ';', '\n']).map_or(text.len(), |i| i + 1);
    text[..end].chars().take(max_chars).collect::<String>().trim().to_string()
}

fn top_block(prompt: &Prompt) -> Option<(&str, &str)> {
    Some((prompt.evidence.adas.first()?.as_str(), prompt.evidence.bodies.first()?.as_str()))
}

impl Generator for ExtractiveGenerator {
    fn name(&self) -> &str {
        "extractive"
    }

    fn generate(&self, prompt: &Prompt, on_chunk: &mut dyn FnMut(&str)) -> Result<String, GenerationError> {
        let text = match top_block(prompt) {
            Some((ada, body)) => format!("Σύμφωνα με την απόφαση {ada}: {}", first_sentence(body, 400)),
            None => String::new(),
        };
        for piece in text.split_inclusive(' ') {
            on_chunk(piece);
        }
        Ok(text)
    }

    fn generate_structured_raw(&self, prompt: &Prompt) -> Result<String, GenerationError> {
        let answer = match top_block(prompt) {
            Some((ada, body)) => StructuredAnswer {
                concise_answer: format!("Βλ. απόφαση {ada}."),
                detailed_explanation: first_sentence(body, 1000),
                citations: vec![ada.to_string()],
            },
            None => StructuredAnswer {
                concise_answer: "Δεν βρέθηκαν σχετικές αποφάσεις.".into(),
                detailed_explanation: String::new(),
                citations: Vec::new(),
            },
        };
        serde_json::to_string(&answer).map_err(|e| GenerationError::Failed(e.to_string()))
    }
}

/// Replies from a fixed question-to-answer table; unknown questions get the
/// fallback. Structured requests return the same text raw.
#[derive(Debug, Clone, Default)]
pub struct ScriptedGenerator {
    pub answers: HashMap<String, String>,
    pub fallback: String,
}

impl ScriptedGenerator {
    pub fn new(answers: impl IntoIterator<Item = (String, String)>) -> Self {
        Self { answers: answers.into_iter().collect(), fallback: String::new() }
    }

    fn reply(&self, question: &str) -> &str {
        self.answers.get(question.trim()).map_or(self.fallback.as_str(), String::as_str)
    }
}

impl Generator for ScriptedGenerator {
    fn name(&self) -> &str {
        "scripted"
    }

    fn generate(&self, prompt: &Prompt, on_chunk: &mut dyn FnMut(&str)) -> Result<String, GenerationError> {
        let text = self.reply(&prompt.question).to_string();
        for piece in text.split_inclusive(' ') {
            on_chunk(piece);
        }
        Ok(text)
    }

    fn generate_structured_raw(&self, prompt: &Prompt) -> Result<String, GenerationError> {
        Ok(self.reply(&prompt.question).to_string())
    }
}

/// Non-streaming generator over a completion model, e.g. a replay cache.
pub struct ModelGenerator<M> {
    pub model: M,
}

impl<M: ChatModel> Generator for ModelGenerator<M> {
    fn name(&self) -> &str {
        self.model.model()
    }

    fn generate(&self, prompt: &Prompt, on_chunk: &mut dyn FnMut(&str)) -> Result<String, GenerationError> {
        let text = self.model.complete(&prompt.render()).map_err(|e| GenerationError::Failed(e.to_string()))?;
        on_chunk(&text);
        Ok(text)
    }

    fn generate_structured_raw(&self, prompt: &Prompt) -> Result<String, GenerationError> {
        let full = format!("{}\n\n{}", prompt.render(), STRUCTURED_INSTRUCTIONS_V1);
        self.model.complete(&full).map_err(|e| GenerationError::Failed(e.to_string()))
    }
}
