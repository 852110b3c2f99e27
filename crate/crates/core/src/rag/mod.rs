//! Citation-grounded conversational question answering over the BM25 index.

mod generator;
mod service;
mod session;

use serde::{Deserialize, Serialize};

pub use generator::{
    parse_structured_answer, truncate_tokens, ExtractiveGenerator, GenerationError, Generator, ModelGenerator, ScriptedGenerator,
    DEFAULT_MAX_OUTPUT_TOKENS,
};
pub use service::{Answer, AnswerMode, RagConfig, RagError, RagService, Retriever, NO_EVIDENCE_ANSWER};
pub use session::{decode_session, encode_session, FileSessionStore, MemorySessionStore, SessionError, SessionStore};

use crate::corpus::{find_adas, validate_ada};
use crate::search::SearchHit;

pub const SYSTEM_PROMPT_V1: &str = include_str!("../../prompts/rag_system_v1.txt");
pub const STRUCTURED_INSTRUCTIONS_V1: &str = include_str!("../../prompts/rag_structured_v1.txt");

pub const DEFAULT_K: usize = 8;
pub const DEFAULT_HISTORY_TURNS: usize = 5;
pub const DEFAULT_PER_HIT_CHARS: usize = 2000;
pub const DEFAULT_TOTAL_BUDGET_CHARS: usize = 16_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ChatRole {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredAnswer {
    pub concise_answer: String,
    pub detailed_explanation: String,
    pub citations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub role: ChatRole,
    pub text: String,
    #[serde(default)]
    pub cited_adas: Vec<String>,
    /// Unix milliseconds.
    pub timestamp: i64,
    /// Set on a user turn whose answer failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structured: Option<StructuredAnswer>,
}

impl ChatTurn {
    pub fn user(text: impl Into<String>, timestamp: i64) -> Self {
        Self { role: ChatRole::User, text: text.into(), cited_adas: Vec::new(), timestamp, error: None, structured: None }
    }

    pub fn assistant(text: impl Into<String>, cited_adas: Vec<String>, timestamp: i64) -> Self {
        Self { role: ChatRole::Assistant, text: text.into(), cited_adas, timestamp, error: None, structured: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatSession {
    pub session_id: String,
    pub turns: Vec<ChatTurn>,
}

impl ChatSession {
    pub fn new(session_id: impl Into<String>) -> Self {
        Self { session_id: session_id.into(), turns: Vec::new() }
    }

    /// Roles alternate starting with a user turn; a user turn marked with an
    /// error has no answer, so another user turn may follow it. Citations
    /// must be valid ADAs.
    pub fn validate(&self) -> Result<(), String> {
        let mut expect_user = true;
        for (i, t) in self.turns.iter().enumerate() {
            match (t.role, expect_user) {
                (ChatRole::User, true) => expect_user = t.error.is_some(),
                (ChatRole::Assistant, false) => expect_user = true,
                _ => return Err(format!("turn {i} breaks role alternation")),
            }
            if let Some(bad) = t.cited_adas.iter().find(|a| !validate_ada(a)) {
                return Err(format!("turn {i} cites invalid ADA {bad:?}"));
            }
        }
        Ok(())
    }
}

/// The question followed by up to `max_turns` most recent turns, oldest
/// first, joined by single spaces.
pub fn build_retrieval_query(session: &ChatSession, question: &str, max_turns: usize) -> String {
    let start = session.turns.len().saturating_sub(max_turns);
    std::iter::once(question)
        .chain(session.turns[start..].iter().map(|t| t.text.as_str()))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Evidence blocks handed to the generator.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Evidence {
    pub text: String,
    /// ADAs of the included blocks, in order.
    pub adas: Vec<String>,
    /// Body prefix of each included block.
    pub bodies: Vec<String>,
}

fn prefix_chars(s: &str, n: usize) -> &str {
    s.char_indices().nth(n).map_or(s, |(i, _)| &s[..i])
}

/// One `[ADA: …]` block per hit: the header and the first `per_hit_chars`
/// characters of the body. Stops before the body characters would exceed
/// `total_budget_chars`, but always keeps the first block.
pub fn assemble_evidence(hits: &[SearchHit], per_hit_chars: usize, total_budget_chars: usize) -> Evidence {
    let mut blocks = Vec::new();
    let mut adas = Vec::new();
    let mut bodies = Vec::new();
    let mut used = 0;
    for hit in hits {
        let body = prefix_chars(&hit.body, per_hit_chars);
        let len = body.chars().count();
        if !blocks.is_empty() && used + len > total_budget_chars {
            break;
        }
        used += len;
        blocks.push(format!("[ADA: {}]\n{}\n{}", hit.ada, hit.header, body));
        adas.push(hit.ada.clone());
        bodies.push(body.to_string());
    }
    Evidence { text: blocks.join("\n\n"), adas, bodies }
}

/// The four prompt parts, in order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prompt {
    pub system: String,
    pub history: Vec<(ChatRole, String)>,
    pub evidence: Evidence,
    pub question: String,
}

impl Prompt {
    /// History as `Χρήστης:` / `Βοηθός:` lines.
    pub fn history_text(&self) -> String {
        self.history
            .iter()
            .map(|(role, text)| match role {
                ChatRole::User => format!("Χρήστης: {text}"),
                ChatRole::Assistant => format!("Βοηθός: {text}"),
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// User-side message: history, evidence and question sections.
    pub fn user_message(&self) -> String {
        format!(
            "### ΙΣΤΟΡΙΚΟ ΣΥΝΟΜΙΛΙΑΣ\n{}\n\n### ΤΕΚΜΗΡΙΑ\n{}\n\n### ΕΡΩΤΗΣΗ\n{}",
            self.history_text(),
            self.evidence.text,
            self.question
        )
    }

    /// Single-string form: system message then the user message.
    pub fn render(&self) -> String {
        format!("### ΟΔΗΓΙΕΣ\n{}\n\n{}", self.system.trim_end(), self.user_message())
    }
}

/// System message, the same history window as retrieval, evidence and the
/// question.
pub fn build_prompt(session: &ChatSession, evidence: Evidence, question: &str, history_turns: usize) -> Prompt {
    let start = session.turns.len().saturating_sub(history_turns);
    Prompt {
        system: SYSTEM_PROMPT_V1.to_string(),
        history: session.turns[start..].iter().map(|t| (t.role, t.text.clone())).collect(),
        evidence,
        question: question.to_string(),
    }
}

/// Valid ADAs in order of first appearance, without duplicates.
pub fn extract_ada_citations(text: &str) -> Vec<String> {
    find_adas(text)
}
