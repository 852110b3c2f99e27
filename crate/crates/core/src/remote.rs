//! Clients for OpenAI-compatible chat-completion and embedding endpoints.
//!
//! Serves both as a [`ChatModel`] (single completion, used by the
//! boilerplate stages and QA generation) and as a streaming RAG
//! [`Generator`].

use std::io::{BufRead, BufReader};
use std::time::Duration;

use serde_json::{json, Value};

use crate::embedding::{EmbeddingVector, EncodeError, Encoder};
use crate::model::{ChatModel, ModelError};
use crate::rag::{GenerationError, Generator, Prompt, DEFAULT_MAX_OUTPUT_TOKENS, STRUCTURED_INSTRUCTIONS_V1};

pub const API_KEY_ENV: &str = "DIAVGEIA_LLM_API_KEY";
pub const BASE_URL_ENV: &str = "DIAVGEIA_LLM_BASE_URL";
pub const MODEL_ENV: &str = "DIAVGEIA_LLM_MODEL";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4o-mini";

#[derive(Clone)]
pub struct RemoteConfig {
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_output_tokens: usize,
}

impl std::fmt::Debug for RemoteConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteConfig")
            .field("base_url", &self.base_url)
            .field("model", &self.model)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("timeout", &self.timeout)
            .field("max_output_tokens", &self.max_output_tokens)
            .finish()
    }
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.into(),
            model: DEFAULT_MODEL.into(),
            api_key: None,
            timeout: Duration::from_secs(120),
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
        }
    }
}

impl RemoteConfig {
    /// Defaults overridden by the `DIAVGEIA_LLM_*` variables.
    pub fn from_env() -> Self {
        let var = |k: &str| std::env::var(k).ok().map(|v| v.trim().to_string()).filter(|v| !v.is_empty());
        let mut c = Self::default();
        if let Some(base) = var(BASE_URL_ENV) {
            c.base_url = base;
        }
        if let Some(model) = var(MODEL_ENV) {
            c.model = model;
        }
        c.api_key = var(API_KEY_ENV);
        c
    }
}

pub struct RemoteChat {
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl std::fmt::Debug for RemoteChat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteChat").field("config", &self.config).finish_non_exhaustive()
    }
}

fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into()
}

/// POSTs JSON to `{base}/{path}`. Errors name the URL and status, never the key.
fn post_json(agent: &ureq::Agent, config: &RemoteConfig, path: &str, body: &Value) -> Result<ureq::http::Response<ureq::Body>, String> {
    let url = format!("{}/{path}", config.base_url.trim_end_matches('/'));
    let mut req = agent.post(&url).header("Content-Type", "application/json");
    if let Some(key) = &config.api_key {
        req = req.header("Authorization", format!("Bearer {key}"));
    }
    let mut resp = req.send(body.to_string()).map_err(|e| format!("request to {url}: {e}"))?;
    let status = resp.status().as_u16();
    if !(200..300).contains(&status) {
        let text = resp.body_mut().read_to_string().unwrap_or_default();
        let snippet: String = text.chars().take(300).collect();
        return Err(format!("{url} returned {status}: {snippet}"));
    }
    Ok(resp)
}

fn message_content(v: &Value) -> Option<&str> {
    v.pointer("/choices/0/message/content").and_then(Value::as_str)
}

fn delta_content(v: &Value) -> Option<&str> {
    v.pointer("/choices/0/delta/content").and_then(Value::as_str)
}

impl RemoteChat {
    pub fn new(config: RemoteConfig) -> Self {
        Self { agent: agent(config.timeout), config }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn post(&self, body: &Value) -> Result<ureq::http::Response<ureq::Body>, String> {
        post_json(&self.agent, &self.config, "chat/completions", body)
    }

    fn request(&self, messages: Value, extra: Option<(&str, Value)>) -> Value {
        let mut body = json!({
            "model": self.config.model,
            "messages": messages,
            "max_tokens": self.config.max_output_tokens,
        });
        if let Some((k, v)) = extra {
            body[k] = v;
        }
        body
    }

    fn complete_messages(&self, messages: Value, extra: Option<(&str, Value)>) -> Result<String, String> {
        let mut resp = self.post(&self.request(messages, extra))?;
        let v: Value = serde_json::from_str(&resp.body_mut().read_to_string().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        message_content(&v).map(str::to_owned).ok_or_else(|| "reply has no choices[0].message.content".into())
    }

    fn chat_messages(prompt: &Prompt, suffix: Option<&str>) -> Value {
        let user = match suffix {
            Some(s) => format!("{}\n\n{s}", prompt.user_message()),
            None => prompt.user_message(),
        };
        json!([
            {"role": "system", "content": prompt.system},
            {"role": "user", "content": user},
        ])
    }
}

impl ChatModel for RemoteChat {
    fn model(&self) -> &str {
        &self.config.model
    }

    fn complete(&self, prompt: &str) -> Result<String, ModelError> {
        self.complete_messages(json!([{"role": "user", "content": prompt}]), None).map_err(ModelError::Remote)
    }
}

impl Generator for RemoteChat {
    fn name(&self) -> &str {
        &self.config.model
    }

    /// Server-sent events: `data: {json}` lines until `data: [DONE]`.
    fn generate(&self, prompt: &Prompt, on_chunk: &mut dyn FnMut(&str)) -> Result<String, GenerationError> {
        let body = self.request(Self::chat_messages(prompt, None), Some(("stream", json!(true))));
        let resp = self.post(&body).map_err(GenerationError::Failed)?;
        let reader = BufReader::new(resp.into_body().into_reader());
        let mut text = String::new();
        for line in reader.lines() {
            let line = line.map_err(|e| GenerationError::Failed(format!("stream interrupted: {e}")))?;
            let Some(data) = line.strip_prefix("data:").map(str::trim) else { continue };
            if data == "[DONE]" {
                break;
            }
            let v: Value = serde_json::from_str(data).map_err(|e| GenerationError::Failed(format!("bad stream event: {e}")))?;
            if let Some(piece) = delta_content(&v) {
                on_chunk(piece);
                text.push_str(piece);
            }
        }
        Ok(text)
    }

    fn generate_structured_raw(&self, prompt: &Prompt) -> Result<String, GenerationError> {
        let messages = Self::chat_messages(prompt, Some(STRUCTURED_INSTRUCTIONS_V1));
        self.complete_messages(messages, Some(("response_format", json!({"type": "json_object"})))).map_err(GenerationError::Failed)
    }
}

/// Embeddings from an OpenAI-compatible `/embeddings` endpoint. Uses the
/// same base URL and key as [`RemoteChat`]; `config.model` names the
/// embedding model.
pub struct RemoteEncoder {
    config: RemoteConfig,
    dimension: usize,
    agent: ureq::Agent,
}

impl std::fmt::Debug for RemoteEncoder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteEncoder").field("config", &self.config).field("dimension", &self.dimension).finish_non_exhaustive()
    }
}

pub const EMBED_MODEL_ENV: &str = "DIAVGEIA_EMBED_MODEL";
pub const EMBED_DIMENSION_ENV: &str = "DIAVGEIA_EMBED_DIMENSION";
pub const DEFAULT_EMBED_MODEL: &str = "text-embedding-3-small";
pub const DEFAULT_EMBED_DIMENSION: usize = 1536;

impl RemoteEncoder {
    pub fn new(config: RemoteConfig, dimension: usize) -> Self {
        Self { agent: agent(config.timeout), config, dimension }
    }

    /// [`RemoteConfig::from_env`] with the embedding model and dimension
    /// taken from `DIAVGEIA_EMBED_MODEL` / `DIAVGEIA_EMBED_DIMENSION`.
    pub fn from_env() -> Self {
        let var = |k: &str| std::env::var(k).ok().map(|v| v.trim().to_string()).filter(|v| !v.is_empty());
        let mut config = RemoteConfig::from_env();
        config.model = var(EMBED_MODEL_ENV).unwrap_or_else(|| DEFAULT_EMBED_MODEL.into());
        let dimension = var(EMBED_DIMENSION_ENV).and_then(|d| d.parse().ok()).unwrap_or(DEFAULT_EMBED_DIMENSION);
        Self::new(config, dimension)
    }
}

impl Encoder for RemoteEncoder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn encode(&self, text: &str) -> Result<EmbeddingVector, EncodeError> {
        if text.trim().is_empty() {
            return Err(EncodeError::ZeroNorm);
        }
        let body = json!({"model": self.config.model, "input": text});
        let mut resp = post_json(&self.agent, &self.config, "embeddings", &body).map_err(EncodeError::Failed)?;
        let v: Value = serde_json::from_str(&resp.body_mut().read_to_string().map_err(|e| EncodeError::Failed(e.to_string()))?)
            .map_err(|e| EncodeError::Failed(e.to_string()))?;
        let raw: Vec<f64> = v
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| EncodeError::Failed("reply has no data[0].embedding".into()))?
            .iter()
            .map(|x| x.as_f64().unwrap_or(f64::NAN))
            .collect();
        if raw.len() != self.dimension {
            return Err(EncodeError::Dimension { expected: self.dimension, actual: raw.len() });
        }
        EmbeddingVector::normalized(&raw)
    }
}
