//! Settings shared by the subcommands.
//!
//! Each setting can come from a TOML file (`--config`), a `DIAVGEIA_*`
//! environment variable or a command-line flag; later sources win. Unset
//! settings take the defaults listed in [`SETTINGS`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EncoderChoice {
    /// Built-in trigram projection, no network.
    Reference,
    /// OpenAI-compatible `/embeddings` endpoint.
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorChoice {
    /// Quotes the top retrieved decision; no model involved.
    Extractive,
    /// OpenAI-compatible chat endpoint, streamed.
    Remote,
    /// Answers served from the replay cache only.
    Replay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LlmChoice {
    /// Remote endpoint, responses recorded into the replay cache.
    Remote,
    /// Replay cache only; a miss is an error.
    Replay,
}

fn parse_choice<T: clap::ValueEnum>(s: &str) -> Result<T, String> {
    T::from_str(s.trim(), true)
}

macro_rules! impl_from_str {
    ($($t:ty),*) => {$(
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                parse_choice(s)
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let v = clap::ValueEnum::to_possible_value(self).expect("no skipped variants");
                f.write_str(v.get_name())
            }
        }
    )*};
}

impl_from_str!(EncoderChoice, GeneratorChoice, LlmChoice);

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

macro_rules! settings {
    ($( $(#[doc = $doc:literal])* $field:ident : $ty:ty = $default:expr, $env:literal, $shown:literal; )*) => {
        /// One source of settings; `None` leaves the setting to earlier sources.
        #[derive(Debug, Clone, Default, PartialEq, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct ConfigLayer {
            $( $(#[doc = $doc])* pub $field: Option<$ty>, )*
        }

        /// Fully resolved settings.
        #[derive(Debug, Clone, PartialEq, Serialize)]
        pub struct Config {
            $( $(#[doc = $doc])* pub $field: $ty, )*
        }

        impl ConfigLayer {
            /// `over` wins wherever it sets a value.
            pub fn merge(self, over: ConfigLayer) -> ConfigLayer {
                ConfigLayer { $( $field: over.$field.or(self.$field), )* }
            }

            /// Reads the `DIAVGEIA_*` variables through `get`.
            pub fn from_env(get: impl Fn(&str) -> Option<String>) -> anyhow::Result<ConfigLayer> {
                let mut layer = ConfigLayer::default();
                $(
                    if let Some(raw) = get($env).filter(|v| !v.trim().is_empty()) {
                        layer.$field = Some(
                            <$ty as FromStr>::from_str(raw.trim()).map_err(|e| anyhow!("{}={raw:?}: {e}", $env))?,
                        );
                    }
                )*
                Ok(layer)
            }

            pub fn resolve(self) -> Config {
                Config { $( $field: self.$field.unwrap_or_else(|| $default), )* }
            }
        }

        /// `(key, environment variable, default)` for every setting.
        pub const SETTINGS: &[(&str, &str, &str)] = &[ $( (stringify!($field), $env, $shown), )* ];
    };
}

settings! {
    /// Corpus store directory.
    corpus: PathBuf = PathBuf::from("corpus"), "DIAVGEIA_CORPUS", "corpus";
    /// BM25 index snapshot.
    index: PathBuf = PathBuf::from("index.dvbm"), "DIAVGEIA_INDEX", "index.dvbm";
    /// Embedding vector store.
    vectors: PathBuf = PathBuf::from("vectors.dvec"), "DIAVGEIA_VECTORS", "vectors.dvec";
    /// Chat session directory.
    sessions: PathBuf = PathBuf::from("sessions"), "DIAVGEIA_SESSIONS", "sessions";
    /// Model response replay cache.
    replay_dir: PathBuf = PathBuf::from("replay"), "DIAVGEIA_REPLAY_DIR", "replay";
    encoder: EncoderChoice = EncoderChoice::Reference, "DIAVGEIA_ENCODER", "reference";
    generator: GeneratorChoice = GeneratorChoice::Extractive, "DIAVGEIA_GENERATOR", "extractive";
    /// Completion model for boilerplate stages and QA pair generation.
    llm: LlmChoice = LlmChoice::Replay, "DIAVGEIA_LLM", "replay";
    host: String = "127.0.0.1".into(), "DIAVGEIA_HOST", "127.0.0.1";
    port: u16 = 8080, "DIAVGEIA_PORT", "8080";
    /// Harvest requests per second.
    rps: f64 = diavgeia_core::harvest::DEFAULT_RPS, "DIAVGEIA_RPS", "2";
    page_size: u32 = diavgeia_core::harvest::DEFAULT_PAGE_SIZE, "DIAVGEIA_PAGE_SIZE", "100";
    /// Worker threads for corpus statistics.
    workers: usize = default_workers(), "DIAVGEIA_WORKERS", "available cores";
    /// Retrieved decisions per question.
    k: usize = diavgeia_core::rag::DEFAULT_K, "DIAVGEIA_K", "8";
    /// Past messages used for retrieval and prompting.
    history_turns: usize = diavgeia_core::rag::DEFAULT_HISTORY_TURNS, "DIAVGEIA_HISTORY_TURNS", "5";
    max_output_tokens: usize = diavgeia_core::rag::DEFAULT_MAX_OUTPUT_TOKENS, "DIAVGEIA_MAX_OUTPUT_TOKENS", "1500";
    /// Embedding neighbors handed to segmenters and classifiers.
    neighbors: usize = diavgeia_core::embedding::DEFAULT_TOP_N, "DIAVGEIA_NEIGHBORS", "10";
    seed: u64 = 42, "DIAVGEIA_SEED", "42";
    /// Semantic score counted as equivalent.
    threshold: f64 = diavgeia_core::qaeval::DEFAULT_EQUIVALENCE_THRESHOLD, "DIAVGEIA_THRESHOLD", "70";
}

impl ConfigLayer {
    pub fn from_toml(text: &str) -> anyhow::Result<ConfigLayer> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> anyhow::Result<ConfigLayer> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// file < environment < flags.
pub fn load(file: Option<&Path>, env: impl Fn(&str) -> Option<String>, flags: ConfigLayer) -> anyhow::Result<Config> {
    let base = match file {
        Some(p) => ConfigLayer::from_file(p)?,
        None => ConfigLayer::default(),
    };
    Ok(base.merge(ConfigLayer::from_env(env)?).merge(flags).resolve())
}
