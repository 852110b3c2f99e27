//! Corpus engine for public administrative decisions.
//!
//! The crate covers the whole pipeline over a store of published decisions:
//!
//! * [`corpus`]: decision records, identifier validation and the on-disk layout.
//! * [`harvest`]: paged, rate-limited, resumable download from the open-data API.
//! * [`textstats`]: parallel corpus statistics (tokens, characters, sentences, organizations).
//! * [`search`]: Greek analyzer and an in-memory BM25 index with snapshots.
//! * [`embedding`]: encoders, an exact cosine kNN store, distance histograms and k-means.
//! * [`boilerplate`]: template/content segmentation, content swapping and its metrics.
//! * [`model`]: completion-model port and the response replay cache.
//! * [`rag`]: citation-grounded conversational question answering.
//! * [`qaeval`]: automated and manual evaluation of the QA system.

pub mod boilerplate;
pub mod corpus;
pub mod embedding;
pub mod harvest;
pub mod model;
pub mod qaeval;
pub mod rag;
#[cfg(feature = "native")]
pub mod remote;
pub mod search;
pub mod textstats;

pub use corpus::{CorpusLayout, DecisionRecord, DecisionStatus, DocumentSource, StoredDocument};
