//! Lexical retrieval: Greek analyzer, BM25 inverted index, binary snapshots.

pub mod analyzer;
pub mod bm25;
pub mod snapshot;

pub use analyzer::{analyze_greek, fold, stem};
pub use bm25::{Bm25Params, IndexStats, IndexedDoc, SearchError, SearchHit, SearchIndex, DEFAULT_EXCERPT_CHARS};
pub use snapshot::{load_snapshot, read_snapshot, save_snapshot, write_snapshot, SnapshotError};
