//! Boilerplate segmentation and classification over embedding neighborhoods,
//! the swap/reconstruction evaluation, and the cluster prevalence study.

mod baseline;
pub mod llm;
mod metrics;
mod prevalence;
mod segmentation;
mod swap;

pub use baseline::{baseline_segment, BaselineClassifier, BaselineSegmenter, DEFAULT_MIN_RUN, DEFAULT_M_FRAC};
pub use metrics::{boilerplate_extraction_rate, reconstruction_error, word_levenshtein, BerScores};
pub use prevalence::{prevalence_study, write_centroid_csv, CentroidRow, PrevalenceResult, TextLookup, CLASSIFICATION_THRESHOLD};
pub use segmentation::{extract_parts, tokenize_words, Classifier, ExtractedParts, Segmentation, Segmenter, Span, SpanLabel};
pub use swap::{
    run_swap_evaluation, swap_reconstruct, MeanStd, PairDocument, SwapAggregate, SwapEvalResult, SwapFailure, SwapPair, SwapReport,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoilerplateError {
    #[error("segmentation covers {actual} words but the document has {expected}")]
    Mismatch { expected: usize, actual: usize },
    #[error("invalid spans: {0}")]
    InvalidSpans(String),
    #[error("at least one neighbor is required")]
    NoNeighbors,
    #[error("remote model error: {0}")]
    Remote(String),
    #[error("unparseable model response ({reason})")]
    UnparseableResponse { reason: String, raw: String },
}
