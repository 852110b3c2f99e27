//! Evaluation of the question-answering system: automated scoring of
//! generated question/answer pairs and the manual aggregation protocol.

mod amounts;
mod automated;
mod manual;
mod similarity;

pub use amounts::{amount_match, extract_amounts, Amount};
pub use automated::{
    evaluate_automated, generate_qa_pairs, read_pairs_jsonl, render_qa_prompt, write_pairs_jsonl, AnswerSystem, AutomatedReport,
    AutomatedSummary, ComparisonScores, PairEvaluation, QaEvalError, QaGeneration, QaPair, SkippedDocument,
    DEFAULT_EQUIVALENCE_THRESHOLD, QA_PROMPT_V1,
};
pub use manual::{
    load_manual_results, score_manual, verify_aggregation_fixtures, AggregationCheck, AggregationReport, ManualEntry, ManualOrgResult,
    ManualQuestion, ManualSummary, Verdict, VerdictCounts, MANUAL_FIXTURE, REPORTED_MANUAL_ACCURACY,
};
pub use similarity::{semantic_score, tfidf_similarity, DocFreq, PairDf};
