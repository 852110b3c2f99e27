use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::amounts::amount_match;
use super::similarity::{semantic_score, tfidf_similarity, DocFreq};
use crate::boilerplate::llm::unfence;
use crate::corpus::{validate_ada, CorpusLayout};
use crate::embedding::Encoder;
use crate::model::ChatModel;
use crate::rag::{AnswerMode, RagService};

pub const QA_PROMPT_V1: &str = include_str!("../../prompts/qa_generate_v1.txt");
pub const DEFAULT_EQUIVALENCE_THRESHOLD: f64 = 70.0;
/// Characters of a document shown to the pair generator.
pub const QA_DOCUMENT_CHARS: usize = 8000;

#[derive(Debug, thiserror::Error)]
pub enum QaEvalError {
    #[error("cannot sample {requested} documents from a corpus of {available}")]
    InvalidSample { requested: usize, available: usize },
    #[error("pair file line {line}: {reason}")]
    BadPairFile { line: usize, reason: String },
    #[error("manual result for {organization}: {reason}")]
    MalformedResult { organization: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaPair {
    pub question: String,
    #[serde(alias = "ground_truth_answer")]
    pub ground_truth: String,
    /// The source decision.
    pub ada: String,
}

impl QaPair {
    pub fn validate(&self) -> Result<(), String> {
        if !validate_ada(&self.ada) {
            return Err(format!("invalid ADA {:?}", self.ada));
        }
        if self.question.trim().is_empty() || self.ground_truth.trim().is_empty() {
            return Err("empty question or answer".into());
        }
        Ok(())
    }
}

/// Reads `{question, ground_truth, ada}` JSON lines; blank lines are skipped.
pub fn read_pairs_jsonl(r: impl BufRead) -> Result<Vec<QaPair>, QaEvalError> {
    let mut pairs = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| QaEvalError::BadPairFile { line: i + 1, reason };
        let pair: QaPair = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        pair.validate().map_err(bad)?;
        pairs.push(pair);
    }
    Ok(pairs)
}

pub fn write_pairs_jsonl(pairs: &[QaPair], mut w: impl Write) -> std::io::Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedDocument {
    pub ada: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct QaGeneration {
    pub pairs: Vec<QaPair>,
    pub skipped: Vec<SkippedDocument>,
}

pub fn render_qa_prompt(ada: &str, document: &str) -> String {
    let doc: String = document.chars().take(QA_DOCUMENT_CHARS).collect();
    QA_PROMPT_V1.replace("{ada}", ada).replace("{document}", &doc)
}

fn parse_qa_reply(raw: &str, ada: &str) -> Result<QaPair, String> {
    #[derive(Deserialize)]
    struct Reply {
        question: String,
        answer: String,
        #[serde(default)]
        ada: Option<String>,
    }
    let r: Reply = serde_json::from_str(unfence(raw)).map_err(|e| e.to_string())?;
    if let Some(claimed) = r.ada.as_deref().map(str::trim).filter(|a| !a.is_empty()) {
        if claimed != ada {
            return Err(format!("reply names ADA {claimed}, expected {ada}"));
        }
    }
    let pair = QaPair { question: r.question.trim().into(), ground_truth: r.answer.trim().into(), ada: ada.into() };
    pair.validate()?;
    Ok(pair)
}

/// One question/answer pair per document of a seeded uniform sample (without
/// replacement, in sampled order). A reply that does not parse is retried
/// once; documents that still fail are reported and skipped.
pub fn generate_qa_pairs(
    layout: &CorpusLayout,
    sample_size: usize,
    model: &dyn ChatModel,
    seed: u64,
) -> Result<QaGeneration, QaEvalError> {
    let adas = layout.list_adas();
    if sample_size > adas.len() {
        return Err(QaEvalError::InvalidSample { requested: sample_size, available: adas.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, adas.len(), sample_size);
    let mut out = QaGeneration::default();
    for i in picked {
        let ada = &adas[i];
        let doc = match layout.load(ada) {
            Ok(d) => d,
            Err(e) => {
                out.skipped.push(SkippedDocument { ada: ada.clone(), reason: e.to_string() });
                continue;
            }
        };
        let prompt = render_qa_prompt(ada, &doc.content());
        let mut last = String::new();
        let mut pair = None;
        for _ in 0..2 {
            match model.complete(&prompt).map_err(|e| e.to_string()).and_then(|raw| parse_qa_reply(&raw, ada)) {
                Ok(p) => {
                    pair = Some(p);
                    break;
                }
                Err(e) => last = e,
            }
        }
        match pair {
            Some(p) => out.pairs.push(p),
            None => out.skipped.push(SkippedDocument { ada: ada.clone(), reason: last }),
        }
    }
    Ok(out)
}

/// Whatever produces an answer for a pair's question.
pub trait AnswerSystem: Sync {
    fn answer(&self, pair: &QaPair) -> Result<String, String>;
}

impl<F: Fn(&QaPair) -> Result<String, String> + Sync> AnswerSystem for F {
    fn answer(&self, pair: &QaPair) -> Result<String, String> {
        self(pair)
    }
}

/// Each question is asked in a fresh session.
impl AnswerSystem for RagService {
    fn answer(&self, pair: &QaPair) -> Result<String, String> {
        let id = self.create_session().map_err(|e| e.to_string())?;
        self.answer(&id, &pair.question, AnswerMode::Streaming, &mut |_| {}).map(|a| a.text).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonScores {
    pub semantic_score: f64,
    pub tfidf_similarity: f64,
    pub amount_match: f64,
    pub equivalent: bool,
}

impl ComparisonScores {
    pub fn compute(answer: &str, truth: &str, encoder: &dyn Encoder, df: &dyn DocFreq, threshold: f64) -> Self {
        let semantic_score = semantic_score(answer, truth, encoder);
        Self {
            semantic_score,
            tfidf_similarity: tfidf_similarity(answer, truth, df),
            amount_match: amount_match(answer, truth),
            equivalent: semantic_score >= threshold,
        }
    }

    fn failed() -> Self {
        Self { semantic_score: 0.0, tfidf_similarity: 0.0, amount_match: 0.0, equivalent: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairEvaluation {
    pub ada: String,
    pub question: String,
    pub answer: String,
    pub scores: ComparisonScores,
    /// Set when the system failed; scores are then zero.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutomatedSummary {
    pub total: usize,
    pub equivalent: usize,
    pub not_equivalent: usize,
    pub failed: usize,
    pub equivalent_pct: f64,
    pub mean_semantic: f64,
    pub mean_tfidf: f64,
    pub mean_amount_match: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutomatedReport {
    pub threshold: f64,
    pub pairs: Vec<PairEvaluation>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn pct(part: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * part as f64 / total as f64
    }
}

/// Threshold as printed in labels: `70`, or `72.5`.
fn threshold_label(t: f64) -> String {
    if t.fract() == 0.0 {
        format!("{t:.0}")
    } else {
        format!("{t}")
    }
}

impl AutomatedReport {
    /// Recomputes equivalence from the stored semantic scores.
    pub fn with_threshold(&self, threshold: f64) -> Self {
        let mut r = self.clone();
        r.threshold = threshold;
        for p in &mut r.pairs {
            p.scores.equivalent = p.error.is_none() && p.scores.semantic_score >= threshold;
        }
        r
    }

    pub fn summary(&self) -> AutomatedSummary {
        let total = self.pairs.len();
        let equivalent = self.pairs.iter().filter(|p| p.scores.equivalent).count();
        AutomatedSummary {
            total,
            equivalent,
            not_equivalent: total - equivalent,
            failed: self.pairs.iter().filter(|p| p.error.is_some()).count(),
            equivalent_pct: pct(equivalent, total),
            mean_semantic: mean(self.pairs.iter().map(|p| p.scores.semantic_score)),
            mean_tfidf: mean(self.pairs.iter().map(|p| p.scores.tfidf_similarity)),
            mean_amount_match: mean(self.pairs.iter().map(|p| p.scores.amount_match)),
        }
    }

    /// Metric/value rows of the summary table.
    pub fn rows(&self) -> Vec<(String, String)> {
        let s = self.summary();
        let t = threshold_label(self.threshold);
        vec![
            ("Total Comparisons".into(), s.total.to_string()),
            (format!("Semantically Equivalent (≥ {t}%)"), format!("{} ({:.1}%)", s.equivalent, s.equivalent_pct)),
            (format!("Not Equivalent (< {t}%)"), format!("{} ({:.1}%)", s.not_equivalent, pct(s.not_equivalent, s.total))),
            ("Average Semantic Score".into(), format!("{:.1}%", s.mean_semantic)),
            ("Average TF-IDF Similarity".into(), format!("{:.1}%", s.mean_tfidf)),
            ("Average Amount Match".into(), format!("{:.1}%", s.mean_amount_match)),
        ]
    }

    pub fn render_table(&self) -> String {
        let rows = self.rows();
        let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0).max("Metric".len());
        let mut out = format!("{:<width$}  Value\n", "Metric");
        for (k, v) in rows {
            let pad = width - k.chars().count();
            out.push_str(&format!("{k}{}  {v}\n", " ".repeat(pad)));
        }
        let failed = self.summary().failed;
        if failed > 0 {
            out.push_str(&format!("({failed} pairs failed and were scored 0)\n"));
        }
        out
    }
}

/// Asks every question, scores the answer against the ground truth and
/// keeps per-pair results in input order.
pub fn evaluate_automated(
    pairs: &[QaPair],
    system: &dyn AnswerSystem,
    encoder: &dyn Encoder,
    df: &(dyn DocFreq + Sync),
    threshold: f64,
) -> AutomatedReport {
    let pairs = pairs
        .par_iter()
        .map(|pair| {
            let (answer, scores, error) = match system.answer(pair) {
                Ok(a) => {
                    let s = ComparisonScores::compute(&a, &pair.ground_truth, encoder, df, threshold);
                    (a, s, None)
                }
                Err(e) => (String::new(), ComparisonScores::failed(), Some(e)),
            };
            PairEvaluation { ada: pair.ada.clone(), question: pair.question.clone(), answer, scores, error }
        })
        .collect();
    AutomatedReport { threshold, pairs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::ReferenceEncoder;
    use crate::qaeval::PairDf;

    fn pairs() -> Vec<QaPair> {
        vec![
            QaPair { question: "Ποιο ποσό;".into(), ground_truth: "Εγκρίθηκε δαπάνη 381,22 €.".into(), ada: "ΨΣ02ΟΕΨΠ-ΛΔΤ".into() },
            QaPair { question: "Ποιος υπογράφει;".into(), ground_truth: "Ο Διευθυντής της υπηρεσίας.".into(), ada: "6Μ6ΨΟΕΨΠ-ΛΗ2".into() },
        ]
    }

    struct Df;
    impl DocFreq for Df {
        fn n_docs(&self) -> u64 {
            100
        }
        fn df(&self, _: &str) -> u64 {
            3
        }
    }

    #[test]
    fn verbatim_and_empty_bounds() {
        let enc = ReferenceEncoder::default();
        let echo = |p: &QaPair| Ok(p.ground_truth.clone());
        let r = evaluate_automated(&pairs(), &echo, &enc, &Df, DEFAULT_EQUIVALENCE_THRESHOLD);
        let s = r.summary();
        assert_eq!((s.equivalent, s.equivalent_pct), (2, 100.0));
        assert!((s.mean_semantic - 100.0).abs() < 1e-6 && (s.mean_tfidf - 100.0).abs() < 1e-9);
        assert_eq!(s.mean_amount_match, 100.0);

        let empty = |_: &QaPair| Ok(String::new());
        let s = evaluate_automated(&pairs(), &empty, &enc, &Df, 70.0).summary();
        assert_eq!((s.equivalent, s.equivalent_pct, s.mean_semantic, s.mean_tfidf), (0, 0.0, 0.0, 0.0));
        // The second truth has no amounts, so an empty answer matches it.
        assert_eq!(s.mean_amount_match, 50.0);
    }

    #[test]
    fn failures_are_flagged() {
        let enc = ReferenceEncoder::default();
        let broken = |p: &QaPair| if p.ada.starts_with('6') { Err("timeout".to_string()) } else { Ok(p.ground_truth.clone()) };
        let r = evaluate_automated(&pairs(), &broken, &enc, &Df, 70.0);
        assert_eq!(r.pairs[1].error.as_deref(), Some("timeout"));
        assert_eq!(r.pairs[1].scores, ComparisonScores::failed());
        let s = r.summary();
        assert_eq!((s.total, s.equivalent, s.failed), (2, 1, 1));
        assert!(r.render_table().contains("1 pairs failed"));
    }

    #[test]
    fn threshold_rederivation() {
        let enc = ReferenceEncoder::default();
        let near = |p: &QaPair| Ok(format!("{} Επιπλέον στοιχεία.", p.ground_truth));
        let r = evaluate_automated(&pairs(), &near, &enc, &PairDf::default(), 70.0);
        let scores: Vec<f64> = r.pairs.iter().map(|p| p.scores.semantic_score).collect();
        for t in [0.0, 50.0, 70.0, 90.0, 100.0] {
            let re = r.with_threshold(t);
            let expected = scores.iter().filter(|&&s| s >= t).count();
            assert_eq!(re.summary().equivalent, expected);
            assert_eq!(re.pairs.iter().map(|p| p.scores.semantic_score).collect::<Vec<_>>(), scores);
        }
        assert_eq!(r.with_threshold(85.0).with_threshold(70.0), r);
    }

    #[test]
    fn table_labels() {
        let r = AutomatedReport { threshold: 70.0, pairs: vec![] };
        let labels: Vec<String> = r.rows().into_iter().map(|(k, _)| k).collect();
        assert_eq!(
            labels,
            [
                "Total Comparisons",
                "Semantically Equivalent (≥ 70%)",
                "Not Equivalent (< 70%)",
                "Average Semantic Score",
                "Average TF-IDF Similarity",
                "Average Amount Match"
            ]
        );
    }

    #[test]
    fn pair_file_round_trip() {
        let mut buf = Vec::new();
        write_pairs_jsonl(&pairs(), &mut buf).unwrap();
        assert_eq!(read_pairs_jsonl(&buf[..]).unwrap(), pairs());
        let alias = r#"{"question":"q","ground_truth_answer":"a","ada":"ΨΣ02ΟΕΨΠ-ΛΔΤ"}"#;
        assert_eq!(read_pairs_jsonl(alias.as_bytes()).unwrap()[0].ground_truth, "a");
        let bad = "\n{\"question\":\"q\",\"ground_truth\":\"a\",\"ada\":\"nope\"}";
        assert!(matches!(read_pairs_jsonl(bad.as_bytes()), Err(QaEvalError::BadPairFile { line: 2, .. })));
    }

    #[test]
    fn qa_reply_parsing() {
        let ok = r#"```json
{"question": "Ποιο ποσό;", "answer": "381,22 €", "ada": "ΨΣ02ΟΕΨΠ-ΛΔΤ"}
```"#;
        assert_eq!(parse_qa_reply(ok, "ΨΣ02ΟΕΨΠ-ΛΔΤ").unwrap().ground_truth, "381,22 €");
        assert!(parse_qa_reply(ok, "6Μ6ΨΟΕΨΠ-ΛΗ2").is_err());
        assert!(parse_qa_reply(r#"{"question": "", "answer": "x"}"#, "ΨΣ02ΟΕΨΠ-ΛΔΤ").is_err());
        assert!(render_qa_prompt("ΨΣ02ΟΕΨΠ-ΛΔΤ", "κείμενο").contains("ΨΣ02ΟΕΨΠ-ΛΔΤ"));
    }
}
