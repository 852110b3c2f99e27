use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::amounts::{extract_amounts, Amount};
use super::automated::QaEvalError;

/// Verdicts of the manual aggregation study, as published.
pub const MANUAL_FIXTURE: &str = include_str!("../../fixtures/manual_eval.json");
/// Overall accuracy printed next to the published verdict counts.
pub const REPORTED_MANUAL_ACCURACY: f64 = 85.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Full,
    Partial,
    Incorrect,
}

/// The four standard organization-level questions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManualQuestion {
    CountList,
    TotalAmount,
    Signers,
    Topics,
}

impl ManualQuestion {
    pub const ALL: [ManualQuestion; 4] = [Self::CountList, Self::TotalAmount, Self::Signers, Self::Topics];

    pub fn label(self) -> &'static str {
        match self {
            Self::CountList => "Count & List",
            Self::TotalAmount => "Total Amount",
            Self::Signers => "Signers",
            Self::Topics => "Topics",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManualEntry {
    pub question: ManualQuestion,
    pub verdict: Verdict,
    #[serde(default)]
    pub ground_truth: String,
    #[serde(default)]
    pub response: String,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManualOrgResult {
    pub organization: String,
    #[serde(default)]
    pub decisions: usize,
    pub entries: Vec<ManualEntry>,
}

impl ManualOrgResult {
    /// Exactly one entry per standard question.
    pub fn validate(&self) -> Result<(), QaEvalError> {
        let bad = |reason: String| QaEvalError::MalformedResult { organization: self.organization.clone(), reason };
        if self.entries.len() != 4 {
            return Err(bad(format!("expected 4 verdicts, found {}", self.entries.len())));
        }
        for q in ManualQuestion::ALL {
            if !self.entries.iter().any(|e| e.question == q) {
                return Err(bad(format!("no verdict for {}", q.label())));
            }
        }
        Ok(())
    }
}

pub fn load_manual_results(json: &str) -> Result<Vec<ManualOrgResult>, serde_json::Error> {
    serde_json::from_str(json)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct VerdictCounts {
    pub full: usize,
    pub partial: usize,
    pub incorrect: usize,
}

impl VerdictCounts {
    pub fn total(&self) -> usize {
        self.full + self.partial + self.incorrect
    }

    /// (full + 0.5 · partial) / total × 100.
    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            return 0.0;
        }
        100.0 * (self.full as f64 + 0.5 * self.partial as f64) / self.total() as f64
    }

    fn add(&mut self, v: Verdict) {
        match v {
            Verdict::Full => self.full += 1,
            Verdict::Partial => self.partial += 1,
            Verdict::Incorrect => self.incorrect += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManualSummary {
    pub organizations: usize,
    pub overall: VerdictCounts,
    pub accuracy: f64,
    pub per_question: BTreeMap<ManualQuestion, VerdictCounts>,
    /// Per organization: (full + 0.5 · partial) out of 4.
    pub per_organization: Vec<(String, f64)>,
}

impl ManualSummary {
    pub fn render_table(&self) -> String {
        let o = &self.overall;
        let total = o.total();
        let share = |n: usize| if total == 0 { 0.0 } else { 100.0 * n as f64 / total as f64 };
        let mut out = String::from("Metric             Result   Notes\n");
        out.push_str(&format!("Total Questions    {:<8} 4 questions × {} organizations\n", total, self.organizations));
        out.push_str(&format!("Fully Correct      {:<8} {:.1}%\n", o.full, share(o.full)));
        out.push_str(&format!("Partially Correct  {:<8} {:.1}%\n", o.partial, share(o.partial)));
        out.push_str(&format!("Incorrect          {:<8} {:.1}%\n", o.incorrect, share(o.incorrect)));
        out.push_str(&format!("Overall Accuracy   {:<8} (Fully + 0.5×Partially)\n", format!("{:.1}%", self.accuracy)));
        out
    }

    /// A footnote when a separately reported accuracy disagrees with the
    /// one computed from the verdicts.
    pub fn discrepancy(&self, reported: f64) -> Option<String> {
        ((self.accuracy - reported).abs() > 1e-9).then(|| {
            format!(
                "* Reported overall accuracy {reported:.1}% does not follow from the verdict counts: ({} + 0.5 × {}) / {} = {:.1}%.",
                self.overall.full,
                self.overall.partial,
                self.overall.total(),
                self.accuracy
            )
        })
    }
}

pub fn score_manual(results: &[ManualOrgResult]) -> Result<ManualSummary, QaEvalError> {
    let mut overall = VerdictCounts::default();
    let mut per_question: BTreeMap<ManualQuestion, VerdictCounts> = BTreeMap::new();
    let mut per_organization = Vec::new();
    for r in results {
        r.validate()?;
        let mut org = VerdictCounts::default();
        for e in &r.entries {
            overall.add(e.verdict);
            org.add(e.verdict);
            per_question.entry(e.question).or_default().add(e.verdict);
        }
        per_organization.push((r.organization.clone(), org.full as f64 + 0.5 * org.partial as f64));
    }
    Ok(ManualSummary { organizations: results.len(), accuracy: overall.accuracy(), overall, per_question, per_organization })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregationCheck {
    pub name: String,
    pub expected: String,
    pub computed: String,
    pub matches: bool,
    pub abs_error: f64,
    /// Computed value as a percentage of the expected one.
    pub ratio_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregationReport {
    pub checks: Vec<AggregationCheck>,
}

impl AggregationReport {
    pub fn mismatches(&self) -> Vec<&AggregationCheck> {
        self.checks.iter().filter(|c| !c.matches).collect()
    }

    pub fn render(&self) -> String {
        self.checks
            .iter()
            .map(|c| {
                let status = if c.matches { "ok" } else { "MISMATCH" };
                let mut line = format!("{status:<8} {}: expected {}, computed {}", c.name, c.expected, c.computed);
                if !c.matches {
                    line.push_str(&format!(" (abs error {}", c.abs_error));
                    if let Some(r) = c.ratio_pct {
                        line.push_str(&format!(", {r:.1}% of expected"));
                    }
                    line.push(')');
                }
                line
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn amount_check(name: String, expected: Amount, computed: Amount) -> AggregationCheck {
    let diff = (computed - expected).cents().abs();
    AggregationCheck {
        name,
        expected: format!("{expected} €"),
        computed: format!("{computed} €"),
        matches: diff == 0,
        abs_error: diff as f64 / 100.0,
        ratio_pct: (expected.cents() != 0).then(|| 100.0 * computed.cents() as f64 / expected.cents() as f64),
    }
}

/// Re-checks the arithmetic recorded in the manual study fixture: every
/// total-amount answer against its ground truth, a written-out breakdown
/// against its own stated sum, and the overall accuracy against the
/// verdict counts.
pub fn verify_aggregation_fixtures() -> AggregationReport {
    let results = load_manual_results(MANUAL_FIXTURE).expect("bundled fixture parses");
    let mut checks = Vec::new();
    for r in &results {
        let Some(e) = r.entries.iter().find(|e| e.question == ManualQuestion::TotalAmount) else { continue };
        let truth = extract_amounts(&e.ground_truth);
        let response = extract_amounts(&e.response);
        let (Some(&expected), Some(&stated)) = (truth.last(), response.last()) else { continue };
        if response.len() > 1 {
            let parts: Amount = response[..response.len() - 1].iter().copied().sum();
            checks.push(amount_check(format!("{}: breakdown sum", r.organization), stated, parts));
        }
        checks.push(amount_check(format!("{}: total amount", r.organization), expected, stated));
    }
    let summary = score_manual(&results).expect("bundled fixture is well formed");
    let diff = summary.accuracy - REPORTED_MANUAL_ACCURACY;
    checks.push(AggregationCheck {
        name: format!(
            "overall accuracy ({} full + 0.5 × {} partial) / {}",
            summary.overall.full,
            summary.overall.partial,
            summary.overall.total()
        ),
        expected: format!("{REPORTED_MANUAL_ACCURACY:.1}%"),
        computed: format!("{:.1}%", summary.accuracy),
        matches: diff.abs() < 1e-9,
        abs_error: diff.abs(),
        ratio_pct: None,
    });
    AggregationReport { checks }
}
