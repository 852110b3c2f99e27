#![allow(dead_code)]

use diavgeia_core::corpus::{DecisionRecord, DocumentSource, StoredDocument};
use serde_json::json;

const ADA_CHARS: [char; 20] = ['Α', 'Β', 'Γ', 'Δ', 'Ε', 'Ζ', 'Η', 'Θ', 'Ι', 'Κ', 'Λ', 'Μ', 'Ν', 'Ξ', 'Ο', 'Π', 'Ρ', 'Σ', 'Τ', 'Ψ'];

/// Deterministic valid ADA for index `i`: 10 characters, dash, 3 characters.
pub fn ada(i: usize) -> String {
    let mut n = i;
    let mut head = String::new();
    for _ in 0..6 {
        head.push(ADA_CHARS[n % 20]);
        n /= 20;
    }
    format!("{head}ΟΕ{:02}-{}{}{}", i % 100, ADA_CHARS[i % 7], ADA_CHARS[(i / 7) % 20], char::from(b'0' + (i % 10) as u8))
}

pub const DAY_MS: i64 = 86_400_000;
/// 2021-01-01T00:00:00Z
pub const JAN_2021_MS: i64 = 1_609_459_200_000;

pub fn api_entry(i: usize) -> serde_json::Value {
    json!({
        "ada": ada(i),
        "protocolNumber": format!("{}/2021", 100 + i),
        "subject": format!("Έγκριση δαπάνης αριθμός {i}"),
        "issueDate": JAN_2021_MS + (i as i64 % 365) * DAY_MS,
        "decisionTypeId": "Β.2.1",
        "organizationId": format!("{}", 6000 + i % 5),
        "unitIds": ["81234"],
        "signerIds": [format!("{}", 100_000 + i % 3)],
        "extraFieldValues": {"amountWithVAT": {"amount": 100.5 + i as f64, "currency": "EUR"}},
        "submissionTimestamp": JAN_2021_MS + (i as i64 % 365) * DAY_MS + 3_600_000,
        "status": "PUBLISHED",
        "versionId": format!("v-{i}"),
        "url": format!("https://example.invalid/decision/{}", ada(i))
    })
}

pub fn body_text(i: usize) -> String {
    format!(
        "ΑΠΟΦΑΣΗ\nΟ Δήμαρχος έχοντας υπόψη τις διατάξεις του ν. 3852/2010.\nΕγκρίνει τη δαπάνη ποσού {},00 € για την προμήθεια υλικών αριθμός {i}.",
        1000 + i
    )
}

pub fn stored_doc(i: usize, body: String) -> StoredDocument {
    let record: DecisionRecord = serde_json::from_value(api_entry(i)).unwrap();
    let stored_at = record.submission_timestamp;
    StoredDocument { record, body_markdown: body, source: DocumentSource::PreextractedText, extraction_tool: "fixture".into(), stored_at }
}
