#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use diavgeia_core::corpus::{CorpusLayout, DecisionRecord, DocumentSource, StoredDocument};
use serde_json::json;

pub const FIXTURE_DOCS: usize = 60;

const LETTERS: [char; 16] = ['Α', 'Β', 'Γ', 'Δ', 'Ε', 'Ζ', 'Η', 'Θ', 'Ι', 'Κ', 'Λ', 'Μ', 'Ν', 'Ξ', 'Ο', 'Π'];

pub fn ada(i: usize) -> String {
    let l = |n: usize| LETTERS[n % LETTERS.len()];
    format!("{}{}{}{}469ΗΥΖ-{}{}{}", l(i), l(i / 16), l(i / 256), i % 10, l(i + 3), l(i / 4 + 1), i % 7)
}

const ORGS: [(&str, &str); 4] = [
    ("6001", "ΔΗΜΟΣ ΘΗΡΑΣ"),
    ("6002", "Δ.Ε.Υ.Α ΘΗΡΑΣ"),
    ("6003", "ΠΕΡ.ΓΕΝ. ΝΟΣΟΚΟΜΕΙΟ ΑΘΗΝΩΝ (ΛΑΙΚΟ)"),
    ("6004", "ΚΡΑΤΙΚΗ ΣΧΟΛΗ ΟΡΧΗΣΤΙΚΗΣ ΤΕΧΝΗΣ"),
];

const ITEMS: [&str; 6] = [
    "προμήθεια καυσίμων κίνησης",
    "συντήρηση ανελκυστήρων",
    "προμήθεια γραφικής ύλης",
    "υπηρεσίες καθαριότητας κτιρίων",
    "επισκευή δικτύου ύδρευσης",
    "προμήθεια φαρμάκων",
];

const SUPPLIERS: [&str; 5] = ["ΑΦΟΙ ΠΑΠΑΔΟΠΟΥΛΟΙ Ο.Ε.", "ΤΕΧΝΙΚΗ ΑΙΓΑΙΟΥ Α.Ε.", "ΚΑΘΑΡΑ ΚΤΙΡΙΑ Ε.Π.Ε.", "ΦΑΡΜΑΚΑΠΟΘΗΚΗ ΝΟΤΟΥ", "ΓΡΑΦΙΚΑ ΝΗΣΩΝ"];

pub fn amount(i: usize) -> String {
    let cents = 10_000 + (i * 7_919) % 900_000;
    let int = (cents / 100).to_string();
    let mut grouped = String::new();
    for (k, c) in int.chars().enumerate() {
        if k > 0 && (int.len() - k) % 3 == 0 {
            grouped.push('.');
        }
        grouped.push(c);
    }
    format!("{grouped},{:02}", cents % 100)
}

pub fn body(i: usize) -> String {
    let (_, org) = ORGS[i % ORGS.len()];
    let item = ITEMS[i % ITEMS.len()];
    let supplier = SUPPLIERS[i % SUPPLIERS.len()];
    let amount = amount(i);
    match i % 3 {
        0 => format!(
            "ΑΠΟΦΑΣΗ ΑΝΑΛΗΨΗΣ ΥΠΟΧΡΕΩΣΗΣ\n\nΟ Διατάκτης του φορέα {org}, έχοντας υπόψη τις διατάξεις του ν. 4270/2014 \
             και του π.δ. 80/2016 για την ανάληψη υποχρεώσεων από τους διατάκτες,\n\nΑΠΟΦΑΣΙΖΟΥΜΕ\n\n\
             Την ανάληψη υποχρέωσης ποσού {amount} € για {item} από την εταιρεία {supplier}, \
             σε βάρος του προϋπολογισμού οικονομικού έτους 2024.\n\nΗ απόφαση να αναρτηθεί στο διαδίκτυο."
        ),
        1 => format!(
            "ΑΠΟΦΑΣΗ ΑΠΕΥΘΕΙΑΣ ΑΝΑΘΕΣΗΣ\n\nΈχοντας υπόψη τις διατάξεις του ν. 4412/2016 περί δημοσίων συμβάσεων \
             και την ανάγκη του φορέα {org},\n\nΑναθέτουμε απευθείας την υπηρεσία {item} στον οικονομικό φορέα \
             {supplier} αντί του ποσού των {amount} ευρώ συμπεριλαμβανομένου ΦΠΑ.\n\n\
             Η δαπάνη θα βαρύνει τον οικείο κωδικό του προϋπολογισμού."
        ),
        _ => format!(
            "ΕΓΚΡΙΣΗ ΔΑΠΑΝΗΣ ΚΑΙ ΔΙΑΘΕΣΗ ΠΙΣΤΩΣΗΣ\n\nΤο Διοικητικό Συμβούλιο του φορέα {org}, σύμφωνα με τις διατάξεις \
             του ν. 3852/2010, αφού έλαβε υπόψη την εισήγηση της υπηρεσίας,\n\nΑποφασίζει ομόφωνα\n\n\
             Εγκρίνει δαπάνη ύψους {amount} € για {item} και διαθέτει την αντίστοιχη πίστωση προς {supplier}."
        ),
    }
}

pub fn record(i: usize) -> DecisionRecord {
    let (org_id, org_name) = ORGS[i % ORGS.len()];
    let day = 86_400_000i64;
    let issue = 1_704_067_200_000 + (i as i64 % 300) * day;
    let decision_type = ["Β.1.3", "Δ.1", "Β.2.1"][i % 3];
    serde_json::from_value(json!({
        "ada": ada(i),
        "protocolNumber": format!("{}/2024", 1000 + i),
        "subject": format!("{} ({})", ITEMS[i % ITEMS.len()], org_name),
        "issueDate": issue,
        "decisionTypeId": decision_type,
        "organizationId": org_id,
        "organizationName": org_name,
        "unitIds": [format!("{}", 80_000 + i % 4)],
        "signerIds": [format!("{}", 100_000 + i % 5)],
        "extraFieldValues": {"amountWithVAT": {"amount": amount(i), "currency": "EUR"}},
        "submissionTimestamp": issue + 3_600_000,
        "status": "PUBLISHED",
        "versionId": format!("v{i}"),
    }))
    .unwrap()
}

pub fn document(i: usize) -> StoredDocument {
    let record = record(i);
    let stored_at = record.submission_timestamp;
    StoredDocument { record, body_markdown: body(i), source: DocumentSource::PreextractedText, extraction_tool: "fixture".into(), stored_at }
}

/// Writes the fixture corpus under `dir/corpus` and returns that path.
pub fn write_corpus(dir: &Path) -> PathBuf {
    let root = dir.join("corpus");
    let layout = CorpusLayout::new(&root);
    for i in 0..FIXTURE_DOCS {
        layout.store(&document(i)).unwrap();
    }
    root
}

/// Runs the built binary with `args` in `dir`, with no `DIAVGEIA_*`
/// variables from the outer environment.
pub fn diavgeia(dir: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_diavgeia"));
    for (k, _) in std::env::vars() {
        if k.starts_with("DIAVGEIA_") {
            cmd.env_remove(k);
        }
    }
    cmd.current_dir(dir).args(args).output().unwrap()
}

pub fn json_of(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}
