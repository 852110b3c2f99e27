//! Decision records and the on-disk corpus store.
//!
//! Every decision is stored as two sibling files under a shard directory:
//! `<shard>/<encoded-ada>.json` holds the metadata (field names as published
//! by the open-data API) and `<shard>/<encoded-ada>.md` holds the extracted
//! Markdown body. The shard is the first two hex digits of the SHA-256 of the
//! ADA, which bounds directory fan-out at 256.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

/// Everything except ASCII alphanumerics and `-` is percent-encoded in file names.
const FILE_NAME_SET: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-');

const ADA_CLASS: &str = "[Α-ΩA-Z0-9]";

fn ada_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(&format!("^{ADA_CLASS}{{8,12}}-{ADA_CLASS}{{3}}$")).unwrap())
}

fn ada_candidate_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(&format!("{ADA_CLASS}+-{ADA_CLASS}+")).unwrap())
}

/// Returns true iff `candidate` is a well-formed ADA (web posting number).
///
/// Accepted: 8 to 12 characters from Greek capitals, Latin capitals and
/// digits, a hyphen, then exactly three characters from the same class.
/// Latin lookalikes are accepted because source PDFs mix scripts.
pub fn validate_ada(candidate: &str) -> bool {
    ada_regex().is_match(candidate)
}

/// All well-formed ADAs in `text`, de-duplicated, in order of first appearance.
///
/// Candidates are maximal runs of ADA characters joined by a hyphen, so an
/// identifier glued to further capitals or digits is rejected rather than
/// truncated.
pub fn find_adas(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for m in ada_candidate_regex().find_iter(text) {
        let s = m.as_str();
        if validate_ada(s) && !out.iter().any(|seen| seen == s) {
            out.push(s.to_string());
        }
    }
    out
}

/// Publication status of a decision. Unknown strings are kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DecisionStatus {
    Published,
    PendingRevocation,
    Revoked,
    Submitted,
    Other(String),
}

impl DecisionStatus {
    pub fn parse(raw: &str) -> Self {
        match raw {
            "PUBLISHED" => Self::Published,
            "PENDING_REVOCATION" => Self::PendingRevocation,
            "REVOKED" => Self::Revoked,
            "SUBMITTED" => Self::Submitted,
            other => Self::Other(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Self::Published => "PUBLISHED",
            Self::PendingRevocation => "PENDING_REVOCATION",
            Self::Revoked => "REVOKED",
            Self::Submitted => "SUBMITTED",
            Self::Other(raw) => raw,
        }
    }
}

impl fmt::Display for DecisionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for DecisionStatus {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for DecisionStatus {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Ok(Self::parse(&raw))
    }
}

/// Normalized metadata of one administrative act.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DecisionRecord {
    pub ada: String,
    #[serde(default)]
    pub protocol_number: String,
    #[serde(default)]
    pub subject: String,
    /// Unix milliseconds.
    pub issue_date: i64,
    #[serde(default)]
    pub decision_type_id: String,
    #[serde(default)]
    pub organization_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub organization_name: Option<String>,
    #[serde(default)]
    pub unit_ids: Vec<String>,
    #[serde(default)]
    pub signer_ids: Vec<String>,
    #[serde(default)]
    pub extra_field_values: BTreeMap<String, serde_json::Value>,
    /// Unix milliseconds of the last modification.
    pub submission_timestamp: i64,
    pub status: DecisionStatus,
    #[serde(default)]
    pub version_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    #[error("invalid ADA {0:?}")]
    InvalidAda(String),
    #[error("negative timestamp in field {0}")]
    NegativeTimestamp(&'static str),
}

impl DecisionRecord {
    /// A record with the given ADA and every other field empty.
    pub fn minimal(ada: impl Into<String>) -> Self {
        Self {
            ada: ada.into(),
            protocol_number: String::new(),
            subject: String::new(),
            issue_date: 0,
            decision_type_id: String::new(),
            organization_id: String::new(),
            organization_name: None,
            unit_ids: Vec::new(),
            signer_ids: Vec::new(),
            extra_field_values: BTreeMap::new(),
            submission_timestamp: 0,
            status: DecisionStatus::Published,
            version_id: String::new(),
        }
    }

    pub fn validate(&self) -> Result<(), RecordError> {
        if !validate_ada(&self.ada) {
            return Err(RecordError::InvalidAda(self.ada.clone()));
        }
        if self.issue_date < 0 {
            return Err(RecordError::NegativeTimestamp("issueDate"));
        }
        if self.submission_timestamp < 0 {
            return Err(RecordError::NegativeTimestamp("submissionTimestamp"));
        }
        Ok(())
    }

    /// Organization label used for display: the name when known, else the id.
    pub fn organization_label(&self) -> &str {
        self.organization_name.as_deref().unwrap_or(&self.organization_id)
    }
}

/// Formats Unix milliseconds as ISO-8601 UTC with second precision.
pub fn format_timestamp_ms(ms: i64) -> String {
    match chrono::DateTime::from_timestamp_millis(ms) {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        None => format!("{ms}ms"),
    }
}

fn header_value(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Line-oriented `Key: value` header describing a record.
///
/// Field order is fixed (ADA, protocol, issue date, subject, organization,
/// signers, then every extra field in key order). Values are collapsed onto a
/// single line so the header never contains a blank line.
pub fn render_metadata_header(record: &DecisionRecord) -> String {
    let mut lines = vec![
        format!("ADA: {}", header_value(&record.ada)),
        format!("Protocol: {}", header_value(&record.protocol_number)),
        format!("Issue date: {}", format_timestamp_ms(record.issue_date)),
        format!("Subject: {}", header_value(&record.subject)),
    ];
    let org = match &record.organization_name {
        Some(name) => format!("{} ({})", header_value(name), header_value(&record.organization_id)),
        None => header_value(&record.organization_id),
    };
    lines.push(format!("Organization: {org}"));
    lines.push(format!("Signers: {}", header_value(&record.signer_ids.join(", "))));
    for (key, value) in &record.extra_field_values {
        let rendered = match value {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        lines.push(format!("{}: {}", header_value(key), header_value(&rendered)));
    }
    lines.join("\n")
}

/// How the body text was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DocumentSource {
    ApiJsonPlusPdf,
    PreextractedText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Provenance {
    pub source: DocumentSource,
    pub extraction_tool: String,
    /// Unix milliseconds.
    pub stored_at: i64,
}

/// A decision with its extracted body: the unit of the corpus store.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredDocument {
    pub record: DecisionRecord,
    pub body_markdown: String,
    pub source: DocumentSource,
    pub extraction_tool: String,
    /// Unix milliseconds.
    pub stored_at: i64,
}

impl StoredDocument {
    /// Header followed by a blank line and the body: the indexed "content".
    pub fn content(&self) -> String {
        format!("{}\n\n{}", render_metadata_header(&self.record), self.body_markdown)
    }
}

#[derive(Serialize, Deserialize)]
struct MetadataFile {
    #[serde(flatten)]
    record: DecisionRecord,
    provenance: Provenance,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("no stored document for ADA {0}")]
    NotFound(String),
    #[error("corrupt record at {path}: {reason}")]
    CorruptRecord { path: PathBuf, reason: String },
    #[error("invalid document: {0}")]
    Invalid(String),
    #[error("i/o error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// Root directory of a corpus store plus the ADA → path mapping.
#[derive(Debug, Clone)]
pub struct CorpusLayout {
    root: PathBuf,
}

impl CorpusLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Relative path (without extension) of an ADA's files.
    pub fn shard_path(ada: &str) -> PathBuf {
        let digest = Sha256::digest(ada.as_bytes());
        let shard = format!("{:02x}", digest[0]);
        let name = utf8_percent_encode(ada, FILE_NAME_SET).to_string();
        PathBuf::from(shard).join(name)
    }

    pub fn metadata_path(&self, ada: &str) -> PathBuf {
        self.root.join(Self::shard_path(ada)).with_extension("json")
    }

    pub fn body_path(&self, ada: &str) -> PathBuf {
        self.root.join(Self::shard_path(ada)).with_extension("md")
    }

    /// Writes the metadata and body files; returns the metadata path.
    ///
    /// Each file is written to a temporary sibling and renamed into place, so
    /// concurrent writers of the same ADA resolve to last-writer-wins.
    pub fn store(&self, doc: &StoredDocument) -> Result<PathBuf, StoreError> {
        doc.record.validate().map_err(|e| StoreError::Invalid(e.to_string()))?;
        if doc.body_markdown.contains('\0') {
            return Err(StoreError::Invalid("body contains NUL bytes".into()));
        }
        let meta_path = self.metadata_path(&doc.record.ada);
        let body_path = self.body_path(&doc.record.ada);
        let dir = meta_path.parent().expect("shard path has a parent");
        fs::create_dir_all(dir).map_err(io_err(dir))?;

        let file = MetadataFile {
            record: doc.record.clone(),
            provenance: Provenance {
                source: doc.source,
                extraction_tool: doc.extraction_tool.clone(),
                stored_at: doc.stored_at,
            },
        };
        let mut json = serde_json::to_vec_pretty(&file).expect("metadata serializes");
        json.push(b'\n');
        write_atomic(&body_path, doc.body_markdown.as_bytes())?;
        write_atomic(&meta_path, &json)?;
        Ok(meta_path)
    }

    pub fn load(&self, ada: &str) -> Result<StoredDocument, StoreError> {
        let meta_path = self.metadata_path(ada);
        if !meta_path.exists() {
            return Err(StoreError::NotFound(ada.to_string()));
        }
        let doc = self.load_metadata_file(&meta_path)?;
        if doc.record.ada != ada {
            return Err(StoreError::CorruptRecord {
                path: meta_path,
                reason: format!("file holds ADA {}", doc.record.ada),
            });
        }
        Ok(doc)
    }

    /// Loads a document from the path of its metadata file.
    pub fn load_metadata_file(&self, meta_path: &Path) -> Result<StoredDocument, StoreError> {
        let raw = fs::read(meta_path).map_err(io_err(meta_path))?;
        let corrupt = |reason: String| StoreError::CorruptRecord { path: meta_path.to_path_buf(), reason };
        let file: MetadataFile = serde_json::from_slice(&raw).map_err(|e| corrupt(e.to_string()))?;
        file.record.validate().map_err(|e| corrupt(e.to_string()))?;
        let body_path = meta_path.with_extension("md");
        let body = match fs::read(&body_path) {
            Ok(bytes) => String::from_utf8(bytes).map_err(|_| corrupt("body is not UTF-8".into()))?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(StoreError::Io { path: body_path, source: e }),
        };
        Ok(StoredDocument {
            record: file.record,
            body_markdown: body,
            source: file.provenance.source,
            extraction_tool: file.provenance.extraction_tool,
            stored_at: file.provenance.stored_at,
        })
    }

    /// Every metadata file under the root, sorted by path.
    pub fn metadata_files(&self) -> Vec<PathBuf> {
        let mut files: Vec<PathBuf> = walkdir::WalkDir::new(&self.root)
            .min_depth(2)
            .max_depth(2)
            .into_iter()
            .filter_map(Result::ok)
            .filter(|e| e.file_type().is_file())
            .map(|e| e.into_path())
            .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
            .collect();
        files.sort();
        files
    }

    /// ADAs of all stored documents, sorted.
    pub fn list_adas(&self) -> Vec<String> {
        let mut adas: Vec<String> = self
            .metadata_files()
            .iter()
            .filter_map(|p| p.file_stem()?.to_str().map(str::to_owned))
            .filter_map(|stem| percent_decode_str(&stem).decode_utf8().ok().map(|s| s.into_owned()))
            .collect();
        adas.sort();
        adas
    }

    /// Loads every stored document, sorted by ADA, with per-file errors
    /// returned separately.
    pub fn load_all(&self) -> (Vec<StoredDocument>, Vec<StoreError>) {
        let mut docs = Vec::new();
        let mut errors = Vec::new();
        for path in self.metadata_files() {
            match self.load_metadata_file(&path) {
                Ok(doc) => docs.push(doc),
                Err(e) => errors.push(e),
            }
        }
        docs.sort_by(|a, b| a.record.ada.cmp(&b.record.ada));
        (docs, errors)
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    static COUNTER: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
    let n = COUNTER.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    let file_name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.{}.{n}.tmp", std::process::id()));
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}
