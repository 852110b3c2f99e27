use std::path::PathBuf;
use std::process::Command;

use chrono::NaiveDate;
use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};

use super::HarvestError;
use crate::corpus::{validate_ada, DecisionRecord, DocumentSource, StoredDocument};

/// Environment variable overriding [`ApiConfig::base_url`].
pub const API_BASE_ENV: &str = "DIAVGEIA_API_BASE";
pub const DEFAULT_API_BASE: &str = "https://diavgeia.gov.gr";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

/// Blocking GET. Non-2xx statuses are responses, not errors.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<HttpResponse, String>;
}

#[cfg(feature = "native")]
pub struct UreqTransport {
    agent: ureq::Agent,
}

#[cfg(feature = "native")]
impl UreqTransport {
    pub fn new(timeout: std::time::Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .user_agent(concat!("diavgeia-harvester/", env!("CARGO_PKG_VERSION")))
            .build()
            .into();
        Self { agent }
    }
}

#[cfg(feature = "native")]
impl Transport for UreqTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, String> {
        let mut resp = self.agent.get(url).call().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().with_config().limit(256 * 1024 * 1024).read_to_vec().map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// External PDF-to-text command. `{input}` in `args` is replaced by the
/// downloaded PDF's path; the text is read from stdout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorCommand {
    pub program: String,
    pub args: Vec<String>,
}

impl ExtractorCommand {
    pub fn tool_name(&self) -> String {
        std::path::Path::new(&self.program).file_name().map_or_else(|| self.program.clone(), |n| n.to_string_lossy().into_owned())
    }
}

/// Where decision bodies come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextSource {
    /// GET `{base}{template}` with `{ada}` substituted; the reply is the text.
    Endpoint(String),
    /// `<dir>/<ada>.txt` or `<dir>/<ada>.md` on disk.
    Directory(PathBuf),
    /// GET the PDF at `{base}{template}` and run the extractor on it.
    Pdf { template: String, extractor: ExtractorCommand },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiConfig {
    pub base_url: String,
    pub search_path: String,
    /// Decision metadata, `{ada}` substituted.
    pub decision_path: String,
    pub text_source: TextSource,
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_API_BASE.into(),
            search_path: "/opendata/search".into(),
            decision_path: "/opendata/decisions/{ada}".into(),
            text_source: TextSource::Pdf {
                template: "/doc/{ada}".into(),
                extractor: ExtractorCommand { program: "pdftotext".into(), args: vec!["-layout".into(), "{input}".into(), "-".into()] },
            },
        }
    }
}

impl ApiConfig {
    /// Applies the base URL override from the environment, if set.
    pub fn with_env_override(mut self) -> Self {
        if let Ok(base) = std::env::var(API_BASE_ENV) {
            if !base.trim().is_empty() {
                self.base_url = base.trim().to_string();
            }
        }
        self
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base_url.trim_end_matches('/'), path)
    }

    fn ada_url(&self, template: &str, ada: &str) -> String {
        self.url(&template.replace("{ada}", &utf8_percent_encode(ada, NON_ALPHANUMERIC).to_string()))
    }

    pub fn search_url(&self, from: NaiveDate, to: NaiveDate, org: Option<&str>, page: u64, size: u32) -> String {
        let mut url = format!(
            "{}?from_issue_date={}&to_issue_date={}&page={page}&size={size}",
            self.url(&self.search_path),
            from.format("%Y-%m-%d"),
            to.format("%Y-%m-%d"),
        );
        if let Some(org) = org {
            url.push_str("&org=");
            url.push_str(&utf8_percent_encode(org, NON_ALPHANUMERIC).to_string());
        }
        url
    }

    pub fn decision_url(&self, ada: &str) -> String {
        self.ada_url(&self.decision_path, ada)
    }
}

/// A page entry that could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedEntry {
    pub index: usize,
    pub ada: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecisionPage {
    pub records: Vec<DecisionRecord>,
    pub skipped: Vec<SkippedEntry>,
    /// Entries on the page, valid or not.
    pub entries: usize,
}

fn check_status(resp: &HttpResponse, url: &str) -> Result<(), HarvestError> {
    match resp.status {
        200..=299 => Ok(()),
        429 => Err(HarvestError::RateLimited { url: url.into() }),
        status => Err(HarvestError::Http { status, url: url.into() }),
    }
}

fn parse_record(value: serde_json::Value) -> Result<DecisionRecord, String> {
    let record: DecisionRecord = serde_json::from_value(value).map_err(|e| e.to_string())?;
    record.validate().map_err(|e| e.to_string())?;
    Ok(record)
}

/// Parses a search page body: `{"decisions": [...]}`. Bad entries are
/// skipped and reported.
pub fn parse_decision_page(body: &[u8]) -> Result<DecisionPage, HarvestError> {
    #[derive(Deserialize)]
    struct Page {
        decisions: Vec<serde_json::Value>,
    }
    let page: Page = serde_json::from_slice(body).map_err(|e| HarvestError::Parse(e.to_string()))?;
    let mut out = DecisionPage { entries: page.decisions.len(), ..Default::default() };
    for (index, entry) in page.decisions.into_iter().enumerate() {
        let ada = entry.get("ada").and_then(|a| a.as_str()).map(str::to_owned);
        match parse_record(entry) {
            Ok(r) => out.records.push(r),
            Err(reason) => out.skipped.push(SkippedEntry { index, ada, reason }),
        }
    }
    Ok(out)
}

/// Search parameters shared by every page of a harvest.
#[derive(Debug, Clone, PartialEq)]
pub struct PageQuery<'a> {
    pub from: NaiveDate,
    pub to: NaiveDate,
    pub organization: Option<&'a str>,
    pub page_size: u32,
}

pub fn fetch_decision_page(
    transport: &dyn Transport,
    api: &ApiConfig,
    query: &PageQuery<'_>,
    page: u64,
) -> Result<DecisionPage, HarvestError> {
    let url = api.search_url(query.from, query.to, query.organization, page, query.page_size);
    let resp = transport.get(&url).map_err(HarvestError::Transport)?;
    check_status(&resp, &url)?;
    parse_decision_page(&resp.body)
}

fn get_ok(transport: &dyn Transport, url: &str, ada: &str) -> Result<Vec<u8>, HarvestError> {
    let resp = transport.get(url).map_err(HarvestError::Transport)?;
    if resp.status == 404 {
        return Err(HarvestError::NotFound(ada.into()));
    }
    check_status(&resp, url)?;
    Ok(resp.body)
}

fn run_extractor(cmd: &ExtractorCommand, pdf: &[u8], ada: &str) -> Result<String, HarvestError> {
    use std::sync::atomic::{AtomicU64, Ordering};
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let failed = |detail: String| HarvestError::ExtractionFailed { tool: cmd.tool_name(), detail };
    let name = format!(
        "diavgeia-{}-{}-{}.pdf",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed),
        utf8_percent_encode(ada, NON_ALPHANUMERIC)
    );
    let input = std::env::temp_dir().join(name);
    std::fs::write(&input, pdf).map_err(|e| failed(format!("writing {}: {e}", input.display())))?;
    let args: Vec<String> = cmd.args.iter().map(|a| a.replace("{input}", &input.to_string_lossy())).collect();
    let output = Command::new(&cmd.program).args(&args).output();
    let _ = std::fs::remove_file(&input);
    let output = output.map_err(|e| failed(format!("spawn: {e}")))?;
    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        return Err(failed(format!("{}: {}", output.status, stderr.trim())));
    }
    String::from_utf8(output.stdout).map_err(|e| failed(format!("non-UTF-8 output: {e}")))
}

/// Obtains the body for an already known record.
pub fn fetch_body(
    transport: &dyn Transport,
    api: &ApiConfig,
    record: DecisionRecord,
) -> Result<StoredDocument, HarvestError> {
    let ada = record.ada.clone();
    let (body, source, tool) = match &api.text_source {
        TextSource::Endpoint(template) => {
            let bytes = get_ok(transport, &api.ada_url(template, &ada), &ada)?;
            let text = String::from_utf8(bytes).map_err(|e| HarvestError::Parse(format!("text of {ada}: {e}")))?;
            (text, DocumentSource::PreextractedText, "preextracted".to_string())
        }
        TextSource::Directory(dir) => {
            let text = ["txt", "md"]
                .iter()
                .find_map(|ext| std::fs::read_to_string(dir.join(format!("{ada}.{ext}"))).ok())
                .ok_or_else(|| HarvestError::NotFound(ada.clone()))?;
            (text, DocumentSource::PreextractedText, "preextracted".to_string())
        }
        TextSource::Pdf { template, extractor } => {
            let pdf = get_ok(transport, &api.ada_url(template, &ada), &ada)?;
            (run_extractor(extractor, &pdf, &ada)?, DocumentSource::ApiJsonPlusPdf, extractor.tool_name())
        }
    };
    // Stored time follows the record, so re-harvesting writes identical bytes.
    let stored_at = record.submission_timestamp;
    Ok(StoredDocument { record, body_markdown: body, source, extraction_tool: tool, stored_at })
}

/// Fetches a decision's metadata and then its body.
pub fn fetch_document_text(transport: &dyn Transport, api: &ApiConfig, ada: &str) -> Result<StoredDocument, HarvestError> {
    if !validate_ada(ada) {
        return Err(HarvestError::InvalidJob(format!("invalid ADA {ada:?}")));
    }
    let url = api.decision_url(ada);
    let body = get_ok(transport, &url, ada)?;
    let value: serde_json::Value = serde_json::from_slice(&body).map_err(|e| HarvestError::Parse(e.to_string()))?;
    let record = parse_record(value).map_err(HarvestError::Parse)?;
    fetch_body(transport, api, record)
}
