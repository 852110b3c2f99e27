//! Paged, rate-limited and resumable download of decisions from the
//! open-data API into a corpus store.

mod client;
mod clock;
#[cfg(feature = "native")]
pub mod stub;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use client::{
    fetch_body, fetch_decision_page, fetch_document_text, parse_decision_page, ApiConfig, DecisionPage, ExtractorCommand,
    HttpResponse, PageQuery, SkippedEntry, TextSource, Transport, API_BASE_ENV, DEFAULT_API_BASE,
};
#[cfg(feature = "native")]
pub use client::UreqTransport;
pub use clock::{Clock, FakeClock, SystemClock, TokenBucket};

use crate::corpus::{write_atomic, CorpusLayout, StoreError};

pub const DEFAULT_RPS: f64 = 2.0;
pub const DEFAULT_PAGE_SIZE: u32 = 100;
pub const MAX_ATTEMPTS: u32 = 3;
/// First retry waits about this long; each further retry doubles it.
pub const BASE_BACKOFF: Duration = Duration::from_millis(500);

#[derive(Debug, thiserror::Error)]
pub enum HarvestError {
    #[error("HTTP {status} from {url}")]
    Http { status: u16, url: String },
    #[error("rate limited by {url}")]
    RateLimited { url: String },
    #[error("unparseable response: {0}")]
    Parse(String),
    #[error("decision {0} not found")]
    NotFound(String),
    #[error("extraction with {tool} failed: {detail}")]
    ExtractionFailed { tool: String, detail: String },
    #[error("transport: {0}")]
    Transport(String),
    #[error("invalid harvest job: {0}")]
    InvalidJob(String),
    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl HarvestError {
    /// Errors worth another attempt.
    pub fn is_transient(&self) -> bool {
        match self {
            Self::RateLimited { .. } | Self::Transport(_) => true,
            Self::Http { status, .. } => *status >= 500,
            _ => false,
        }
    }

    /// Short class name recorded in checkpoints.
    pub fn class(&self) -> &'static str {
        match self {
            Self::Http { .. } => "http",
            Self::RateLimited { .. } => "rate_limited",
            Self::Parse(_) => "parse",
            Self::NotFound(_) => "not_found",
            Self::ExtractionFailed { .. } => "extraction_failed",
            Self::Transport(_) => "transport",
            Self::InvalidJob(_) => "invalid_job",
            Self::Checkpoint { .. } => "checkpoint",
            Self::Store(_) => "store",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarvestJob {
    pub date_from: NaiveDate,
    pub date_to: NaiveDate,
    pub organization: Option<String>,
    pub page_size: u32,
    /// Maximum requests per second across all workers.
    pub rate_limit: f64,
    pub checkpoint_path: PathBuf,
    /// Continue from an existing checkpoint instead of starting over.
    pub resume: bool,
    /// In-flight document requests.
    pub concurrency: usize,
    /// Stop after this many pages in this run.
    pub max_pages: Option<u64>,
    /// Seed for retry jitter.
    pub seed: u64,
}

impl HarvestJob {
    pub fn new(date_from: NaiveDate, date_to: NaiveDate, checkpoint_path: impl Into<PathBuf>) -> Self {
        Self {
            date_from,
            date_to,
            organization: None,
            page_size: DEFAULT_PAGE_SIZE,
            rate_limit: DEFAULT_RPS,
            checkpoint_path: checkpoint_path.into(),
            resume: false,
            concurrency: 1,
            max_pages: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), HarvestError> {
        if self.date_from > self.date_to {
            return Err(HarvestError::InvalidJob(format!("{} is after {}", self.date_from, self.date_to)));
        }
        if !(self.rate_limit > 0.0 && self.rate_limit.is_finite()) {
            return Err(HarvestError::InvalidJob(format!("rate limit {} must be positive", self.rate_limit)));
        }
        if self.page_size == 0 {
            return Err(HarvestError::InvalidJob("page size must be positive".into()));
        }
        if self.concurrency == 0 {
            return Err(HarvestError::InvalidJob("concurrency must be positive".into()));
        }
        Ok(())
    }

    /// Identifies the query a checkpoint belongs to.
    fn key(&self) -> String {
        format!("{}..{} org={} size={}", self.date_from, self.date_to, self.organization.as_deref().unwrap_or("*"), self.page_size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarvestFailure {
    pub page: u64,
    /// `None` for page-level failures.
    pub ada: Option<String>,
    pub class: String,
    pub message: String,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarvestCheckpoint {
    pub job: String,
    /// 0-based index of the last fully processed page.
    pub last_completed_page: Option<u64>,
    pub fetched_adas: u64,
    /// Entries skipped as malformed.
    pub skipped: u64,
    pub failures: Vec<HarvestFailure>,
    /// The last page has been seen.
    pub complete: bool,
}

impl HarvestCheckpoint {
    fn fresh(job: &HarvestJob) -> Self {
        Self { job: job.key(), last_completed_page: None, fetched_adas: 0, skipped: 0, failures: Vec::new(), complete: false }
    }

    pub fn load(path: &Path) -> Result<Option<Self>, HarvestError> {
        let err = |reason: String| HarvestError::Checkpoint { path: path.to_path_buf(), reason };
        match fs::read(path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map(Some).map_err(|e| err(e.to_string())),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(err(e.to_string())),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), HarvestError> {
        let err = |reason: String| HarvestError::Checkpoint { path: path.to_path_buf(), reason };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| err(e.to_string()))?;
        }
        let json = serde_json::to_vec_pretty(self).map_err(|e| err(e.to_string()))?;
        write_atomic(path, &json).map_err(|e| err(e.to_string()))
    }

    pub fn next_page(&self) -> u64 {
        self.last_completed_page.map_or(0, |p| p + 1)
    }
}

/// Shared request machinery: every request takes a token and transient
/// failures are retried with jittered exponential backoff.
struct Requester<'a> {
    transport: &'a dyn Transport,
    clock: &'a dyn Clock,
    bucket: TokenBucket,
    rng: Mutex<ChaCha8Rng>,
}

impl Requester<'_> {
    fn call<T>(&self, mut op: impl FnMut(&dyn Transport) -> Result<T, HarvestError>) -> (Result<T, HarvestError>, u32) {
        let mut attempt = 1;
        loop {
            self.bucket.acquire(self.clock);
            match op(self.transport) {
                Err(e) if e.is_transient() && attempt < MAX_ATTEMPTS => {
                    let base = BASE_BACKOFF * 2u32.pow(attempt - 1);
                    let jitter = base.mul_f64(self.rng.lock().unwrap().random::<f64>());
                    self.clock.sleep_until(self.clock.now() + base + jitter);
                    attempt += 1;
                }
                other => return (other, attempt),
            }
        }
    }
}

/// Harvests every page of `job` into `layout`, checkpointing after each
/// page. Only checkpoint I/O is fatal; other failures are recorded.
pub fn run_harvest(
    job: &HarvestJob,
    api: &ApiConfig,
    layout: &CorpusLayout,
    transport: &dyn Transport,
    clock: &dyn Clock,
) -> Result<HarvestCheckpoint, HarvestError> {
    job.validate()?;
    let mut checkpoint = match HarvestCheckpoint::load(&job.checkpoint_path)? {
        Some(cp) if job.resume => {
            if cp.job != job.key() {
                return Err(HarvestError::InvalidJob(format!("checkpoint belongs to {:?}, not {:?}", cp.job, job.key())));
            }
            cp
        }
        _ => HarvestCheckpoint::fresh(job),
    };
    let requester = Requester {
        transport,
        clock,
        bucket: TokenBucket::starting_after(job.rate_limit, clock.now()),
        rng: Mutex::new(ChaCha8Rng::seed_from_u64(job.seed)),
    };
    let query = PageQuery { from: job.date_from, to: job.date_to, organization: job.organization.as_deref(), page_size: job.page_size };

    let mut pages_this_run = 0;
    while !checkpoint.complete && job.max_pages.is_none_or(|m| pages_this_run < m) {
        let page_no = checkpoint.next_page();
        let (page, attempts) = requester.call(|t| fetch_decision_page(t, api, &query, page_no));
        let page = match page {
            Ok(p) => p,
            Err(e) => {
                log::warn!("page {page_no} failed after {attempts} attempts: {e}");
                checkpoint.failures.push(HarvestFailure {
                    page: page_no,
                    ada: None,
                    class: e.class().into(),
                    message: e.to_string(),
                    attempts,
                });
                checkpoint.save(&job.checkpoint_path)?;
                break;
            }
        };
        for skip in &page.skipped {
            log::warn!("page {page_no} entry {} skipped: {}", skip.index, skip.reason);
        }

        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<(usize, Result<(), HarvestError>, u32)>> = Mutex::new(Vec::new());
        std::thread::scope(|s| {
            for _ in 0..job.concurrency.min(page.records.len()) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(record) = page.records.get(i) else { break };
                    let (doc, attempts) = requester.call(|t| fetch_body(t, api, record.clone()));
                    let outcome = doc.and_then(|d| layout.store(&d).map(|_| ()).map_err(HarvestError::from));
                    results.lock().unwrap().push((i, outcome, attempts));
                });
            }
        });
        let mut results = results.into_inner().unwrap();
        results.sort_by_key(|r| r.0);
        for (i, outcome, attempts) in results {
            match outcome {
                Ok(()) => checkpoint.fetched_adas += 1,
                Err(e) => checkpoint.failures.push(HarvestFailure {
                    page: page_no,
                    ada: Some(page.records[i].ada.clone()),
                    class: e.class().into(),
                    message: e.to_string(),
                    attempts,
                }),
            }
        }
        checkpoint.skipped += page.skipped.len() as u64;
        checkpoint.last_completed_page = Some(page_no);
        checkpoint.complete = page.entries < job.page_size as usize;
        checkpoint.save(&job.checkpoint_path)?;
        pages_this_run += 1;
    }
    Ok(checkpoint)
}
