//! In-process stand-in for the open-data API, used by tests and demos.
//!
//! Serves `/opendata/search` pages, `/opendata/decisions/{ada}`,
//! `/texts/{ada}` and `/doc/{ada}` from fixed fixtures, counts requests
//! per path and can be told to fail specific requests.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use percent_encoding::percent_decode_str;

use super::client::{ApiConfig, TextSource};

#[derive(Debug, Clone, Default)]
pub struct StubData {
    /// Raw entries of each search page, in page order.
    pub pages: Vec<Vec<serde_json::Value>>,
    pub texts: HashMap<String, String>,
    pub pdfs: HashMap<String, Vec<u8>>,
}

impl StubData {
    /// Splits `entries` into pages of `page_size`.
    pub fn paged(entries: Vec<serde_json::Value>, page_size: usize) -> Self {
        let pages = entries.chunks(page_size.max(1)).map(<[_]>::to_vec).collect();
        Self { pages, ..Default::default() }
    }
}

#[derive(Default)]
struct State {
    data: StubData,
    counts: HashMap<String, u64>,
    page_counts: HashMap<usize, u64>,
    /// Canned `(status, body)` replies consumed before normal routing.
    injected: HashMap<String, VecDeque<(u16, String)>>,
}

pub struct StubApi {
    server: Arc<tiny_http::Server>,
    state: Arc<Mutex<State>>,
    port: u16,
    handle: Option<JoinHandle<()>>,
}

fn query_param<'a>(query: &'a str, key: &str) -> Option<&'a str> {
    query.split('&').find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
}

fn route(state: &State, path: &str, query: &str) -> (u16, Vec<u8>, &'static str) {
    let json = "application/json";
    if path == "/opendata/search" {
        let page: usize = query_param(query, "page").and_then(|p| p.parse().ok()).unwrap_or(0);
        let entries = state.data.pages.get(page).cloned().unwrap_or_default();
        let total: usize = state.data.pages.iter().map(Vec::len).sum();
        let body = serde_json::json!({"info": {"page": page, "total": total}, "decisions": entries});
        return (200, body.to_string().into_bytes(), json);
    }
    let find = |prefix: &str| path.strip_prefix(prefix).map(|a| percent_decode_str(a).decode_utf8_lossy().into_owned());
    if let Some(ada) = find("/opendata/decisions/") {
        let entry = state.data.pages.iter().flatten().find(|e| e.get("ada").and_then(|a| a.as_str()) == Some(ada.as_str()));
        return match entry {
            Some(e) => (200, e.to_string().into_bytes(), json),
            None => (404, b"{}".to_vec(), json),
        };
    }
    if let Some(ada) = find("/texts/") {
        return match state.data.texts.get(&ada) {
            Some(t) => (200, t.clone().into_bytes(), "text/plain; charset=utf-8"),
            None => (404, Vec::new(), "text/plain"),
        };
    }
    if let Some(ada) = find("/doc/") {
        return match state.data.pdfs.get(&ada) {
            Some(p) => (200, p.clone(), "application/pdf"),
            None => (404, Vec::new(), "text/plain"),
        };
    }
    (404, Vec::new(), "text/plain")
}

impl StubApi {
    pub fn start(data: StubData) -> std::io::Result<Self> {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").map_err(std::io::Error::other)?);
        let port = server.server_addr().to_ip().map(|a| a.port()).ok_or_else(|| std::io::Error::other("no TCP address"))?;
        let state = Arc::new(Mutex::new(State { data, ..Default::default() }));
        let (srv, st) = (server.clone(), state.clone());
        let handle = std::thread::spawn(move || {
            for request in srv.incoming_requests() {
                let url = request.url().to_string();
                let (path, query) = url.split_once('?').unwrap_or((&url, ""));
                let decoded = percent_decode_str(path).decode_utf8_lossy().into_owned();
                let (status, body, ctype) = {
                    let mut s = st.lock().unwrap();
                    *s.counts.entry(decoded.clone()).or_default() += 1;
                    if decoded == "/opendata/search" {
                        let page = query_param(query, "page").and_then(|p| p.parse().ok()).unwrap_or(0);
                        *s.page_counts.entry(page).or_default() += 1;
                    }
                    match s.injected.get_mut(&decoded).and_then(VecDeque::pop_front) {
                        Some((status, body)) => (status, body.into_bytes(), "text/plain"),
                        None => route(&s, path, query),
                    }
                };
                let header = tiny_http::Header::from_bytes("Content-Type", ctype).expect("static header");
                let _ = request.respond(tiny_http::Response::from_data(body).with_status_code(status).with_header(header));
            }
        });
        Ok(Self { server, state, port, handle: Some(handle) })
    }

    pub fn base_url(&self) -> String {
        format!("http://127.0.0.1:{}", self.port)
    }

    /// API configuration pointing at this stub, with texts from `/texts/{ada}`.
    pub fn api_config(&self) -> ApiConfig {
        ApiConfig { base_url: self.base_url(), text_source: TextSource::Endpoint("/texts/{ada}".into()), ..ApiConfig::default() }
    }

    /// Requests seen for a decoded path such as `/opendata/search`.
    pub fn count(&self, path: &str) -> u64 {
        self.state.lock().unwrap().counts.get(path).copied().unwrap_or(0)
    }

    /// Requests for one 0-based search page.
    pub fn page_count(&self, page: usize) -> u64 {
        self.state.lock().unwrap().page_counts.get(&page).copied().unwrap_or(0)
    }

    /// All requests served so far.
    pub fn total_requests(&self) -> u64 {
        self.state.lock().unwrap().counts.values().sum()
    }

    /// Queues a reply for the next request to `path` (decoded form).
    pub fn inject(&self, path: &str, status: u16, body: &str) {
        self.state.lock().unwrap().injected.entry(path.to_string()).or_default().push_back((status, body.to_string()));
    }
}

impl Drop for StubApi {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
