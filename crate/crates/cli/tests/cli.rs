mod common;

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Stdio};

use common::{ada, diavgeia, json_of, write_corpus, FIXTURE_DOCS};
use diavgeia_core::corpus::CorpusLayout;
use diavgeia_core::harvest::stub::{StubApi, StubData};
use diavgeia_core::model::ReplayCache;
use diavgeia_core::qaeval::render_qa_prompt;
use diavgeia_core::remote::DEFAULT_MODEL;
use serde_json::{json, Value};

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path());
    dir
}

fn run_json(dir: &Path, args: &[&str]) -> Value {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    json_of(&diavgeia(dir, &full))
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = diavgeia(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(diavgeia(dir.path(), &["stats", "--workers", "many"]).status.code(), Some(2));
    assert_eq!(diavgeia(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_1_with_structured_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = diavgeia(dir.path(), &["--format", "json", "stats", "--corpus", "missing"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].as_str().unwrap().contains("missing"));

    std::fs::write(dir.path().join("bad.toml"), "colour = \"blue\"\n").unwrap();
    let out = diavgeia(dir.path(), &["--config", "bad.toml", "eval", "fixtures"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn stats_is_worker_independent() {
    let dir = setup();
    let one = run_json(dir.path(), &["stats", "--corpus", "corpus", "--workers", "1"]);
    let four = run_json(dir.path(), &["stats", "--corpus", "corpus", "--workers", "4"]);
    assert_eq!(one, four);
    assert_eq!(one["n_docs"], FIXTURE_DOCS);
    assert_eq!(one["org_histogram"].as_object().unwrap().len(), 4);
    let table = diavgeia(dir.path(), &["stats", "--corpus", "corpus"]);
    assert!(table.status.success());
}

#[test]
fn index_build_and_search() {
    let dir = setup();
    let built = run_json(dir.path(), &["index", "build", "--corpus", "corpus", "--out", "idx.dvbm"]);
    assert_eq!(built["documents"], FIXTURE_DOCS);
    let hits = run_json(dir.path(), &["index", "search", "--index", "idx.dvbm", "--query", "ανελκυστήρων", "-k", "3"]);
    let hits = hits.as_array().unwrap();
    assert_eq!(hits.len(), 3);
    // Item 1 of 6 is elevator maintenance.
    let elevator: Vec<String> = (0..FIXTURE_DOCS).filter(|i| i % 6 == 1).map(ada).collect();
    for h in hits {
        assert!(elevator.contains(&h["ada"].as_str().unwrap().to_string()), "{h}");
    }
    let scores: Vec<f64> = hits.iter().map(|h| h["score"].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn settings_precedence_end_to_end() {
    let dir = setup();
    run_json(dir.path(), &["index", "build", "--corpus", "corpus", "--out", "idx.dvbm"]);
    std::fs::write(dir.path().join("s.toml"), "index = \"idx.dvbm\"\nk = 2\n").unwrap();
    let count = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_diavgeia"));
        cmd.current_dir(dir.path()).env_remove("DIAVGEIA_K");
        if let Some(v) = env {
            cmd.env("DIAVGEIA_K", v);
        }
        cmd.args(["--format", "json", "--config", "s.toml", "index", "search", "--query", "προμήθεια"]);
        if let Some(v) = flag {
            cmd.args(["-k", v]);
        }
        let out = cmd.output().unwrap();
        json_of(&out).as_array().unwrap().len()
    };
    assert_eq!(count(None, None), 2);
    assert_eq!(count(Some("3"), None), 3);
    assert_eq!(count(Some("3"), Some("4")), 4);
    assert_eq!(count(None, Some("5")), 5);
}

#[test]
fn embeddings_clusters_and_histogram() {
    let dir = setup();
    let e = run_json(dir.path(), &["embed", "--corpus", "corpus", "--out", "v.dvec"]);
    assert_eq!((e["documents"].as_u64(), e["dimension"].as_u64()), (Some(FIXTURE_DOCS as u64), Some(128)));
    let c = run_json(dir.path(), &["cluster", "--vectors", "v.dvec", "-k", "3", "--seed", "7"]);
    let sizes: u64 = c["clusters"].as_array().unwrap().iter().map(|c| c["size"].as_u64().unwrap()).sum();
    assert_eq!(sizes, FIXTURE_DOCS as u64);
    assert_eq!(c, run_json(dir.path(), &["cluster", "--vectors", "v.dvec", "-k", "3", "--seed", "7"]));
    let h = run_json(dir.path(), &["disthist", "--vectors", "v.dvec", "--sample", "20", "--bins", "10"]);
    let total: u64 = h["histogram"]["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(total, 190);
    let out = diavgeia(dir.path(), &["disthist", "--vectors", "v.dvec", "--sample", "61"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn boilerplate_commands() {
    let dir = setup();
    run_json(dir.path(), &["embed", "--corpus", "corpus", "--out", "v.dvec"]);
    let base = ["--corpus", "corpus", "--vectors", "v.dvec", "--neighbors", "4"];

    let mut args = vec!["boiler", "segment", "--ada"];
    let first = ada(0);
    args.push(&first);
    args.extend_from_slice(&base);
    let seg = run_json(dir.path(), &args);
    assert_eq!(seg["ada"], first.as_str());
    let spans = seg["spans"].as_array().unwrap();
    assert!(spans.iter().any(|s| s["label"] == "BP"), "{seg}");
    assert!(spans.iter().any(|s| s["label"] == "CT"), "{seg}");

    let pairs: String = (0..5)
        .map(|p| json!({"pair_id": format!("p{p}"), "ada_a": ada(3 * p), "ada_b": ada(3 * p + 6)}).to_string() + "\n")
        .collect();
    std::fs::write(dir.path().join("pairs.jsonl"), pairs).unwrap();
    let mut args = vec!["boiler", "swap-eval", "--pairs", "pairs.jsonl"];
    args.extend_from_slice(&base);
    let report = run_json(dir.path(), &args);
    assert_eq!(report["results"].as_array().unwrap().len(), 5);
    assert!(report["failures"].as_array().unwrap().is_empty());
    let re = report["aggregate"]["re"]["mean"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&re), "{re}");

    let mut args = vec!["boiler", "prevalence", "--k", "2,3", "--csv", "centroids.csv", "--seed", "1"];
    args.extend_from_slice(&base);
    let prev = run_json(dir.path(), &args);
    assert_eq!(prev["2"]["rows"].as_array().unwrap().len(), 2);
    assert_eq!(prev["3"]["classified"], 3);
    let csv = std::fs::read_to_string(dir.path().join("centroids.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 + 3);

    // Without a recorded response the model-backed method fails cleanly.
    let mut args = vec!["boiler", "segment", "--ada", &first, "--method", "llm"];
    args.extend_from_slice(&base);
    assert_eq!(diavgeia(dir.path(), &args).status.code(), Some(1));
}

#[test]
fn harvest_from_stub_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let entries: Vec<Value> = (0..12).map(|i| serde_json::to_value(common::record(i)).unwrap()).collect();
    let mut data = StubData::paged(entries, 5);
    data.texts = (0..12).map(|i| (ada(i), common::body(i))).collect();
    let stub = StubApi::start(data).unwrap();
    let harvest = |extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_diavgeia"));
        cmd.current_dir(dir.path()).env("DIAVGEIA_API_BASE", stub.base_url());
        cmd.args(["--format", "json", "harvest", "--from", "2024-01-01", "--to", "2024-12-31", "--out", "h"]);
        cmd.args(["--rps", "200", "--page-size", "5", "--text-source", "endpoint:/texts/{ada}"]);
        cmd.args(extra);
        json_of(&cmd.output().unwrap())
    };
    let partial = harvest(&["--max-pages", "1"]);
    assert_eq!(partial["complete"], false);
    let done = harvest(&["--resume"]);
    assert_eq!(done["complete"], true);
    assert_eq!(done["fetched_adas"], 12);
    for page in 0..3 {
        assert_eq!(stub.page_count(page), 1, "page {page}");
    }
    assert_eq!(CorpusLayout::new(dir.path().join("h")).list_adas().len(), 12);
}

#[test]
fn ask_keeps_the_conversation() {
    let dir = setup();
    let first = run_json(dir.path(), &["ask", "--corpus", "corpus", "--question", "Ποιο ποσό για συντήρηση ανελκυστήρων;"]);
    let session = first["session_id"].as_str().unwrap().to_string();
    assert!(!first["cited_adas"].as_array().unwrap().is_empty());
    assert_eq!(first["ungrounded_citations"], json!([]));
    let second = run_json(dir.path(), &["ask", "--corpus", "corpus", "--session", &session, "--question", "Και ποιος ο ανάδοχος;"]);
    assert_eq!(second["session_turns"], 4);
    let structured =
        run_json(dir.path(), &["ask", "--corpus", "corpus", "--session", &session, "--mode", "structured", "--question", "Προμήθεια φαρμάκων;"]);
    assert!(structured["structured"]["citations"].as_array().is_some_and(|c| !c.is_empty()));
    let text = diavgeia(dir.path(), &["ask", "--corpus", "corpus", "--question", "καυσίμων"]);
    assert!(String::from_utf8_lossy(&text.stdout).contains("Session: "));
}

#[test]
fn qa_evaluation_commands() {
    let dir = setup();
    let layout = CorpusLayout::new(dir.path().join("corpus"));
    let cache = ReplayCache::new(dir.path().join("replay"));
    for a in layout.list_adas() {
        let doc = layout.load(&a).unwrap();
        let reply = json!({"question": format!("Ποιο ποσό αφορά η απόφαση {a};"), "answer": doc.body_markdown.lines().last().unwrap(), "ada": a});
        cache.put(DEFAULT_MODEL, &render_qa_prompt(&a, &doc.content()), &reply.to_string()).unwrap();
    }
    let generated = run_json(dir.path(), &["eval", "generate", "--corpus", "corpus", "--sample", "10", "--out", "pairs.jsonl"]);
    assert_eq!(generated["pairs"], 10);
    let report = run_json(dir.path(), &["eval", "auto", "--pairs", "pairs.jsonl", "--corpus", "corpus", "--report", "r.json"]);
    assert_eq!(report["summary"]["total"], 10);
    assert_eq!(report["summary"]["failed"], 0);
    let labels: Vec<&str> = report["rows"].as_array().unwrap().iter().map(|r| r["metric"].as_str().unwrap()).collect();
    assert!(labels.contains(&"Semantically Equivalent (≥ 70%)"));
    assert!(dir.path().join("r.json").exists());

    let manual = run_json(dir.path(), &["eval", "manual"]);
    assert_eq!(manual["summary"]["accuracy"], 77.5);
    assert!(manual["footnote"].as_str().unwrap().contains("85.0%"));
    let fixtures = run_json(dir.path(), &["eval", "fixtures"]);
    let mismatched = fixtures["checks"].as_array().unwrap().iter().filter(|c| c["matches"] == false).count();
    assert_eq!(mismatched, 2);
}

struct Server(std::process::Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

#[test]
fn serve_over_http() {
    let dir = setup();
    let mut child = Command::new(env!("CARGO_BIN_EXE_diavgeia"))
        .current_dir(dir.path())
        .args(["serve", "--corpus", "corpus", "--port", "0"])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stderr = BufReader::new(child.stderr.take().unwrap());
    let _server = Server(child);
    let mut line = String::new();
    let base = loop {
        line.clear();
        assert!(stderr.read_line(&mut line).unwrap() > 0, "server exited");
        if let Some(rest) = line.split("listening on ").nth(1) {
            break rest.split_whitespace().next().unwrap().to_string();
        }
    };
    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
    let health: Value = agent.get(format!("{base}/healthz")).call().unwrap().body_mut().read_json().unwrap();
    assert_eq!(health["documents"], FIXTURE_DOCS);

    let mut created = agent.post(format!("{base}/sessions")).send_empty().unwrap();
    assert_eq!(created.status(), 201);
    let id = created.body_mut().read_json::<Value>().unwrap()["session_id"].as_str().unwrap().to_string();

    let mut resp = agent
        .post(format!("{base}/sessions/{id}/messages"))
        .send_json(json!({"question": "Προμήθεια γραφικής ύλης", "mode": "STREAMING"}))
        .unwrap();
    assert_eq!(resp.status(), 200);
    assert!(resp.headers()["content-type"].to_str().unwrap().starts_with("text/event-stream"));
    let body = resp.body_mut().read_to_string().unwrap();
    assert!(body.contains("event: chunk") && body.contains("event: done"), "{body}");

    let transcript: Value = agent.get(format!("{base}/sessions/{id}")).call().unwrap().body_mut().read_json().unwrap();
    assert_eq!(transcript["turns"].as_array().unwrap().len(), 2);
    let missing = agent.get(format!("{base}/sessions/nope")).call().unwrap();
    assert_eq!(missing.status(), 404);
}
