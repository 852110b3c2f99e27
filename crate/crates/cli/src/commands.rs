use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use serde_json::{json, Value};

use diavgeia_core::boilerplate::llm::{LlmClassifier, LlmSegmenter};
use diavgeia_core::boilerplate::{
    prevalence_study, run_swap_evaluation, tokenize_words, write_centroid_csv, BaselineClassifier, BaselineSegmenter, Classifier,
    PairDocument, Segmentation, Segmenter, SpanLabel, SwapPair,
};
use diavgeia_core::corpus::CorpusLayout;
use diavgeia_core::embedding::{
    centroid_document, embed_corpus, kmeans, pairwise_distance_histogram, Encoder, ReferenceEncoder, VectorStore,
};
use diavgeia_core::harvest::{run_harvest, ApiConfig, ExtractorCommand, HarvestJob, SystemClock, TextSource, UreqTransport};
use diavgeia_core::model::{CachedModel, ChatModel, ReplayCache};
use diavgeia_core::qaeval::{
    evaluate_automated, generate_qa_pairs, load_manual_results, read_pairs_jsonl, score_manual, verify_aggregation_fixtures,
    write_pairs_jsonl, MANUAL_FIXTURE, REPORTED_MANUAL_ACCURACY,
};
use diavgeia_core::rag::{
    AnswerMode, ExtractiveGenerator, FileSessionStore, Generator, ModelGenerator, RagConfig, RagService,
};
use diavgeia_core::remote::{RemoteChat, RemoteConfig, RemoteEncoder};
use diavgeia_core::search::{load_snapshot, save_snapshot, SearchIndex};
use diavgeia_core::textstats::{compute_corpus_stats, render_table, ReferenceTokenizer};

use crate::cli::*;
use crate::config::{self, Config, ConfigLayer, EncoderChoice, GeneratorChoice, LlmChoice};

/// What a command prints: `text` for `--format table`, `json` otherwise.
#[derive(Debug)]
pub struct Output {
    pub json: Value,
    pub text: String,
}

impl Output {
    fn new(json: Value, text: impl Into<String>) -> Self {
        Self { json, text: text.into() }
    }
}

pub struct Ctx {
    pub config_file: Option<PathBuf>,
    pub format: Format,
}

impl Ctx {
    fn config(&self, flags: ConfigLayer) -> Result<Config> {
        config::load(self.config_file.as_deref(), |k| std::env::var(k).ok(), flags)
    }
}

pub fn run(ctx: &Ctx, command: Command) -> Result<Output> {
    match command {
        Command::Harvest(a) => harvest(ctx, a),
        Command::Stats(a) => stats(ctx, a),
        Command::Index(IndexCommand::Build { corpus, out }) => index_build(ctx, corpus, out),
        Command::Index(IndexCommand::Search { index, query, k }) => index_search(ctx, index, &query, k),
        Command::Embed(a) => embed(ctx, a),
        Command::Cluster(a) => cluster(ctx, a),
        Command::Disthist(a) => disthist(ctx, a),
        Command::Boiler(b) => boiler(ctx, b),
        Command::Serve(a) => serve(ctx, a),
        Command::Ask(a) => ask(ctx, a),
        Command::Eval(e) => eval(ctx, e),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn parse_text_source(raw: &str) -> Result<TextSource> {
    if raw == "pdf" {
        return Ok(ApiConfig::default().text_source);
    }
    if let Some(t) = raw.strip_prefix("endpoint:") {
        return Ok(TextSource::Endpoint(t.into()));
    }
    if let Some(d) = raw.strip_prefix("dir:") {
        return Ok(TextSource::Directory(d.into()));
    }
    if let Some(cmd) = raw.strip_prefix("pdf:") {
        let mut parts = cmd.split_whitespace().map(str::to_owned);
        let program = parts.next().ok_or_else(|| anyhow!("empty extractor command"))?;
        let template = "/doc/{ada}".to_string();
        return Ok(TextSource::Pdf { template, extractor: ExtractorCommand { program, args: parts.collect() } });
    }
    bail!("unknown text source {raw:?}; expected pdf, pdf:COMMAND, endpoint:PATH or dir:PATH")
}

fn harvest(ctx: &Ctx, a: HarvestArgs) -> Result<Output> {
    let cfg = ctx.config(ConfigLayer { corpus: a.out, rps: a.rps, page_size: a.page_size, ..Default::default() })?;
    let layout = CorpusLayout::new(&cfg.corpus);
    let checkpoint = a.checkpoint.unwrap_or_else(|| cfg.corpus.join("harvest-checkpoint.json"));
    let mut job = HarvestJob::new(a.from, a.to, checkpoint);
    job.organization = a.org;
    job.page_size = cfg.page_size;
    job.rate_limit = cfg.rps;
    job.resume = a.resume;
    job.concurrency = a.concurrency;
    job.max_pages = a.max_pages;
    job.seed = cfg.seed;
    let mut api = ApiConfig::default().with_env_override();
    api.text_source = parse_text_source(&a.text_source)?;
    let transport = UreqTransport::new(Duration::from_secs(60));
    let cp = run_harvest(&job, &api, &layout, &transport, &SystemClock::default())?;
    let text = format!(
        "Fetched {} decisions ({} skipped, {} failures); {}.\nCorpus: {}\n",
        cp.fetched_adas,
        cp.skipped,
        cp.failures.len(),
        if cp.complete { "complete" } else { "incomplete, rerun with --resume" },
        cfg.corpus.display()
    );
    Ok(Output::new(to_json(&cp), text))
}

fn stats(ctx: &Ctx, a: StatsArgs) -> Result<Output> {
    let cfg = ctx.config(ConfigLayer { corpus: a.corpus, workers: a.workers, ..Default::default() })?;
    require_dir(&cfg.corpus)?;
    let stats = compute_corpus_stats(&CorpusLayout::new(&cfg.corpus), cfg.workers, &ReferenceTokenizer)?;
    Ok(Output::new(to_json(&stats), render_table(&stats)))
}

fn require_dir(p: &Path) -> Result<()> {
    if !p.is_dir() {
        bail!("corpus directory {} does not exist", p.display());
    }
    Ok(())
}

fn build_index(corpus: &Path) -> Result<(SearchIndex, usize)> {
    require_dir(corpus)?;
    let (docs, errors) = CorpusLayout::new(corpus).load_all();
    for e in &errors {
        log::warn!("skipping: {e}");
    }
    let mut index = SearchIndex::default();
    for d in &docs {
        index.index_document(d);
    }
    Ok((index, errors.len()))
}

fn index_build(ctx: &Ctx, corpus: Option<PathBuf>, out: Option<PathBuf>) -> Result<Output> {
    let cfg = ctx.config(ConfigLayer { corpus, index: out, ..Default::default() })?;
    let (index, skipped) = build_index(&cfg.corpus)?;
    save_snapshot(&index, &cfg.index).with_context(|| format!("writing {}", cfg.index.display()))?;
    let json = json!({"documents": index.len(), "skipped": skipped, "index": cfg.index});
    Ok(Output::new(json, format!("Indexed {} documents into {}\n", index.len(), cfg.index.display())))
}

fn load_index(path: &Path) -> Result<SearchIndex> {
    load_snapshot(path).with_context(|| format!("loading index {}", path.display()))
}

fn index_search(ctx: &Ctx, index: Option<PathBuf>, query: &str, k: Option<usize>) -> Result<Output> {
    let cfg = ctx.config(ConfigLayer { index, k, ..Default::default() })?;
    let hits = load_index(&cfg.index)?.search(query, cfg.k)?;
    let mut text = String::new();
    for (i, h) in hits.iter().enumerate() {
        let excerpt: String = h.excerpt.split_whitespace().collect::<Vec<_>>().join(" ").chars().take(100).collect();
        text.push_str(&format!("{:>2}. {}  {:.4}  {}\n", i + 1, h.ada, h.score, excerpt));
    }
    if hits.is_empty() {
        text.push_str("No matches.\n");
    }
    Ok(Output::new(to_json(&hits), text))
}

fn encoder(choice: EncoderChoice) -> Box<dyn Encoder> {
    match choice {
        EncoderChoice::Reference => Box::new(ReferenceEncoder::default()),
        EncoderChoice::Remote => Box::new(RemoteEncoder::from_env()),
    }
}

fn embed(ctx: &Ctx, a: EmbedArgs) -> Result<Output> {
    let cfg = ctx.config(ConfigLayer { corpus: a.corpus, encoder: a.encoder, vectors: a.out, ..Default::default() })?;
    require_dir(&cfg.corpus)?;
    let (store, failures) = embed_corpus(&CorpusLayout::new(&cfg.corpus), &*encoder(cfg.encoder));
    store.save(&cfg.vectors).with_context(|| format!("writing {}", cfg.vectors.display()))?;
    let json = json!({"documents": store.len(), "dimension": store.dimension(), "failures": failures, "vectors": cfg.vectors});
    let text = format!(
        "Embedded {} documents ({} dimensions, {} failed) into {}\n",
        store.len(),
        store.dimension(),
        failures.len(),
        cfg.vectors.display()
    );
    Ok(Output::new(json, text))
}

fn load_vectors(path: &Path) -> Result<VectorStore> {
    VectorStore::load(path).with_context(|| format!("loading vectors {}", path.display()))
}

fn cluster(ctx: &Ctx, a: ClusterArgs) -> Result<Output> {
    let cfg = ctx.config(ConfigLayer { vectors: a.vectors, seed: a.seed, ..Default::default() })?;
    let store = load_vectors(&cfg.vectors)?;
    let assignment = kmeans(&store, a.k, cfg.seed)?;
    let mut clusters = Vec::new();
    let mut text = format!("k = {}, inertia {:.6}, {} iterations\n", a.k, assignment.inertia, assignment.iterations);
    for c in 0..a.k {
        let size = assignment.members(c).len();
        let centroid = centroid_document(&assignment, c, &store).ok();
        text.push_str(&format!("cluster {c:>3}: {size:>6} documents, centroid {}\n", centroid.as_deref().unwrap_or("-")));
        clusters.push(json!({"cluster": c, "size": size, "centroid_ada": centroid}));
    }
    let json = json!({
        "k": a.k,
        "inertia": assignment.inertia,
        "iterations": assignment.iterations,
        "clusters": clusters,
        "assignments": store.adas().iter().zip(&assignment.assignments).map(|(ada, c)| json!([ada, c])).collect::<Vec<_>>(),
    });
    Ok(Output::new(json, text))
}

fn disthist(ctx: &Ctx, a: DisthistArgs) -> Result<Output> {
    let cfg = ctx.config(ConfigLayer { vectors: a.vectors, seed: a.seed, ..Default::default() })?;
    let h = pairwise_distance_histogram(&load_vectors(&cfg.vectors)?, a.sample, a.bins, cfg.seed)?;
    let peak = h.counts.iter().copied().max().unwrap_or(0).max(1);
    let mut text = format!("{} pairs from {} sampled documents\n", h.total(), h.sample_size);
    for (edge, count) in h.edges().iter().zip(&h.counts) {
        let bar = "#".repeat((count * 50 / peak) as usize);
        text.push_str(&format!("{edge:>6.3} {count:>8} {bar}\n"));
    }
    text.push_str(&format!("modes at {:?}\n", h.modes().iter().map(|&i| h.edges()[i]).collect::<Vec<_>>()));
    let json = json!({"histogram": h, "edges": h.edges(), "modes": h.modes()});
    Ok(Output::new(json, text))
}

fn chat_model(cfg: &Config) -> Box<dyn ChatModel> {
    let mut remote = RemoteConfig::from_env();
    remote.max_output_tokens = cfg.max_output_tokens;
    let cache = ReplayCache::new(&cfg.replay_dir);
    match cfg.llm {
        LlmChoice::Remote => Box::new(CachedModel::recording(Box::new(RemoteChat::new(remote)), cache)),
        LlmChoice::Replay => Box::new(CachedModel::replay(remote.model, cache)),
    }
}

/// Stored document bodies plus the vector store used to find neighbors.
struct Neighborhood {
    layout: CorpusLayout,
    store: VectorStore,
    n: usize,
}

impl Neighborhood {
    fn new(cfg: &Config) -> Result<Self> {
        require_dir(&cfg.corpus)?;
        Ok(Self { layout: CorpusLayout::new(&cfg.corpus), store: load_vectors(&cfg.vectors)?, n: cfg.neighbors })
    }

    fn text(&self, ada: &str) -> Result<String> {
        Ok(self.layout.load(ada)?.body_markdown)
    }

    fn document(&self, ada: &str) -> Result<PairDocument> {
        let query = self.store.get(ada).ok_or_else(|| anyhow!("{ada} is not in the vector store"))?;
        let neighbors = self.store.knn_excluding(query, self.n, ada)?;
        let neighbors = neighbors.iter().map(|n| self.text(&n.ada)).collect::<Result<Vec<_>>>()?;
        Ok(PairDocument { ada: ada.into(), text: self.text(ada)?, neighbors, truth: None })
    }
}

fn neighbor_config(ctx: &Ctx, s: &NeighborArgs, seed: Option<u64>) -> Result<Config> {
    ctx.config(ConfigLayer {
        corpus: s.corpus.clone(),
        vectors: s.vectors.clone(),
        neighbors: s.neighbors,
        llm: s.llm,
        seed,
        ..Default::default()
    })
}

fn segmenter(method: Method, cfg: &Config) -> Box<dyn Segmenter> {
    match method {
        Method::Baseline => Box::new(BaselineSegmenter::default()),
        Method::Llm => Box::new(LlmSegmenter { model: chat_model(cfg) }),
    }
}

fn classifier(method: Method, cfg: &Config) -> Box<dyn Classifier> {
    match method {
        Method::Baseline => Box::new(BaselineClassifier::default()),
        Method::Llm => Box::new(LlmClassifier { model: chat_model(cfg) }),
    }
}

#[derive(Deserialize)]
struct PairLine {
    pair_id: String,
    ada_a: String,
    ada_b: String,
}

fn read_json_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

fn boiler(ctx: &Ctx, command: BoilerCommand) -> Result<Output> {
    match command {
        BoilerCommand::Segment { ada, shared } => {
            let cfg = neighbor_config(ctx, &shared, None)?;
            let doc = Neighborhood::new(&cfg)?.document(&ada)?;
            let refs: Vec<&str> = doc.neighbors.iter().map(String::as_str).collect();
            let seg = segmenter(shared.method, &cfg).segment(&ada, &doc.text, &refs)?;
            let words = tokenize_words(&doc.text);
            let mut text = format!(
                "{ada}: {} words, {} boilerplate\n",
                seg.word_count(),
                seg.count(SpanLabel::Boilerplate)
            );
            for s in &seg.spans {
                let label = if s.label == SpanLabel::Boilerplate { "BP" } else { "CT" };
                let preview: String = words[s.start..s.end].join(" ").chars().take(80).collect();
                text.push_str(&format!("{label} [{:>5}, {:>5})  {preview}\n", s.start, s.end));
            }
            Ok(Output::new(to_json(&seg), text))
        }
        BoilerCommand::SwapEval { pairs, truth, shared } => {
            let cfg = neighbor_config(ctx, &shared, None)?;
            let hood = Neighborhood::new(&cfg)?;
            let truth: HashMap<String, Segmentation> = match truth {
                Some(p) => read_json_lines::<Segmentation>(&p)?.into_iter().map(|s| (s.ada.clone(), s)).collect(),
                None => HashMap::new(),
            };
            let with_truth = |mut d: PairDocument| {
                d.truth = truth.get(&d.ada).cloned();
                d
            };
            let pairs = read_json_lines::<PairLine>(&pairs)?
                .into_iter()
                .map(|p| {
                    Ok(SwapPair {
                        pair_id: p.pair_id,
                        a: with_truth(hood.document(&p.ada_a)?),
                        b: with_truth(hood.document(&p.ada_b)?),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let report = run_swap_evaluation(&pairs, &*segmenter(shared.method, &cfg));
            Ok(Output::new(to_json(&report), report.render_table()))
        }
        BoilerCommand::Prevalence { k, seed, csv, shared } => {
            let cfg = neighbor_config(ctx, &shared, seed)?;
            let hood = Neighborhood::new(&cfg)?;
            let results = prevalence_study(&hood.store, &hood.layout, &k, &*classifier(shared.method, &cfg), cfg.neighbors, cfg.seed)?;
            if let Some(path) = csv {
                let w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
                write_centroid_csv(results.values().flat_map(|r| &r.rows), w)?;
            }
            let mut text = String::from("    k  boilerplate  classified  failed\n");
            for r in results.values() {
                text.push_str(&format!("{:>5}  {:>10.1}%  {:>10}  {:>6}\n", r.k, 100.0 * r.rate, r.classified, r.failed));
            }
            Ok(Output::new(to_json(&results), text))
        }
    }
}

fn rag_config(ctx: &Ctx, a: &RagArgs, extra: ConfigLayer) -> Result<Config> {
    let flags = ConfigLayer {
        index: a.index.clone(),
        corpus: a.corpus.clone(),
        generator: a.generator,
        sessions: a.sessions.clone(),
        k: a.k,
        ..Default::default()
    };
    ctx.config(flags.merge(extra))
}

pub fn generator(cfg: &Config) -> Arc<dyn Generator> {
    let mut remote = RemoteConfig::from_env();
    remote.max_output_tokens = cfg.max_output_tokens;
    match cfg.generator {
        GeneratorChoice::Extractive => Arc::new(ExtractiveGenerator),
        GeneratorChoice::Remote => Arc::new(RemoteChat::new(remote)),
        GeneratorChoice::Replay => {
            Arc::new(ModelGenerator { model: CachedModel::replay(remote.model, ReplayCache::new(&cfg.replay_dir)) })
        }
    }
}

/// The index snapshot, or a fresh index over the corpus when the snapshot
/// does not exist yet.
pub fn open_index(cfg: &Config) -> Result<Arc<SearchIndex>> {
    if cfg.index.exists() {
        return Ok(Arc::new(load_index(&cfg.index)?));
    }
    if cfg.corpus.is_dir() {
        log::warn!("{} not found; indexing {} in memory", cfg.index.display(), cfg.corpus.display());
        return Ok(Arc::new(build_index(&cfg.corpus)?.0));
    }
    bail!("neither index {} nor corpus {} exists", cfg.index.display(), cfg.corpus.display())
}

pub fn rag_service(cfg: &Config, index: Arc<SearchIndex>) -> Result<RagService> {
    let store = FileSessionStore::new(&cfg.sessions).with_context(|| format!("session directory {}", cfg.sessions.display()))?;
    let config = RagConfig {
        k: cfg.k,
        history_turns: cfg.history_turns,
        max_output_tokens: cfg.max_output_tokens,
        ..RagConfig::default()
    };
    Ok(RagService::new(index, generator(cfg), Arc::new(store), config))
}

fn serve(ctx: &Ctx, a: ServeArgs) -> Result<Output> {
    let cfg = rag_config(ctx, &a.rag, ConfigLayer { host: a.host, port: a.port, ..Default::default() })?;
    let index = open_index(&cfg)?;
    let documents = index.len();
    let service = rag_service(&cfg, index)?;
    let addr = format!("{}:{}", cfg.host, cfg.port);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&addr).await.with_context(|| format!("binding {addr}"))?;
        let local = listener.local_addr()?;
        eprintln!("listening on http://{local} ({documents} documents, generator {})", service.generator_name());
        crate::server::serve(listener, Arc::new(service), documents).await
    })?;
    Ok(Output::new(json!({"stopped": true}), ""))
}

fn ask(ctx: &Ctx, a: AskArgs) -> Result<Output> {
    let cfg = rag_config(ctx, &a.rag, ConfigLayer::default())?;
    let service = rag_service(&cfg, open_index(&cfg)?)?;
    let session = match a.session {
        Some(s) => s,
        None => service.create_session()?,
    };
    let mode = match a.mode {
        ModeArg::Streaming => AnswerMode::Streaming,
        ModeArg::Structured => AnswerMode::Structured,
    };
    let stream = ctx.format == Format::Table && mode == AnswerMode::Streaming;
    let mut stdout = std::io::stdout();
    let answer = service.answer(&session, &a.question, mode, &mut |chunk| {
        if stream {
            let _ = stdout.write_all(chunk.as_bytes());
            let _ = stdout.flush();
        }
    })?;
    let mut text = String::new();
    if stream {
        text.push('\n');
    } else {
        text.push_str(&answer.text);
        text.push('\n');
        if let Some(s) = answer.structured.as_ref().filter(|s| !s.detailed_explanation.is_empty()) {
            text.push_str(&format!("\n{}\n", s.detailed_explanation));
        }
    }
    if !answer.cited_adas.is_empty() {
        text.push_str(&format!("\nCitations: {}\n", answer.cited_adas.join(", ")));
    }
    if !answer.ungrounded_citations.is_empty() {
        text.push_str(&format!("Not in the retrieved evidence: {}\n", answer.ungrounded_citations.join(", ")));
    }
    text.push_str(&format!("Session: {}\n", answer.session_id));
    Ok(Output::new(to_json(&answer), text))
}

fn eval(ctx: &Ctx, command: EvalCommand) -> Result<Output> {
    match command {
        EvalCommand::Generate { corpus, sample, seed, llm, out } => {
            let cfg = ctx.config(ConfigLayer { corpus, seed, llm, ..Default::default() })?;
            require_dir(&cfg.corpus)?;
            let generated = generate_qa_pairs(&CorpusLayout::new(&cfg.corpus), sample, &chat_model(&cfg), cfg.seed)?;
            let w = BufWriter::new(File::create(&out).with_context(|| format!("creating {}", out.display()))?);
            write_pairs_jsonl(&generated.pairs, w)?;
            let text = format!(
                "Wrote {} pairs to {} ({} documents skipped)\n",
                generated.pairs.len(),
                out.display(),
                generated.skipped.len()
            );
            Ok(Output::new(json!({"pairs": generated.pairs.len(), "skipped": generated.skipped, "out": out}), text))
        }
        EvalCommand::Auto { pairs, threshold, encoder: enc, report, rag } => {
            let cfg = rag_config(ctx, &rag, ConfigLayer { threshold, encoder: enc, ..Default::default() })?;
            let file = File::open(&pairs).with_context(|| format!("opening {}", pairs.display()))?;
            let pairs = read_pairs_jsonl(BufReader::new(file))?;
            let index = open_index(&cfg)?;
            let service = rag_service(&cfg, index.clone())?;
            let result = evaluate_automated(&pairs, &service, &*encoder(cfg.encoder), &*index, cfg.threshold);
            if let Some(path) = report {
                let w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
                serde_json::to_writer_pretty(w, &result)?;
            }
            let rows: Vec<Value> = result.rows().into_iter().map(|(k, v)| json!({"metric": k, "value": v})).collect();
            let json = json!({"summary": result.summary(), "rows": rows, "threshold": cfg.threshold});
            Ok(Output::new(json, result.render_table()))
        }
        EvalCommand::Manual { results } => {
            let (raw, bundled) = match &results {
                Some(p) => (std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?, false),
                None => (MANUAL_FIXTURE.to_string(), true),
            };
            let summary = score_manual(&load_manual_results(&raw)?)?;
            let footnote = bundled.then(|| summary.discrepancy(REPORTED_MANUAL_ACCURACY)).flatten();
            let mut text = summary.render_table();
            if let Some(f) = &footnote {
                text.push_str(f);
                text.push('\n');
            }
            let json = json!({"summary": summary, "footnote": footnote});
            Ok(Output::new(json, text))
        }
        EvalCommand::Fixtures => {
            let report = verify_aggregation_fixtures();
            let text = format!("{}\n{} of {} checks disagree\n", report.render(), report.mismatches().len(), report.checks.len());
            Ok(Output::new(to_json(&report), text))
        }
    }
}
