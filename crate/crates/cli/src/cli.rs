use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{EncoderChoice, GeneratorChoice, LlmChoice};

#[derive(Debug, Parser)]
#[command(name = "diavgeia", version, about = "Harvest, analyze and query published administrative decisions")]
pub struct Cli {
    /// TOML settings file; environment variables and flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download decisions from the open-data API into a corpus store.
    Harvest(HarvestArgs),
    /// Token, character, sentence and organization statistics.
    Stats(StatsArgs),
    /// Build or query the BM25 index.
    #[command(subcommand)]
    Index(IndexCommand),
    /// Embed every stored document into a vector store.
    Embed(EmbedArgs),
    /// k-means over a vector store.
    Cluster(ClusterArgs),
    /// Histogram of pairwise cosine distances over a sample.
    Disthist(DisthistArgs),
    /// Boilerplate segmentation, content-swap evaluation and prevalence.
    #[command(subcommand)]
    Boiler(BoilerCommand),
    /// HTTP chat service.
    Serve(ServeArgs),
    /// Ask one question from the command line.
    Ask(AskArgs),
    /// Evaluate the question-answering system.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Debug, Args)]
pub struct HarvestArgs {
    #[arg(long, value_name = "DATE")]
    pub from: NaiveDate,
    #[arg(long, value_name = "DATE")]
    pub to: NaiveDate,
    /// Organization id.
    #[arg(long)]
    pub org: Option<String>,
    #[arg(long, value_name = "N")]
    pub rps: Option<f64>,
    /// Corpus directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Continue from the checkpoint instead of starting over.
    #[arg(long)]
    pub resume: bool,
    #[arg(long)]
    pub page_size: Option<u32>,
    /// Stop after this many pages.
    #[arg(long)]
    pub max_pages: Option<u64>,
    /// Defaults to `harvest-checkpoint.json` inside the corpus directory.
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
    /// `pdf` (download and run pdftotext), `endpoint:/path/{ada}` or `dir:PATH`.
    #[arg(long, default_value = "pdf")]
    pub text_source: String,
    /// Concurrent document downloads.
    #[arg(long, default_value_t = 1)]
    pub concurrency: usize,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long, value_name = "DIR")]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum IndexCommand {
    /// Index every stored document and write a snapshot
    Build {
        #[arg(long, value_name = "DIR")]
        corpus: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Top-k documents for a query
    Search {
        #[arg(long, value_name = "FILE")]
        index: Option<PathBuf>,
        #[arg(long)]
        query: String,
        #[arg(short)]
        k: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long, value_name = "DIR")]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub encoder: Option<EncoderChoice>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long, value_name = "FILE")]
    pub vectors: Option<PathBuf>,
    #[arg(short)]
    pub k: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DisthistArgs {
    #[arg(long, value_name = "FILE")]
    pub vectors: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    pub sample: usize,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Multi-neighbor LCS voting.
    Baseline,
    /// Completion model (see `llm` setting).
    Llm,
}

#[derive(Debug, Args)]
pub struct NeighborArgs {
    #[arg(long, value_name = "DIR")]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub vectors: Option<PathBuf>,
    #[arg(long)]
    pub neighbors: Option<usize>,
    #[arg(long, value_enum, default_value_t = Method::Baseline)]
    pub method: Method,
    #[arg(long, value_enum)]
    pub llm: Option<LlmChoice>,
}

#[derive(Debug, Subcommand)]
pub enum BoilerCommand {
    /// Segment one stored document against its nearest neighbors.
    Segment {
        #[arg(long)]
        ada: String,
        #[command(flatten)]
        shared: NeighborArgs,
    },
    /// Swap contents across document pairs and score the reconstructions.
    SwapEval {
        /// JSON lines `{"pair_id", "ada_a", "ada_b"}`.
        #[arg(long, value_name = "FILE")]
        pairs: PathBuf,
        /// JSON lines of annotated segmentations `{"ada", "spans"}`.
        #[arg(long, value_name = "FILE")]
        truth: Option<PathBuf>,
        #[command(flatten)]
        shared: NeighborArgs,
    },
    /// Share of cluster centroids classified as boilerplate, per k.
    Prevalence {
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the classified centroids as CSV.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        #[command(flatten)]
        shared: NeighborArgs,
    },
}

#[derive(Debug, Args)]
pub struct RagArgs {
    #[arg(long, value_name = "FILE")]
    pub index: Option<PathBuf>,
    /// Used to build the index when the snapshot does not exist.
    #[arg(long, value_name = "DIR")]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub generator: Option<GeneratorChoice>,
    #[arg(long, value_name = "DIR")]
    pub sessions: Option<PathBuf>,
    #[arg(short)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub rag: RagArgs,
    #[arg(long)]
    pub host: Option<String>,
    /// 0 picks a free port.
    #[arg(long)]
    pub port: Option<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Streaming,
    Structured,
}

#[derive(Debug, Args)]
pub struct AskArgs {
    #[arg(long)]
    pub question: String,
    /// Continue an existing conversation.
    #[arg(long)]
    pub session: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Streaming)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub rag: RagArgs,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Generate question/answer pairs from a seeded sample of the corpus.
    Generate {
        #[arg(long, value_name = "DIR")]
        corpus: Option<PathBuf>,
        #[arg(long)]
        sample: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        llm: Option<LlmChoice>,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Answer every pair and score it against the ground truth.
    Auto {
        #[arg(long, value_name = "FILE")]
        pairs: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_enum)]
        encoder: Option<EncoderChoice>,
        /// Write per-pair results as JSON.
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
        #[command(flatten)]
        rag: RagArgs,
    },
    /// Score manual verdicts; the bundled study when no file is given.
    Manual {
        #[arg(long, value_name = "FILE")]
        results: Option<PathBuf>,
    },
    /// Re-check the arithmetic of the bundled manual study.
    Fixtures,
}
