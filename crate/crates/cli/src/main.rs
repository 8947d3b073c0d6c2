//! `sieve`: train selectors, select sentences, evaluate and benchmark.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "sieve", version, about = "Sentence selection for open-domain QA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a bag-of-words or answer-finding model.
    Train(TrainArgs),
    /// Write the top sentences for every question as JSON lines.
    Select(SelectArgs),
    /// Recall (and EM/F1 with a reader) for selections or live selectors.
    Eval(EvalArgs),
    /// Selection throughput on a seeded question sample.
    Bench(BenchArgs),
    /// Check a dataset, embedding file or model file.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Bow,
    Ansfind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum SelectorName {
    Tfidf,
    Bow,
    #[value(name = "ansfind-only")]
    AnsfindOnly,
    #[value(name = "evdmatch-only")]
    EvdmatchOnly,
    Ensemble,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub kind: ModelKind,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Labeled dataset for held-out accuracy.
    #[arg(long)]
    pub heldout: Option<PathBuf>,
    /// Training summary as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long, default_value_t = sieve_core::embedding::DEFAULT_OOV_BUCKETS)]
    pub oov_buckets: usize,
}

#[derive(Debug, Args)]
pub struct SelectorArgs {
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Trained model; the kind is read from the file. Repeatable.
    #[arg(long)]
    pub model: Vec<PathBuf>,
    /// External selector command, split on whitespace.
    #[arg(long)]
    pub adapter: Option<String>,
    /// Per-question adapter timeout.
    #[arg(long, default_value_t = 60_000)]
    pub timeout_ms: u64,
    #[arg(long, default_value_t = sieve_core::embedding::DEFAULT_OOV_BUCKETS)]
    pub oov_buckets: usize,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, default_value_t = sieve_core::pipeline::DEFAULT_K_SENTENCES)]
    pub k_sentences: usize,
    #[arg(long, default_value_t = sieve_core::pipeline::DEFAULT_K_DOCUMENTS)]
    pub k_documents: usize,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum)]
    pub selector: SelectorName,
    #[command(flatten)]
    pub selectors: SelectorArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Reader command; its answers are stored with the selections.
    #[arg(long)]
    pub reader: Option<String>,
    /// Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Selections written by `select`. Repeatable; replaces live selection.
    #[arg(long, conflicts_with = "selector")]
    pub selections: Vec<PathBuf>,
    /// Selector to run live. Repeatable.
    #[arg(long, value_enum)]
    pub selector: Vec<SelectorName>,
    #[command(flatten)]
    pub selectors: SelectorArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub reader: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Repeatable.
    #[arg(long, value_enum, required = true)]
    pub selector: Vec<SelectorName>,
    #[command(flatten)]
    pub selectors: SelectorArgs,
    #[arg(long, default_value_t = sieve_core::pipeline::DEFAULT_K_SENTENCES)]
    pub k_sentences: usize,
    #[arg(long, default_value_t = sieve_core::pipeline::DEFAULT_K_DOCUMENTS)]
    pub k_documents: usize,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = sieve_core::pipeline::DEFAULT_BENCH_SAMPLE)]
    pub sample: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub model: Vec<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SIEVE_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Select(a) => commands::select(a),
        Command::Eval(a) => commands::eval(a),
        Command::Bench(a) => commands::bench(a),
        Command::Validate(a) => commands::validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
