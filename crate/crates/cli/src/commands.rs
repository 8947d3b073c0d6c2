use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use serde::Serialize;

use sieve_core::adapter::{AdapterCommand, ExternalSelector, ReaderAdapter};
use sieve_core::ansfind::{self, AnsFindModel, AnsFindSelector, AnsFindTrainConfig};
use sieve_core::bow::{self, BowModel, BowSelector, BowTrainConfig};
use sieve_core::evdmatch::{EnsembleSelector, EvdMatchSelector};
use sieve_core::modelio::ModelFile;
use sieve_core::pipeline::{
    benchmark, evaluate, retrieval_upper_bound, run_pipeline, BenchReport, EvalReport, PipelineConfig, SelectionResult,
};
use sieve_core::{load_dataset, load_embeddings, EmbeddingTable, RetrievalBundle, Selector, TfIdfSelector};

use crate::{
    BenchArgs, EvalArgs, Format, ModelKind, PipelineArgs, SelectArgs, SelectorArgs, SelectorName, TrainArgs,
    ValidateArgs,
};

pub enum CliError {
    /// Bad flags or missing inputs: exit code 2.
    Usage(String),
    /// Anything that fails once work has started: exit code 1.
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Usage(msg.into()))
}

fn require(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        usage(format!("{what} `{}` does not exist", path.display()))
    }
}

fn dataset(path: &Path) -> Result<Vec<RetrievalBundle>> {
    require(path, "dataset")?;
    Ok(load_dataset(path).with_context(|| format!("reading {}", path.display()))?)
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: Option<&PathBuf>, value: &T) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn adapter_command(cmd: &str) -> Result<AdapterCommand> {
    AdapterCommand::parse(cmd).map_err(|e| CliError::Usage(e.to_string()))
}

#[derive(Serialize)]
struct TrainSummary {
    kind: &'static str,
    seed: u64,
    examples: usize,
    positives: usize,
    initial_loss: f64,
    epoch_losses: Vec<f64>,
    final_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    heldout_accuracy: Option<f64>,
}

pub fn train(a: TrainArgs) -> Result<()> {
    require(&a.dataset, "dataset")?;
    require(&a.embeddings, "embeddings")?;
    if let Some(h) = &a.heldout {
        require(h, "held-out dataset")?;
    }
    let table =
        load_embeddings(&a.embeddings, a.oov_buckets).with_context(|| format!("reading {}", a.embeddings.display()))?;
    let bundles = dataset(&a.dataset)?;
    let heldout = a.heldout.as_deref().map(dataset).transpose()?;
    let (kind, report, accuracy) = match a.kind {
        ModelKind::Bow => {
            let mut cfg = BowTrainConfig {
                seed: a.seed,
                ..BowTrainConfig::default()
            };
            cfg.epochs = a.epochs.unwrap_or(cfg.epochs);
            cfg.learning_rate = a.learning_rate.unwrap_or(cfg.learning_rate);
            cfg.hidden = a.hidden.unwrap_or(cfg.hidden);
            let (model, report) = bow::train_bow(&bundles, &table, &cfg)?;
            model.save(&a.out)?;
            let acc = heldout
                .as_deref()
                .map(|h| bow::heldout_accuracy(&model, h, &table, cfg.negatives_per_positive, a.seed));
            ("bow", report, acc)
        }
        ModelKind::Ansfind => {
            let mut cfg = AnsFindTrainConfig {
                seed: a.seed,
                ..AnsFindTrainConfig::default()
            };
            cfg.epochs = a.epochs.unwrap_or(cfg.epochs);
            cfg.learning_rate = a.learning_rate.unwrap_or(cfg.learning_rate);
            cfg.hidden = a.hidden.unwrap_or(cfg.hidden);
            let (model, report) = ansfind::train_ansfind_bundles(&bundles, &table, &cfg)?;
            model.save(&a.out)?;
            let acc = heldout
                .as_deref()
                .map(|h| ansfind::heldout_accuracy(&model, h, &table, cfg.negatives, a.seed))
                .transpose()?;
            ("ansfind", report, acc)
        }
    };
    println!("final training loss: {:.6}", report.final_loss());
    if let Some(acc) = accuracy {
        println!("held-out accuracy: {acc:.4}");
    }
    if let Some(path) = &a.report {
        let summary = TrainSummary {
            kind,
            seed: a.seed,
            examples: report.examples,
            positives: report.positives,
            initial_loss: report.initial_loss,
            final_loss: report.final_loss(),
            epoch_losses: report.epoch_losses,
            heldout_accuracy: accuracy,
        };
        write_json(Some(path), &summary)?;
    }
    Ok(())
}

#[derive(Default)]
struct Resources {
    table: Option<Arc<EmbeddingTable>>,
    bow: Option<BowModel>,
    ansfind: Option<Arc<AnsFindModel>>,
}

impl Resources {
    fn load(args: &SelectorArgs, names: &[SelectorName]) -> Result<Self> {
        let mut r = Resources::default();
        let needs_table = names.iter().any(|n| {
            matches!(
                n,
                SelectorName::Bow | SelectorName::AnsfindOnly | SelectorName::Ensemble
            )
        });
        if needs_table {
            let Some(path) = &args.embeddings else {
                return usage("bow, ansfind-only and ensemble need --embeddings");
            };
            require(path, "embeddings")?;
            let table =
                load_embeddings(path, args.oov_buckets).with_context(|| format!("reading {}", path.display()))?;
            r.table = Some(Arc::new(table));
        }
        for path in &args.model {
            require(path, "model")?;
        }
        for path in &args.model {
            let file = ModelFile::load(path).with_context(|| format!("reading {}", path.display()))?;
            match file.kind.as_str() {
                bow::MODEL_KIND if r.bow.is_none() => r.bow = Some(BowModel::from_model_file(file)?),
                ansfind::MODEL_KIND if r.ansfind.is_none() => {
                    r.ansfind = Some(Arc::new(AnsFindModel::from_model_file(file)?))
                }
                k => {
                    return usage(format!(
                        "unexpected or duplicate model kind `{k}` in {}",
                        path.display()
                    ))
                }
            }
        }
        if names.contains(&SelectorName::External) && args.adapter.is_none() {
            return usage("selector external needs --adapter");
        }
        Ok(r)
    }

    fn table(&self) -> Arc<EmbeddingTable> {
        self.table.clone().expect("embeddings loaded for this selector")
    }

    fn selector(&self, name: SelectorName, args: &SelectorArgs) -> Result<Box<dyn Selector>> {
        let need_ansfind = || match &self.ansfind {
            Some(m) => Ok(m.clone()),
            None => usage(format!("selector {name:?} needs --model with an ansfind model")),
        };
        Ok(match name {
            SelectorName::Tfidf => Box::new(TfIdfSelector),
            SelectorName::EvdmatchOnly => Box::new(EvdMatchSelector),
            SelectorName::Bow => match &self.bow {
                Some(m) => Box::new(BowSelector::new(m.clone(), self.table())?),
                None => return usage("selector bow needs --model with a bow model"),
            },
            SelectorName::AnsfindOnly => Box::new(AnsFindSelector::new(need_ansfind()?, self.table())?),
            SelectorName::Ensemble => Box::new(EnsembleSelector::new(need_ansfind()?, self.table())?),
            SelectorName::External => {
                let cmd = args.adapter.as_deref().expect("checked in load");
                Box::new(ExternalSelector::new(
                    adapter_command(cmd)?,
                    Duration::from_millis(args.timeout_ms),
                ))
            }
        })
    }
}

fn pipeline_config(p: &PipelineArgs) -> Result<PipelineConfig> {
    let cfg = PipelineConfig {
        k_sentences: p.k_sentences,
        k_documents: p.k_documents,
        workers: p.workers,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn reader(cmd: Option<&str>, timeout_ms: u64) -> Result<Option<ReaderAdapter>> {
    cmd.map(|s| {
        Ok(ReaderAdapter::new(
            adapter_command(s)?,
            Duration::from_millis(timeout_ms),
        ))
    })
    .transpose()
}

fn all_failed(results: &[SelectionResult]) -> bool {
    !results.is_empty() && results.iter().all(|r| r.error.is_some())
}

pub fn select(a: SelectArgs) -> Result<()> {
    let cfg = pipeline_config(&a.pipeline)?;
    let bundles = dataset(&a.dataset)?;
    let resources = Resources::load(&a.selectors, &[a.selector])?;
    let selector = resources.selector(a.selector, &a.selectors)?;
    let reader = reader(a.reader.as_deref(), a.selectors.timeout_ms)?;
    let results = run_pipeline(&bundles, selector.as_ref(), reader.as_ref(), &cfg)?;
    let mut out = output(a.out.as_ref())?;
    for r in &results {
        serde_json::to_writer(&mut out, r)?;
        writeln!(out)?;
    }
    out.flush()?;
    let failed = results.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} of {} questions failed", results.len());
    }
    if all_failed(&results) {
        return Err(anyhow!("every question failed").into());
    }
    Ok(())
}

fn read_selections(path: &Path) -> Result<Vec<SelectionResult>> {
    require(path, "selections")?;
    let file = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: SelectionResult =
            serde_json::from_str(&line).with_context(|| format!("{} line {}", path.display(), i + 1))?;
        out.push(r);
    }
    Ok(out)
}

#[derive(Serialize)]
struct EvalOutput {
    questions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_sentences: Option<usize>,
    k_documents: usize,
    retrieval_upper_bound: f64,
    reports: Vec<EvalReport>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    question_id: &'a str,
    selector: &'a str,
    recall_hit: bool,
    em: Option<f64>,
    f1: Option<f64>,
    latency_ms: f64,
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let cfg = pipeline_config(&a.pipeline)?;
    let bundles = dataset(&a.dataset)?;
    let mut groups: Vec<(Vec<SelectionResult>, bool)> = Vec::new();
    if !a.selections.is_empty() {
        let mut all = Vec::new();
        for path in &a.selections {
            all.extend(read_selections(path)?);
        }
        let mut names: Vec<String> = Vec::new();
        for r in &all {
            if !names.contains(&r.selector) {
                names.push(r.selector.clone());
            }
        }
        for name in names {
            let results: Vec<_> = all.iter().filter(|r| r.selector == name).cloned().collect();
            let with_reader = results.iter().any(|r| r.answer.is_some());
            groups.push((results, with_reader));
        }
    } else {
        if a.selector.is_empty() {
            return usage("eval needs --selections or at least one --selector");
        }
        let resources = Resources::load(&a.selectors, &a.selector)?;
        let reader = reader(a.reader.as_deref(), a.selectors.timeout_ms)?;
        for &name in &a.selector {
            let selector = resources.selector(name, &a.selectors)?;
            let results = run_pipeline(&bundles, selector.as_ref(), reader.as_ref(), &cfg)?;
            groups.push((results, reader.is_some()));
        }
    }
    let mut reports = Vec::with_capacity(groups.len());
    for (results, with_reader) in &groups {
        reports.push(evaluate(results, &bundles, *with_reader)?);
    }
    match a.format {
        Format::Json => write_json(
            a.out.as_ref(),
            &EvalOutput {
                questions: bundles.len(),
                k_sentences: a.selections.is_empty().then_some(cfg.k_sentences),
                k_documents: cfg.k_documents,
                retrieval_upper_bound: retrieval_upper_bound(&bundles, cfg.k_documents),
                reports,
            },
        )?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(output(a.out.as_ref())?);
            for report in &reports {
                for r in &report.records {
                    w.serialize(CsvRow {
                        question_id: &r.question_id,
                        selector: &r.selector,
                        recall_hit: r.recall_hit,
                        em: r.em,
                        f1: r.f1,
                        latency_ms: r.latency_ms,
                    })?;
                }
            }
            w.flush()?;
        }
    }
    if !groups.is_empty() && groups.iter().all(|(r, _)| all_failed(r)) {
        return Err(anyhow!("every question failed").into());
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchOutput {
    benchmarks: Vec<BenchReport>,
}

pub fn bench(a: BenchArgs) -> Result<()> {
    let cfg = pipeline_config(&PipelineArgs {
        k_sentences: a.k_sentences,
        k_documents: a.k_documents,
        workers: a.workers,
    })?;
    let bundles = dataset(&a.dataset)?;
    let resources = Resources::load(&a.selectors, &a.selector)?;
    let mut benchmarks = Vec::new();
    for &name in &a.selector {
        let selector = resources.selector(name, &a.selectors)?;
        let report = benchmark(&bundles, selector.as_ref(), &cfg, a.sample, a.seed)?;
        log::info!("{}: {:.1} questions/s", report.selector, report.questions_per_second);
        benchmarks.push(report);
    }
    write_json(a.out.as_ref(), &BenchOutput { benchmarks })
}

#[derive(Serialize, Default)]
struct ValidationSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    questions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labeled_questions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    documents: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sentences: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    embedding_words: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    embedding_dim: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    models: Vec<String>,
    errors: usize,
}

pub fn validate(a: ValidateArgs) -> Result<()> {
    if a.dataset.is_none() && a.embeddings.is_none() && a.model.is_empty() {
        return usage("validate needs --dataset, --embeddings or --model");
    }
    let mut s = ValidationSummary::default();
    if let Some(path) = &a.dataset {
        let bundles = dataset(path)?;
        s.questions = Some(bundles.len());
        s.labeled_questions = Some(bundles.iter().filter(|b| !b.answers.is_empty()).count());
        s.documents = Some(bundles.iter().map(|b| b.documents.len()).sum());
        s.sentences = Some(bundles.iter().map(RetrievalBundle::sentence_count).sum());
    }
    if let Some(path) = &a.embeddings {
        require(path, "embeddings")?;
        let t = load_embeddings(path, sieve_core::embedding::DEFAULT_OOV_BUCKETS)
            .with_context(|| format!("reading {}", path.display()))?;
        s.embedding_words = Some(t.len());
        s.embedding_dim = Some(t.dim());
    }
    for path in &a.model {
        require(path, "model")?;
        let file = ModelFile::load(path).with_context(|| format!("reading {}", path.display()))?;
        let kind = file.kind.clone();
        match kind.as_str() {
            bow::MODEL_KIND => drop(BowModel::from_model_file(file)?),
            ansfind::MODEL_KIND => drop(AnsFindModel::from_model_file(file)?),
            k => return Err(anyhow!("{}: unknown model kind `{k}`", path.display()).into()),
        }
        s.models.push(kind);
    }
    write_json(None, &s)
}
