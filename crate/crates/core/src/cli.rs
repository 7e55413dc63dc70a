//! The `entemb` command line: ingestion, graph building, training,
//! evaluation, neighbour queries and projection export.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, ensure, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::cooc::{accumulate_glove_counts, build_graph, graph_stats, CoocGraph, Decay, GraphBuildConfig};
use crate::corpus::{
    parse_annotated, parse_raw, prepare_corpus_with, stopwords, Document, EntityType,
    FilterMode, IndexedCorpus, Vocabulary,
};
use crate::eval::{
    self, analogy_eval, categorization_eval, extend_with_compositions, normalize_key,
    relatedness_eval, AnalogyConvention, AnalogyDataset, CategorizationDataset, ClusterMethod,
    Correlation, EvalReport, RelatednessDataset, TaskReport,
};
use crate::glove::{train_glove, GloveConfig};
use crate::graph::{deepwalk_train, generate_walks, verse_train, write_walks, VerseConfig, WalkConfig, WeightNorm};
use crate::model::{EmbeddingModel, Embeddings, Published, TrainStats};
use crate::sgns::{train_sgns, SgnsConfig};

/// Environment variable read when no seed is given.
pub const SEED_ENV: &str = "ENTITY_EMBED_SEED";
const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "entemb", version, about = "Word and entity embeddings from annotated text")]
pub struct Cli {
    /// More diagnostics on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Filter a corpus, build its vocabulary and an index-encoded cache.
    Ingest(IngestArgs),
    /// Build the term/entity cooccurrence graph from an annotated cache.
    BuildGraph(BuildGraphArgs),
    /// Train embeddings with one of the five methods.
    Train(TrainArgs),
    /// Evaluate embeddings on relatedness, analogy and categorization tasks.
    Eval(EvalArgs),
    /// Print the nearest neighbours of a key or a composed phrase.
    Neighbors(NeighborsArgs),
    /// Write 2-D principal-component coordinates of selected keys.
    ExportProjection(ProjectionArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// One whitespace-tokenized sentence per line.
    Text,
    /// Annotated JSON lines.
    Jsonl,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Corpus file.
    pub input: PathBuf,
    #[arg(long, default_value = "annotated")]
    pub mode: FilterMode,
    /// Input format; guessed from the extension by default.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    #[arg(long, default_value_t = 3)]
    pub min_count: u64,
    /// Stop words for the raw pipeline, one per line.
    #[arg(long)]
    pub stoplist: Option<PathBuf>,
    /// POS tags removed in the annotated pipeline, one per line.
    #[arg(long)]
    pub pos_blocklist: Option<PathBuf>,
    #[arg(long, default_value = "vocab.tsv")]
    pub vocab: PathBuf,
    #[arg(long, default_value = "corpus.cache")]
    pub cache: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildGraphArgs {
    #[arg(long, default_value = "corpus.cache")]
    pub cache: PathBuf,
    #[arg(long, default_value = "vocab.tsv")]
    pub vocab: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub entity_window: usize,
    #[arg(long, default_value = "harmonic")]
    pub decay: Decay,
    /// Edges lighter than this are dropped.
    #[arg(long, default_value_t = 0.0)]
    pub min_weight: f64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, short, default_value = "graph.tsv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Method {
    W2v,
    Glove,
    DeepwalkId,
    DeepwalkLog,
    Verse,
}

impl Method {
    fn uses_graph(self) -> bool {
        matches!(self, Method::DeepwalkId | Method::DeepwalkLog | Method::Verse)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().unwrap().get_name())
    }
}

/// Hyperparameters settable from a config file or flags. Unset values fall
/// back to the defaults of the chosen method and pipeline.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub unigram_power: Option<f64>,
    /// Frequent-token subsampling threshold (off when unset).
    #[arg(long)]
    pub subsample: Option<f64>,
    /// Vocabulary threshold applied before training text methods.
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// `sum` (center + context) or `center`.
    #[arg(long)]
    pub published: Option<Published>,
    #[arg(long)]
    pub walks_per_node: Option<usize>,
    #[arg(long)]
    pub walk_length: Option<usize>,
    /// Sampling rounds per node.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Draw VERSE positives proportional to edge weight.
    #[arg(long)]
    pub weighted_positives: Option<bool>,
}

impl Params {
    /// Values set in `over` replace those in `self`.
    fn overlay(&mut self, over: &Params) {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f.clone(); } )* };
        }
        take!(
            dim, window, negatives, learning_rate, epochs, unigram_power, subsample, min_count,
            x_max, alpha, published, walks_per_node, walk_length, samples, weighted_positives
        );
    }
}

impl FromStr for Published {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "center" => Ok(Published::Center),
            "sum" => Ok(Published::Sum),
            other => Err(crate::Error::Config(format!("unknown published table `{other}`"))),
        }
    }
}

/// Paths of a run; all optional in the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub walks: Option<PathBuf>,
}

/// TOML run configuration. Command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pipeline: Option<FilterMode>,
    pub method: Option<Method>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub binary: Option<bool>,
    pub paths: Paths,
    pub params: Params,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Published defaults; parameters from the config file are ignored.
    Paper,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub pipeline: Option<FilterMode>,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Re-run the plan recorded in a manifest.
    #[arg(long, conflicts_with_all = ["method", "pipeline", "config", "preset"])]
    pub replay: Option<PathBuf>,
    /// Corpus cache written by `ingest`.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Embedding output; a `.bin` extension selects the binary format.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Manifest output (default: `<out>.manifest.json`).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Also write the DeepWalk walks, one per line.
    #[arg(long)]
    pub dump_walks: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub params: Params,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClusterChoice {
    Kmeans,
    Agglomerative,
    Both,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    /// `relatedness=FILE`, `analogy=FILE` or `categorization=FILE`.
    #[arg(long = "task", required = true)]
    pub tasks: Vec<TaskSpec>,
    #[arg(long, default_value = "pearson")]
    pub correlation: Correlation,
    /// Also report type-restricted analogy accuracy.
    #[arg(long)]
    pub typed: bool,
    #[arg(long, default_value = "a-minus-b")]
    pub convention: AnalogyConvention,
    #[arg(long, value_enum, default_value = "both")]
    pub cluster: ClusterChoice,
    /// Compose missing multi-word keys from their words.
    #[arg(long)]
    pub compose_multiword: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report path; stdout by default.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskSpec {
    Relatedness(PathBuf),
    Analogy(PathBuf),
    Categorization(PathBuf),
}

impl FromStr for TaskSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, path) = s
            .split_once('=')
            .ok_or_else(|| format!("expected KIND=FILE, got `{s}`"))?;
        let path = PathBuf::from(path);
        match kind {
            "relatedness" => Ok(TaskSpec::Relatedness(path)),
            "analogy" => Ok(TaskSpec::Analogy(path)),
            "categorization" => Ok(TaskSpec::Categorization(path)),
            other => Err(format!("unknown task `{other}`")),
        }
    }
}

#[derive(Debug, Args)]
pub struct NeighborsArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    /// Key to query.
    #[arg(required_unless_present = "compose", conflicts_with = "compose")]
    pub query: Option<String>,
    /// Words whose mean vector is the query.
    #[arg(long)]
    pub compose: Option<String>,
    #[arg(short, default_value_t = 4)]
    pub k: usize,
    /// Only entities of this type (PER, LOC, ORG, DATE).
    #[arg(long = "type")]
    pub type_filter: Option<String>,
}

#[derive(Debug, Args)]
pub struct ProjectionArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    /// Keys to project, one per line.
    #[arg(long)]
    pub keys: PathBuf,
    /// Output TSV; stdout by default.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Parses arguments, runs the command and maps errors to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .target(env_logger::Target::Stderr)
        .try_init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<io::Error>()
            .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
    })
}

pub fn run(command: Command) -> anyhow::Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match command {
        Command::Ingest(a) => cmd_ingest(&a, &mut out),
        Command::BuildGraph(a) => cmd_build_graph(&a, &mut out),
        Command::Train(a) => cmd_train(&a, &mut out),
        Command::Eval(a) => cmd_eval(&a, &mut out),
        Command::Neighbors(a) => cmd_neighbors(&a, &mut out),
        Command::ExportProjection(a) => cmd_export_projection(&a, &mut out),
    }
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn read_documents(path: &Path, format: InputFormat, mode: FilterMode) -> anyhow::Result<Vec<Document>> {
    let reader = open(path)?;
    let mut docs = match format {
        InputFormat::Text => {
            ensure!(
                mode == FilterMode::Raw,
                "the annotated pipeline needs JSON-lines input with entity spans"
            );
            parse_raw(reader)?
        }
        InputFormat::Jsonl => {
            let mut parser = parse_annotated(reader);
            let docs = parser.by_ref().collect::<crate::Result<Vec<_>>>()?;
            if parser.skipped() > 0 {
                log::warn!("{} empty lines skipped", parser.skipped());
            }
            docs
        }
    };
    if mode == FilterMode::Raw {
        for doc in &mut docs {
            doc.entities.clear();
        }
    }
    Ok(docs)
}

pub fn cmd_ingest(a: &IngestArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let format = a.format.unwrap_or_else(|| {
        match a.input.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "json") => InputFormat::Jsonl,
            _ => InputFormat::Text,
        }
    });
    let stoplist = match &a.stoplist {
        Some(p) => stopwords::read_stoplist(open(p)?)?,
        None => stopwords::english_stoplist(),
    };
    let blocklist = match &a.pos_blocklist {
        Some(p) => stopwords::read_stoplist(open(p)?)?,
        None => stopwords::default_pos_blocklist(),
    };
    let docs = read_documents(&a.input, format, a.mode)?;
    let (vocab, corpus) = prepare_corpus_with(&docs, a.mode, a.min_count, &stoplist, &blocklist)?;
    let mut w = create(&a.vocab)?;
    vocab.write_tsv(&mut w)?;
    w.flush()?;
    let mut w = create(&a.cache)?;
    corpus.write(&mut w)?;
    w.flush()?;
    let entities = (0..vocab.len()).filter(|&i| vocab.is_entity(i)).count();
    writeln!(
        out,
        "documents={} tokens={} kept_tokens={} types={} entities={}",
        docs.len(),
        vocab.total_token_count(),
        corpus.token_count(),
        vocab.len(),
        entities
    )?;
    Ok(())
}

fn load_vocab(path: &Path) -> anyhow::Result<Vocabulary> {
    Vocabulary::read_tsv(open(path)?).with_context(|| format!("reading vocabulary {}", path.display()))
}

fn load_corpus(path: &Path) -> anyhow::Result<IndexedCorpus> {
    IndexedCorpus::read(open(path)?).with_context(|| format!("reading corpus cache {}", path.display()))
}

pub fn cmd_build_graph(a: &BuildGraphArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let corpus = load_corpus(&a.cache)?;
    ensure!(
        corpus.mode == FilterMode::Annotated,
        "the graph needs an annotated corpus cache, {} is `{}`",
        a.cache.display(),
        corpus.mode
    );
    let vocab = load_vocab(&a.vocab)?;
    let cfg = GraphBuildConfig {
        entity_window: a.entity_window,
        decay: a.decay,
        min_weight: a.min_weight,
    };
    let graph = build_graph(&corpus.documents, &vocab, &cfg, a.workers)?;
    let mut w = create(&a.out)?;
    graph.write_tsv(&vocab.keys(), &mut w)?;
    w.flush()?;
    let stats = graph_stats(&graph);
    writeln!(out, "nodes={} edges={}", stats.connected_nodes, stats.edges)?;
    Ok(())
}

/// Fully resolved training run, as recorded in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainPlan {
    pub method: Method,
    pub pipeline: FilterMode,
    pub seed: u64,
    pub workers: usize,
    pub corpus: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub output: PathBuf,
    pub binary: bool,
    pub walks: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sgns: Option<SgnsConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub glove: Option<GloveConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub walk: Option<WalkConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verse: Option<VerseConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub plan: TrainPlan,
    pub wall_time_secs: f64,
    pub final_loss: Option<f64>,
    pub updates: u64,
    pub vocabulary: usize,
}

fn seed_from_env() -> anyhow::Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => Ok(Some(
            v.trim()
                .parse()
                .with_context(|| format!("{SEED_ENV}=`{v}` is not an integer"))?,
        )),
        Err(_) => Ok(None),
    }
}

/// Merges defaults, config file and flags into a plan.
pub fn resolve_plan(a: &TrainArgs) -> anyhow::Result<TrainPlan> {
    let file = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let method = a
        .method
        .or(file.method)
        .ok_or_else(|| anyhow!("no method given (--method or `method` in the config)"))?;
    let corpus = a.corpus.clone().or(file.paths.corpus.clone());
    let vocab = a.vocab.clone().or(file.paths.vocab.clone());
    let graph = a.graph.clone().or(file.paths.graph.clone());
    let pipeline = match a.pipeline.or(file.pipeline) {
        Some(p) => p,
        None if method.uses_graph() => FilterMode::Annotated,
        None => match &corpus {
            Some(c) => load_corpus(c)?.mode,
            None => FilterMode::Raw,
        },
    };
    if method.uses_graph() {
        ensure!(graph.is_some(), "method {method} needs --graph");
        ensure!(
            pipeline == FilterMode::Annotated,
            "method {method} runs on the annotated pipeline's graph"
        );
    } else {
        ensure!(corpus.is_some(), "method {method} needs --corpus");
        ensure!(vocab.is_some(), "method {method} needs --vocab");
    }

    let mut params = Params::default();
    if a.preset.is_none() {
        params.overlay(&file.params);
    }
    params.overlay(&a.params);
    let seed = match a.seed.or(file.seed) {
        Some(s) => s,
        None => seed_from_env()?.unwrap_or(DEFAULT_SEED),
    };
    let workers = a.workers.or(file.workers).unwrap_or(1).max(1);
    let output = a
        .out
        .clone()
        .or(file.paths.model.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{method}.emb")));
    let binary = file.binary.unwrap_or(false) || output.extension().is_some_and(|e| e == "bin");

    let sgns_for = |base: SgnsConfig| SgnsConfig {
        dim: params.dim.unwrap_or(base.dim),
        window: params.window.unwrap_or(base.window),
        negatives: params.negatives.unwrap_or(base.negatives),
        learning_rate: params.learning_rate.unwrap_or(base.learning_rate),
        epochs: params.epochs.unwrap_or(base.epochs),
        unigram_power: params.unigram_power.unwrap_or(base.unigram_power),
        subsample: params.subsample.or(base.subsample),
        seed,
        workers,
    };
    let mut plan = TrainPlan {
        method,
        pipeline,
        seed,
        workers,
        corpus,
        vocab,
        graph,
        output,
        binary,
        walks: a.dump_walks.clone().or(file.paths.walks.clone()),
        min_count: None,
        sgns: None,
        glove: None,
        walk: None,
        verse: None,
    };
    match method {
        Method::W2v => {
            plan.min_count = Some(params.min_count.unwrap_or(3));
            plan.sgns = Some(sgns_for(match pipeline {
                FilterMode::Raw => SgnsConfig::raw(),
                FilterMode::Annotated => SgnsConfig::annotated(),
            }));
        }
        Method::Glove => {
            let base = GloveConfig::default();
            plan.min_count = Some(params.min_count.unwrap_or(5));
            plan.glove = Some(GloveConfig {
                dim: params.dim.unwrap_or(base.dim),
                window: params.window.unwrap_or(base.window),
                x_max: params.x_max.unwrap_or(base.x_max),
                alpha: params.alpha.unwrap_or(base.alpha),
                learning_rate: params.learning_rate.unwrap_or(base.learning_rate),
                epochs: params.epochs.unwrap_or(base.epochs),
                published: params.published.unwrap_or(base.published),
                seed,
                workers,
            });
        }
        Method::DeepwalkId | Method::DeepwalkLog => {
            let base = WalkConfig::default();
            let walk = WalkConfig {
                walks_per_node: params.walks_per_node.unwrap_or(base.walks_per_node),
                walk_length: params.walk_length.unwrap_or(base.walk_length),
                weight_norm: if method == Method::DeepwalkLog {
                    WeightNorm::Log
                } else {
                    WeightNorm::Id
                },
                seed,
            };
            plan.sgns = Some(sgns_for(SgnsConfig::deepwalk(walk.walk_length)));
            plan.walk = Some(walk);
        }
        Method::Verse => {
            let base = VerseConfig::default();
            plan.verse = Some(VerseConfig {
                dim: params.dim.unwrap_or(base.dim),
                negatives: params.negatives.unwrap_or(base.negatives),
                learning_rate: params.learning_rate.unwrap_or(base.learning_rate),
                samples: params.samples.unwrap_or(base.samples),
                weighted: params.weighted_positives.unwrap_or(base.weighted),
                seed,
                workers,
            });
        }
    }
    Ok(plan)
}

/// Keeps the vocabulary entries with frequency at least `min_count`. Since
/// indices are ordered by descending frequency, this is a prefix and no
/// remapping is needed beyond dropping the removed indices.
fn restrict_vocabulary(vocab: &Vocabulary, corpus: &IndexedCorpus, min_count: u64) -> (Vec<String>, Vec<Vec<u32>>) {
    let keep = vocab
        .entries()
        .iter()
        .take_while(|e| e.frequency >= min_count)
        .count();
    let keys: Vec<String> = vocab.entries()[..keep].iter().map(|e| e.key.clone()).collect();
    let sentences = corpus
        .sentences()
        .into_iter()
        .map(|s| s.into_iter().filter(|&i| (i as usize) < keep).collect())
        .collect();
    (keys, sentences)
}

/// Runs a plan and writes its embedding file and manifest.
pub fn execute_plan(plan: &TrainPlan, manifest_path: &Path) -> anyhow::Result<Manifest> {
    let start = Instant::now();
    let (model, stats, keys): (EmbeddingModel, TrainStats, Vec<String>) = if plan.method.uses_graph() {
        let path = plan.graph.as_ref().unwrap();
        let (keys, graph) = CoocGraph::read_tsv(open(path)?)
            .with_context(|| format!("reading graph {}", path.display()))?;
        ensure!(graph.edge_count() > 0, "graph {} has no edges", path.display());
        let (model, stats) = match plan.method {
            Method::Verse => verse_train(&graph, plan.verse.as_ref().unwrap())?,
            _ => {
                let wcfg = plan.walk.as_ref().unwrap();
                let scfg = plan.sgns.as_ref().unwrap();
                if let Some(p) = &plan.walks {
                    let walks = generate_walks(&graph, wcfg, plan.workers)?;
                    let mut w = create(p)?;
                    write_walks(&walks, &keys, &mut w)?;
                    w.flush()?;
                }
                deepwalk_train(&graph, wcfg, scfg)?
            }
        };
        (model, stats, keys)
    } else {
        let corpus = load_corpus(plan.corpus.as_ref().unwrap())?;
        ensure!(
            corpus.mode == plan.pipeline,
            "pipeline `{}` does not match the `{}` corpus cache",
            plan.pipeline,
            corpus.mode
        );
        let vocab = load_vocab(plan.vocab.as_ref().unwrap())?;
        let (keys, sentences) = restrict_vocabulary(&vocab, &corpus, plan.min_count.unwrap_or(1));
        ensure!(!keys.is_empty(), "no vocabulary entry reaches min_count");
        let (model, stats) = match plan.method {
            Method::W2v => train_sgns(&sentences, keys.len(), plan.sgns.as_ref().unwrap())?,
            _ => {
                let cfg = plan.glove.as_ref().unwrap();
                let docs = [crate::corpus::IndexedDocument {
                    id: String::new(),
                    sentences,
                }];
                let matrix = accumulate_glove_counts(&docs, cfg.window, plan.workers)?;
                train_glove(&matrix, keys.len(), cfg)?
            }
        };
        (model, stats, keys)
    };
    let embeddings = model.publish(&keys)?;
    embeddings.save(&plan.output, plan.binary)?;
    let manifest = Manifest {
        plan: plan.clone(),
        wall_time_secs: start.elapsed().as_secs_f64(),
        final_loss: stats.final_loss(),
        updates: stats.updates,
        vocabulary: keys.len(),
    };
    let mut w = create(manifest_path)?;
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w)?;
    w.flush()?;
    Ok(manifest)
}

pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut plan = match &a.replay {
        Some(p) => {
            let manifest: Manifest = serde_json::from_reader(open(p)?)
                .with_context(|| format!("reading manifest {}", p.display()))?;
            manifest.plan
        }
        None => resolve_plan(a)?,
    };
    if a.replay.is_some() {
        if let Some(o) = &a.out {
            plan.output = o.clone();
        }
    }
    let manifest_path = a.manifest.clone().unwrap_or_else(|| {
        let mut p = plan.output.clone().into_os_string();
        p.push(".manifest.json");
        PathBuf::from(p)
    });
    let manifest = execute_plan(&plan, &manifest_path)?;
    writeln!(
        out,
        "method={} vectors={} final_loss={} output={}",
        plan.method,
        manifest.vocabulary,
        manifest.final_loss.map_or("none".to_string(), |l| format!("{l:.6}")),
        plan.output.display()
    )?;
    Ok(())
}

fn load_embeddings(path: &Path) -> anyhow::Result<Embeddings> {
    Embeddings::load(path).with_context(|| format!("loading embeddings {}", path.display()))
}

fn file_name(path: &Path) -> String {
    path.display().to_string()
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut emb = load_embeddings(&a.model)?;
    let seed = match a.seed {
        Some(s) => s,
        None => seed_from_env()?.unwrap_or(DEFAULT_SEED),
    };
    let mut report = EvalReport {
        model: file_name(&a.model),
        ..EvalReport::default()
    };
    report.seeds.insert("clustering".into(), seed);

    enum Loaded {
        Rel(RelatednessDataset),
        Ana(AnalogyDataset),
        Cat(CategorizationDataset),
    }
    let mut loaded = Vec::new();
    for spec in &a.tasks {
        let (path, data) = match spec {
            TaskSpec::Relatedness(p) => (p, Loaded::Rel(RelatednessDataset::load(p)?)),
            TaskSpec::Analogy(p) => (p, Loaded::Ana(AnalogyDataset::load(p)?)),
            TaskSpec::Categorization(p) => (p, Loaded::Cat(CategorizationDataset::load(p)?)),
        };
        loaded.push((path, data));
    }
    if a.compose_multiword {
        let mut keys: Vec<&str> = Vec::new();
        for (_, data) in &loaded {
            match data {
                Loaded::Rel(d) => keys.extend(d.pairs.iter().flat_map(|p| [p.word1.as_str(), p.word2.as_str()])),
                Loaded::Ana(d) => keys.extend(d.items.iter().flat_map(|i| [&i.a, &i.b, &i.x, &i.y]).map(String::as_str)),
                Loaded::Cat(d) => keys.extend(d.items.iter().map(|(k, _)| k.as_str())),
            }
        }
        let (extended, added) = extend_with_compositions(&emb, keys)?;
        log::info!("{added} multi-word keys composed");
        emb = extended;
    }

    for (path, data) in &loaded {
        let dataset = file_name(path);
        let mut metrics = BTreeMap::new();
        let (evaluated, skipped, task) = match data {
            Loaded::Rel(d) => {
                let r = relatedness_eval(&emb, d, a.correlation)
                    .with_context(|| format!("relatedness task {dataset}"))?;
                let name = match a.correlation {
                    Correlation::Pearson => "pearson",
                    Correlation::Spearman => "spearman",
                };
                metrics.insert(name.to_string(), r.r);
                (r.evaluated, r.skipped, "relatedness")
            }
            Loaded::Ana(d) => {
                let r = analogy_eval(&emb, d, false, a.convention)
                    .with_context(|| format!("analogy task {dataset}"))?;
                metrics.insert("accuracy".into(), r.accuracy);
                if a.typed {
                    let t = analogy_eval(&emb, d, true, a.convention)?;
                    metrics.insert("typed_accuracy".into(), t.accuracy);
                }
                (r.evaluated, r.skipped, "analogy")
            }
            Loaded::Cat(d) => {
                let methods: &[(ClusterMethod, &str)] = match a.cluster {
                    ClusterChoice::Kmeans => &[(ClusterMethod::KMeans, "purity_kmeans")],
                    ClusterChoice::Agglomerative => &[(ClusterMethod::Agglomerative, "purity_agglomerative")],
                    ClusterChoice::Both => &[
                        (ClusterMethod::KMeans, "purity_kmeans"),
                        (ClusterMethod::Agglomerative, "purity_agglomerative"),
                    ],
                };
                let mut counts = (0, 0);
                for &(method, name) in methods {
                    let r = categorization_eval(&emb, d, method, seed)
                        .with_context(|| format!("categorization task {dataset}"))?;
                    metrics.insert(name.to_string(), r.purity);
                    counts = (r.evaluated, r.skipped);
                }
                (counts.0, counts.1, "categorization")
            }
        };
        report.tasks.push(TaskReport {
            task: task.to_string(),
            dataset,
            metrics,
            evaluated,
            skipped,
        });
    }
    let json = serde_json::to_string_pretty(&report)?;
    match &a.out {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{json}")?;
            w.flush()?;
        }
        None => writeln!(out, "{json}")?,
    }
    Ok(())
}

fn parse_type(s: &str) -> anyhow::Result<EntityType> {
    s.to_ascii_uppercase()
        .parse()
        .map_err(|_| anyhow!("unknown entity type `{s}` (expected PER, LOC, ORG or DATE)"))
}

pub fn cmd_neighbors(a: &NeighborsArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let emb = load_embeddings(&a.model)?;
    let filter = a.type_filter.as_deref().map(parse_type).transpose()?;
    let found = match (&a.query, &a.compose) {
        (Some(q), _) => eval::nearest_neighbors(&emb, q, a.k, filter)?,
        (None, Some(phrase)) => {
            let words: Vec<String> = phrase.split_whitespace().map(normalize_key).collect();
            let (v, skipped) = eval::compose_multiword(&emb, &words)?;
            if skipped > 0 {
                log::warn!("{skipped} unknown words left out of the composition");
            }
            let exclude: Vec<usize> = words.iter().filter_map(|w| emb.index_of(w)).collect();
            eval::neighbors_of_vector(&emb, &v, a.k, filter, &exclude)?
        }
        (None, None) => bail!("no query given"),
    };
    writeln!(out, "rank\tkey\tkind\tcosine")?;
    for (rank, n) in found.iter().enumerate() {
        let kind = emb
            .entity_type(n.index)
            .map_or("term".to_string(), |t| t.to_string());
        writeln!(out, "{}\t{}\t{}\t{:.4}", rank + 1, n.key, kind, n.cosine)?;
    }
    Ok(())
}

pub fn cmd_export_projection(a: &ProjectionArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let emb = load_embeddings(&a.model)?;
    let keys: Vec<String> = open(&a.keys)?
        .lines()
        .collect::<io::Result<Vec<_>>>()?
        .into_iter()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty())
        .collect();
    let rows = eval::export_projection(&emb, &keys)?;
    let write = |w: &mut dyn Write| -> anyhow::Result<()> {
        writeln!(w, "key\tpc1\tpc2")?;
        for r in &rows {
            writeln!(w, "{}\t{}\t{}", r.key, r.pc1, r.pc2)?;
        }
        Ok(())
    };
    match &a.out {
        Some(p) => {
            let mut w = create(p)?;
            write(&mut w)?;
            w.flush()?;
        }
        None => write(out)?,
    }
    Ok(())
}
