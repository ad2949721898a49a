//! The `arxivnet` command line.
//!
//! One subcommand per pipeline stage. Settings come from flags, then from
//! an optional TOML file given with `--config`; flags win. Relative paths
//! in the file are taken relative to the file's directory. Data goes to
//! stdout or `--out`, logs to stderr.
//!
//! Exit codes: 0 success, 1 operational error, 2 usage error, 3 bad
//! configuration. Failures print one line, `error[<kind>]: <message>`.

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::arxiv_id::{scan_text_with, ArxivId, ParseOptions, Scheme};
use crate::authors::split_authors;
use crate::citegraph::{self, build_graph, read_edges, stats_report, write_edges};
use crate::corpus::{self, build_index, convert_tree, corpus_stats};
use crate::learn::{
    self, ablation_run, align_graph, build_category_matrix, build_cocitation_matrix, evaluate,
    fallback_embed, load_embeddings, parse_ablation_spec, propagate, render_ablation_table, write_embeddings,
    CategoryMatrix, Channel, ChannelFeatures, ChannelSet, ClassifierModel, DatasetSplit, FeatureMatrix, Hyper,
    LearnError, SplitFile, EMBED_DIM,
};
use crate::oai_harvest::{self, field_counts, read_archive, write_archive, ArticleMetadata, HarvestConfig, Harvester};
use crate::par::{self, Exec};

#[derive(Debug, Parser)]
#[command(name = "arxivnet", version, about = "arXiv metadata, full-text corpus, citation graph and classification pipeline")]
pub struct Cli {
    /// TOML configuration file; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output format of reports
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Worker threads for parallel stages (0 = all cores, 1 = sequential)
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// More log output on stderr (-v info, -vv debug); RUST_LOG overrides
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
    /// Harvest metadata over OAI-PMH into a line-delimited JSON archive
    Harvest(HarvestArgs),
    /// Count records with each metadata field present
    Counts(MetaArgs),
    /// Convert source documents to text with an external command
    Convert(ConvertArgs),
    /// Word and byte totals of the text corpus
    CorpusStats(CorpusStatsArgs),
    /// Split author strings into [keyname, forenames, suffix] triples
    AuthorsSplit(AuthorsArgs),
    /// Validate an identifier and print its canonical form
    Idparse(IdparseArgs),
    /// List identifiers found in a text, as offset<TAB>id
    Idscan(IdscanArgs),
    /// Extract the citation graph from the text corpus
    BuildGraph(BuildGraphArgs),
    /// Summary statistics and power-law fits of a citation graph
    GraphStats(GraphStatsArgs),
    /// Shuffle articles into train and test sets
    Split(SplitArgs),
    /// Compute feature channels (T, A, F, C) for every article
    Featurize(FeaturizeArgs),
    /// Train a classifier on one channel combination
    Train(TrainArgs),
    /// Top-n accuracy and perplexity of a model on the test set
    Evaluate(EvaluateArgs),
    /// Train and evaluate one model per channel combination
    Ablation(AblationArgs),
}

#[derive(Debug, Args)]
pub struct HarvestArgs {
    /// OAI-PMH base URL
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Lower datestamp bound, YYYY-MM-DD
    #[arg(long)]
    pub from: Option<String>,
    /// Upper datestamp bound, YYYY-MM-DD
    #[arg(long)]
    pub until: Option<String>,
    /// OAI set, e.g. physics:hep-th
    #[arg(long)]
    pub set: Option<String>,
    /// Seconds to wait between requests
    #[arg(long)]
    pub delay: Option<f64>,
    /// Retries per request on network errors, 429 and 5xx
    #[arg(long)]
    pub max_retries: Option<u32>,
    /// First retry backoff in seconds, doubled per retry
    #[arg(long)]
    pub backoff: Option<f64>,
    /// Output archive
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetaArgs {
    /// Metadata archive
    #[arg(long, value_name = "FILE")]
    pub meta: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Directory of identifier-named source documents
    #[arg(long, value_name = "DIR")]
    pub src: Option<PathBuf>,
    /// Corpus root to write text files into
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Converter command with {in} and {out} placeholders, e.g. "pdftotext {in} {out}"
    #[arg(long)]
    pub command: Option<String>,
}

#[derive(Debug, Args)]
pub struct CorpusStatsArgs {
    #[arg(long, value_name = "FILE")]
    pub meta: Option<PathBuf>,
    /// Corpus root
    #[arg(long, value_name = "DIR")]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuthorsArgs {
    #[arg(long, value_name = "FILE")]
    pub meta: Option<PathBuf>,
    /// Output file (JSON lines); stdout if absent
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IdparseArgs {
    pub id: String,
    /// Accept unknown archive names in old-style identifiers
    #[arg(long)]
    pub lax: bool,
}

#[derive(Debug, Args)]
pub struct IdscanArgs {
    /// Text file; stdin if absent
    pub file: Option<PathBuf>,
    /// Accept unknown archive names in old-style identifiers
    #[arg(long)]
    pub lax: bool,
}

#[derive(Debug, Args)]
pub struct BuildGraphArgs {
    #[arg(long, value_name = "FILE")]
    pub meta: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub corpus: Option<PathBuf>,
    /// Edge file to write
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Gzip the edge file
    #[arg(long)]
    pub gzip: bool,
}

#[derive(Debug, Args)]
pub struct GraphStatsArgs {
    /// Edge file (plain or gzip)
    #[arg(long, value_name = "FILE")]
    pub edges: Option<PathBuf>,
    /// Name in the first table column
    #[arg(long, default_value = "arXiv")]
    pub dataset: String,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long, value_name = "FILE")]
    pub meta: Option<PathBuf>,
    /// Shuffle seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Size of the training set
    #[arg(long)]
    pub n_train: Option<usize>,
    /// Split file to write
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long, value_name = "FILE")]
    pub meta: Option<PathBuf>,
    /// Corpus root, needed for F
    #[arg(long, value_name = "DIR")]
    pub corpus: Option<PathBuf>,
    /// Edge file, needed for C
    #[arg(long, value_name = "FILE")]
    pub edges: Option<PathBuf>,
    /// Split file, needed for C
    #[arg(long, value_name = "FILE")]
    pub split: Option<PathBuf>,
    /// Channels to compute, comma separated
    #[arg(long, default_value = "T,A,F,C")]
    pub channels: String,
    /// Higher-order co-citation coefficients a,b,... for MC + aM²C + bM³C
    #[arg(long, value_delimiter = ',')]
    pub propagate: Vec<f64>,
    /// Directory for the per-channel feature files
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HyperArgs {
    /// Passes over the training set
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Quadratic penalty on weights and biases
    #[arg(long)]
    pub l2: Option<f64>,
    /// Minimum epoch loss improvement
    #[arg(long)]
    pub tol: Option<f64>,
    /// Training seed; defaults to the split seed
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "FILE")]
    pub meta: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub split: Option<PathBuf>,
    /// Directory written by featurize
    #[arg(long, value_name = "DIR")]
    pub features: Option<PathBuf>,
    /// Channel combination, e.g. All, All-F, T+A
    #[arg(long, default_value = "All")]
    pub channels: String,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Model file to write
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    pub meta: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub split: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub features: Option<PathBuf>,
    /// Model file written by train
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Report file; stdout if absent
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblationArgs {
    #[arg(long, value_name = "FILE")]
    pub meta: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub split: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub features: Option<PathBuf>,
    /// Channel combinations, comma separated
    #[arg(long)]
    pub spec: Option<String>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Report file; stdout if absent
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Contents of the `--config` file.
#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub paths: PathsConfig,
    pub harvest: HarvestSection,
    pub convert: ConvertSection,
    pub learn: LearnSection,
}

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub metadata: Option<PathBuf>,
    pub sources: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub split: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub reports: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarvestSection {
    pub endpoint: Option<String>,
    pub from: Option<String>,
    pub until: Option<String>,
    pub set: Option<String>,
    pub delay_secs: Option<f64>,
    pub max_retries: Option<u32>,
    pub backoff_secs: Option<f64>,
}

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvertSection {
    pub command: Option<String>,
}

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnSection {
    pub n_train: Option<usize>,
    pub epochs: Option<usize>,
    pub l2: Option<f64>,
    pub tol: Option<f64>,
    pub channels: Option<String>,
    pub ablation: Option<String>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let p = &mut cfg.paths;
        for slot in [
            &mut p.metadata,
            &mut p.sources,
            &mut p.corpus,
            &mut p.edges,
            &mut p.split,
            &mut p.features,
            &mut p.model,
            &mut p.reports,
        ] {
            if let Some(rel) = slot.as_ref().filter(|p| p.is_relative()) {
                *slot = Some(base.join(rel));
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Op { kind: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Op { .. } => 1,
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
        }
    }

    fn op(kind: &'static str, e: impl Display) -> Self {
        CliError::Op { kind, message: e.to_string() }
    }

    /// The single stderr line for this error.
    pub fn line(&self) -> String {
        let (kind, msg) = match self {
            CliError::Usage(m) => ("usage", m.as_str()),
            CliError::Config(m) => ("config", m.as_str()),
            CliError::Op { kind, message } => (*kind, message.as_str()),
        };
        format!("error[{kind}]: {}", msg.split_whitespace().collect::<Vec<_>>().join(" "))
    }
}

macro_rules! op_error {
    ($($ty:ty => $kind:literal),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::op($kind, e)
            }
        })*
    };
}

op_error!(
    oai_harvest::ArchiveError => "archive",
    oai_harvest::HarvestError => "harvest",
    citegraph::GraphError => "graph",
    corpus::CorpusError => "corpus",
    crate::arxiv_id::IdError => "id",
    io::Error => "io",
    serde_json::Error => "json",
);

impl From<LearnError> for CliError {
    fn from(e: LearnError) -> Self {
        match e {
            LearnError::Config(m) => CliError::Config(m),
            e => CliError::op("learn", e),
        }
    }
}

/// Parses `args` (program name first), runs the command, and returns the
/// process exit code. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            eprintln!("{}", CliError::Usage(first).line());
            return 2;
        }
    };
    init_logging(cli.verbose);
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.line());
            e.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .try_init();
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let jobs = cli.jobs.or(cfg.jobs).unwrap_or(0);
    let exec = if jobs == 1 { Exec::Sequential } else { Exec::Parallel };
    let ctx = Ctx { cfg: &cfg, format: cli.format, exec };
    par::with_jobs(jobs, || dispatch(&ctx, &cli.command))
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    format: Format,
    exec: Exec,
}

fn need<T>(flag: Option<T>, file: Option<T>, flag_name: &str, key: &str) -> Result<T, CliError> {
    flag.or(file).ok_or_else(|| CliError::Config(format!("missing {flag_name} (or `{key}` in the config file)")))
}

fn need_path(flag: &Option<PathBuf>, file: &Option<PathBuf>, flag_name: &str, key: &str) -> Result<PathBuf, CliError> {
    need(flag.clone(), file.clone(), flag_name, key)
}

/// Writes `text` to `out`, creating parent directories, or to stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => {
            ensure_parent(p)?;
            fs::write(p, text).map_err(|e| CliError::op("io", format!("{}: {e}", p.display())))
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn ensure_parent(p: &Path) -> Result<(), CliError> {
    match p.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(d) => fs::create_dir_all(d).map_err(|e| CliError::op("io", format!("{}: {e}", d.display()))),
        None => Ok(()),
    }
}

fn json_line<T: Serialize>(v: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string(v)? + "\n")
}

fn dispatch(ctx: &Ctx, command: &Command) -> Result<(), CliError> {
    match command {
        Command::Harvest(a) => cmd_harvest(ctx, a),
        Command::Counts(a) => cmd_counts(ctx, a),
        Command::Convert(a) => cmd_convert(ctx, a),
        Command::CorpusStats(a) => cmd_corpus_stats(ctx, a),
        Command::AuthorsSplit(a) => cmd_authors(ctx, a),
        Command::Idparse(a) => cmd_idparse(ctx, a),
        Command::Idscan(a) => cmd_idscan(ctx, a),
        Command::BuildGraph(a) => cmd_build_graph(ctx, a),
        Command::GraphStats(a) => cmd_graph_stats(ctx, a),
        Command::Split(a) => cmd_split(ctx, a),
        Command::Featurize(a) => cmd_featurize(ctx, a),
        Command::Train(a) => cmd_train(ctx, a),
        Command::Evaluate(a) => cmd_evaluate(ctx, a),
        Command::Ablation(a) => cmd_ablation(ctx, a),
    }
}

fn secs(v: f64, name: &str) -> Result<Duration, CliError> {
    Duration::try_from_secs_f64(v).map_err(|_| CliError::Config(format!("{name} must be a non-negative number of seconds")))
}

fn cmd_harvest(ctx: &Ctx, a: &HarvestArgs) -> Result<(), CliError> {
    let h = &ctx.cfg.harvest;
    let endpoint = need(a.endpoint.clone(), h.endpoint.clone(), "--endpoint", "harvest.endpoint")?;
    let out = need_path(&a.out, &ctx.cfg.paths.metadata, "--out", "paths.metadata")?;
    let mut config = HarvestConfig::new(endpoint);
    config.from_date = a.from.clone().or(h.from.clone());
    config.until_date = a.until.clone().or(h.until.clone());
    config.set = a.set.clone().or(h.set.clone());
    if let Some(d) = a.delay.or(h.delay_secs) {
        config.request_delay = secs(d, "delay")?;
    }
    if let Some(b) = a.backoff.or(h.backoff_secs) {
        config.backoff_base = secs(b, "backoff")?;
    }
    if let Some(r) = a.max_retries.or(h.max_retries) {
        config.max_retries = r;
    }

    let mut harvester = Harvester::new(config);
    let mut records: Vec<ArticleMetadata> = Vec::new();
    let mut failure = None;
    for r in harvester.by_ref() {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    ensure_parent(&out)?;
    let n = write_archive(records.iter(), &out)?;
    if let Some(e) = failure {
        log::warn!("harvest stopped early; {n} records written to {}", out.display());
        return Err(e.into());
    }
    log::info!("{n} records in {} requests", harvester.requests());
    #[derive(Serialize)]
    struct Summary {
        records: usize,
        requests: usize,
    }
    let summary = Summary { records: n, requests: harvester.requests() };
    match ctx.format {
        Format::Json => emit(None, &json_line(&summary)?),
        Format::Table => emit(None, &format!("records  {}\nrequests {}\n", summary.records, summary.requests)),
    }
}

fn load_meta(flag: &Option<PathBuf>, ctx: &Ctx) -> Result<Vec<ArticleMetadata>, CliError> {
    let path = need_path(flag, &ctx.cfg.paths.metadata, "--meta", "paths.metadata")?;
    Ok(read_archive(&path)?)
}

fn meta_ids(records: &[ArticleMetadata]) -> Vec<String> {
    records.iter().map(|r| r.id.clone()).collect()
}

fn cmd_counts(ctx: &Ctx, a: &MetaArgs) -> Result<(), CliError> {
    let records = load_meta(&a.meta, ctx)?;
    let report = field_counts(&records);
    match ctx.format {
        Format::Json => emit(None, &json_line(&report)?),
        Format::Table => emit(None, &report.render_table()),
    }
}

fn cmd_convert(ctx: &Ctx, a: &ConvertArgs) -> Result<(), CliError> {
    let src = need_path(&a.src, &ctx.cfg.paths.sources, "--src", "paths.sources")?;
    let out = need_path(&a.out, &ctx.cfg.paths.corpus, "--out", "paths.corpus")?;
    let template = need(a.command.clone(), ctx.cfg.convert.command.clone(), "--command", "convert.command")?;
    if !template.contains("{in}") || !template.contains("{out}") {
        return Err(CliError::Config("converter command needs {in} and {out} placeholders".into()));
    }
    let report = convert_tree(&src, &out, &template, ctx.exec);
    for (id, msg) in &report.failed {
        log::warn!("{id}: {msg}");
    }
    match ctx.format {
        Format::Json => emit(None, &json_line(&report)?),
        Format::Table => emit(
            None,
            &format!(
                "converted {}\nempty     {}\nfailed    {}\nskipped   {}\n",
                report.converted.len(),
                report.empty.len(),
                report.failed.len(),
                report.skipped.len()
            ),
        ),
    }
}

fn cmd_corpus_stats(ctx: &Ctx, a: &CorpusStatsArgs) -> Result<(), CliError> {
    let records = load_meta(&a.meta, ctx)?;
    let root = need_path(&a.corpus, &ctx.cfg.paths.corpus, "--corpus", "paths.corpus")?;
    let index = build_index(&root, records.iter().map(|r| r.id.as_str()))?;
    let stats = corpus_stats(&index, ctx.exec)?;
    #[derive(Serialize)]
    struct Report {
        #[serde(flatten)]
        stats: corpus::CorpusStats,
        missing: usize,
    }
    let report = Report { stats, missing: index.missing.len() };
    match ctx.format {
        Format::Json => emit(None, &json_line(&report)?),
        Format::Table => emit(
            None,
            &format!(
                "documents {}\nwords     {}\nbytes     {}\nmissing   {}\n",
                stats.doc_count, stats.total_words, stats.total_bytes, report.missing
            ),
        ),
    }
}

fn cmd_authors(ctx: &Ctx, a: &AuthorsArgs) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Row<'a> {
        id: &'a str,
        authors_parsed: Vec<[String; 3]>,
    }
    let records = load_meta(&a.meta, ctx)?;
    let parsed: Vec<Vec<[String; 3]>> =
        par::map(ctx.exec, &records, |r| split_authors(&r.authors).iter().map(|n| n.to_triple()).collect());
    let mut out = String::new();
    for (r, authors_parsed) in records.iter().zip(parsed) {
        out += &json_line(&Row { id: &r.id, authors_parsed })?;
    }
    emit(a.out.as_deref(), &out)
}

fn id_options(lax: bool) -> ParseOptions {
    ParseOptions { lax_archives: lax, ..ParseOptions::default() }
}

fn cmd_idparse(ctx: &Ctx, a: &IdparseArgs) -> Result<(), CliError> {
    let id = ArxivId::parse_with(a.id.trim(), &id_options(a.lax))?;
    match ctx.format {
        Format::Table => emit(None, &format!("{}\n", id.canonical(true))),
        Format::Json => {
            #[derive(Serialize)]
            struct Parsed<'a> {
                id: String,
                scheme: &'a str,
                archive: Option<&'a str>,
                subject_class: Option<&'a str>,
                yymm: &'a str,
                number: &'a str,
                version: Option<u32>,
            }
            let p = Parsed {
                id: id.canonical(true),
                scheme: if id.scheme() == Scheme::New { "new" } else { "old" },
                archive: id.archive(),
                subject_class: id.subject_class(),
                yymm: id.yymm(),
                number: id.number(),
                version: id.version(),
            };
            emit(None, &json_line(&p)?)
        }
    }
}

fn cmd_idscan(ctx: &Ctx, a: &IdscanArgs) -> Result<(), CliError> {
    let mut bytes = Vec::new();
    match &a.file {
        Some(p) => bytes = fs::read(p).map_err(|e| CliError::op("io", format!("{}: {e}", p.display())))?,
        None => {
            io::stdin().read_to_end(&mut bytes)?;
        }
    }
    let text = String::from_utf8_lossy(&bytes);
    let matches = scan_text_with(&text, &id_options(a.lax));
    let mut out = String::new();
    match ctx.format {
        Format::Table => {
            for m in &matches {
                out += &format!("{}\t{}\n", m.offset, m.id.canonical(true));
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Found {
                offset: usize,
                id: String,
            }
            let found: Vec<Found> =
                matches.iter().map(|m| Found { offset: m.offset, id: m.id.canonical(true) }).collect();
            out = json_line(&found)?;
        }
    }
    emit(None, &out)
}

fn cmd_build_graph(ctx: &Ctx, a: &BuildGraphArgs) -> Result<(), CliError> {
    let records = load_meta(&a.meta, ctx)?;
    let root = need_path(&a.corpus, &ctx.cfg.paths.corpus, "--corpus", "paths.corpus")?;
    let out = need_path(&a.out, &ctx.cfg.paths.edges, "--out", "paths.edges")?;
    let ids = meta_ids(&records);
    let index = build_index(&root, ids.iter().map(String::as_str))?;
    let g = build_graph(&index, &ids, ctx.exec)?;
    ensure_parent(&out)?;
    write_edges(&g, &out, a.gzip)?;
    log::info!("{} nodes, {} edges written to {}", g.n_nodes(), g.n_edges(), out.display());
    Ok(())
}

fn cmd_graph_stats(ctx: &Ctx, a: &GraphStatsArgs) -> Result<(), CliError> {
    let path = need_path(&a.edges, &ctx.cfg.paths.edges, "--edges", "paths.edges")?;
    let g = read_edges(&path)?;
    let stats = stats_report(&g, ctx.exec)?;
    match ctx.format {
        Format::Json => emit(None, &json_line(&stats.row())?),
        Format::Table => emit(None, &stats.render_table(&a.dataset)),
    }
}

fn cmd_split(ctx: &Ctx, a: &SplitArgs) -> Result<(), CliError> {
    let records = load_meta(&a.meta, ctx)?;
    let seed = need(a.seed, ctx.cfg.seed, "--seed", "seed")?;
    let n_train = need(a.n_train, ctx.cfg.learn.n_train, "--n-train", "learn.n_train")?;
    let out = need_path(&a.out, &ctx.cfg.paths.split, "--out", "paths.split")?;
    let ids = meta_ids(&records);
    let split = DatasetSplit::new(ids.len(), n_train, seed)?;
    emit(Some(&out), &json_line(&SplitFile::new(&split, &ids))?)?;
    log::info!("{} train, {} test", split.train().len(), split.test().len());
    Ok(())
}

fn load_split(flag: &Option<PathBuf>, ctx: &Ctx, ids: &[String]) -> Result<DatasetSplit, CliError> {
    let path = need_path(flag, &ctx.cfg.paths.split, "--split", "paths.split")?;
    let text = fs::read_to_string(&path).map_err(|e| CliError::op("io", format!("{}: {e}", path.display())))?;
    let file: SplitFile =
        serde_json::from_str(&text).map_err(|e| CliError::op("split", format!("{}: {e}", path.display())))?;
    Ok(file.resolve(ids)?)
}

fn parse_channels(spec: &str) -> Result<Vec<Channel>, CliError> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let c = Channel::from_letter(part)
            .ok_or_else(|| CliError::Config(format!("unknown feature channel {part:?} (expected T, A, F or C)")))?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out.sort();
    Ok(out)
}

fn channel_file(dir: &Path, c: Channel) -> PathBuf {
    dir.join(format!("{}.tsv", c.letter()))
}

fn cmd_featurize(ctx: &Ctx, a: &FeaturizeArgs) -> Result<(), CliError> {
    let records = load_meta(&a.meta, ctx)?;
    let out = need_path(&a.out, &ctx.cfg.paths.features, "--out", "paths.features")?;
    let channels = parse_channels(&a.channels)?;
    fs::create_dir_all(&out).map_err(|e| CliError::op("io", format!("{}: {e}", out.display())))?;
    let ids = meta_ids(&records);
    let embed = |texts: Vec<Option<String>>| -> Result<FeatureMatrix, CliError> {
        let rows = par::map(ctx.exec, &texts, |t| t.as_deref().map_or_else(|| vec![0.0; EMBED_DIM], fallback_embed));
        Ok(FeatureMatrix::from_rows(EMBED_DIM, rows)?)
    };
    for c in channels {
        let m = match c {
            Channel::Title => embed(records.iter().map(|r| Some(r.title.clone())).collect())?,
            Channel::Abstract => embed(records.iter().map(|r| Some(r.abstract_text.clone())).collect())?,
            Channel::Fulltext => {
                let root = need_path(&a.corpus, &ctx.cfg.paths.corpus, "--corpus", "paths.corpus")?;
                let index = build_index(&root, ids.iter().map(String::as_str))?;
                let texts = par::map(ctx.exec, &ids, |id| {
                    let path = index.path(&ArxivId::parse(id).ok()?.canonical(false))?;
                    fs::read(path).ok().map(|b| String::from_utf8_lossy(&b).into_owned())
                });
                log::info!("full text for {} of {} articles", texts.iter().filter(|t| t.is_some()).count(), ids.len());
                embed(texts)?
            }
            Channel::Cocitation => {
                let edges = need_path(&a.edges, &ctx.cfg.paths.edges, "--edges", "paths.edges")?;
                let g = align_graph(&read_edges(&edges)?, &ids)?;
                let split = load_split(&a.split, ctx, &ids)?;
                let cats = build_category_matrix(&records)?;
                let m = build_cocitation_matrix(&g, &split, ctx.exec)?;
                propagate(&m, &cats, &a.propagate, ctx.exec)?
            }
        };
        let path = channel_file(&out, c);
        write_embeddings(&path, &ids, &m)?;
        log::info!("channel {} ({} columns) written to {}", c.letter(), m.cols(), path.display());
    }
    Ok(())
}

fn load_features(dir: &Path, sets: &[ChannelSet], ids: &[String], cats: &CategoryMatrix) -> Result<ChannelFeatures, CliError> {
    let mut f = ChannelFeatures::default();
    for c in Channel::ALL {
        if !sets.iter().any(|s| s.contains(c)) {
            continue;
        }
        let dim = if c == Channel::Cocitation { cats.n_categories() } else { EMBED_DIM };
        let path = channel_file(dir, c);
        if !path.exists() {
            return Err(CliError::Config(format!("{} not found; run featurize with channel {}", path.display(), c.letter())));
        }
        f.set(c, load_embeddings(&path, ids, dim)?);
    }
    Ok(f)
}

fn hyper(ctx: &Ctx, a: &HyperArgs, split: &DatasetSplit) -> Result<Hyper, CliError> {
    let l = &ctx.cfg.learn;
    let d = Hyper::default();
    let h = Hyper {
        epochs: a.epochs.or(l.epochs).unwrap_or(d.epochs),
        l2: a.l2.or(l.l2).unwrap_or(d.l2),
        tol: a.tol.or(l.tol).unwrap_or(d.tol),
        n_iter_no_change: d.n_iter_no_change,
        seed: a.seed.unwrap_or(split.seed()),
    };
    if h.epochs == 0 || h.l2.is_nan() || h.l2 <= 0.0 || h.l2.is_infinite() || h.tol.is_nan() || h.tol < 0.0 {
        return Err(CliError::Config(format!("invalid training settings: epochs {}, l2 {}, tol {}", h.epochs, h.l2, h.tol)));
    }
    Ok(h)
}

struct LearnInputs {
    cats: CategoryMatrix,
    split: DatasetSplit,
    features: ChannelFeatures,
}

fn learn_inputs(
    ctx: &Ctx,
    meta: &Option<PathBuf>,
    split: &Option<PathBuf>,
    features: &Option<PathBuf>,
    sets: &[ChannelSet],
) -> Result<LearnInputs, CliError> {
    let records = load_meta(meta, ctx)?;
    let ids = meta_ids(&records);
    let cats = build_category_matrix(&records)?;
    let split = load_split(split, ctx, &ids)?;
    let dir = need_path(features, &ctx.cfg.paths.features, "--features", "paths.features")?;
    let features = load_features(&dir, sets, &ids, &cats)?;
    Ok(LearnInputs { cats, split, features })
}

fn cmd_train(ctx: &Ctx, a: &TrainArgs) -> Result<(), CliError> {
    let set: ChannelSet = a.channels.parse()?;
    let out = need_path(&a.out, &ctx.cfg.paths.model, "--out", "paths.model")?;
    let inp = learn_inputs(ctx, &a.meta, &a.split, &a.features, &[set])?;
    let h = hyper(ctx, &a.hyper, &inp.split)?;
    let x = inp.features.assemble(set)?;
    let model = learn::train(&x, &inp.cats, &inp.split, &h, &set.to_string())?;
    ensure_parent(&out)?;
    model.save(&out)?;
    log::info!("{} epochs, final loss {:.6}", model.summary.epochs_run, model.summary.final_loss);
    Ok(())
}

fn metrics_table(features: &str, m: &learn::EvalMetrics) -> String {
    render_ablation_table(&[learn::AblationRow { features: features.to_string(), dim: 0, metrics: *m }])
}

fn cmd_evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<(), CliError> {
    let path = need_path(&a.model, &ctx.cfg.paths.model, "--model", "paths.model")?;
    let model = ClassifierModel::load(&path)?;
    let set: ChannelSet = model.channels.parse()?;
    let inp = learn_inputs(ctx, &a.meta, &a.split, &a.features, &[set])?;
    let x = inp.features.assemble(set)?;
    let m = evaluate(&model, &x, &inp.cats, &inp.split, ctx.exec)?;
    let text = match ctx.format {
        Format::Json => json_line(&m)?,
        Format::Table => metrics_table(&model.channels, &m),
    };
    emit(a.out.as_deref(), &text)
}

fn cmd_ablation(ctx: &Ctx, a: &AblationArgs) -> Result<(), CliError> {
    let default_spec = "T,A,F,C,All,All-T,All-A,All-F,All-C".to_string();
    let spec = a.spec.clone().or(ctx.cfg.learn.ablation.clone()).unwrap_or(default_spec);
    let sets = parse_ablation_spec(&spec)?;
    let inp = learn_inputs(ctx, &a.meta, &a.split, &a.features, &sets)?;
    let h = hyper(ctx, &a.hyper, &inp.split)?;
    let rows = ablation_run(&inp.features, &inp.cats, &inp.split, &h, &sets, ctx.exec)?;
    let text = match ctx.format {
        Format::Json => json_line(&rows)?,
        Format::Table => render_ablation_table(&rows),
    };
    let out = a.out.clone().or_else(|| ctx.cfg.paths.reports.as_ref().map(|d| d.join("ablation.txt")));
    emit(out.as_deref(), &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_valid() {
        Cli::command().debug_assert();
    }

    #[test]
    fn error_lines_are_single_line() {
        let e = CliError::op("io", "a\nb   c");
        assert_eq!(e.line(), "error[io]: a b c");
        assert_eq!(e.exit_code(), 1);
        assert_eq!(CliError::Usage(String::new()).exit_code(), 2);
        assert_eq!(CliError::Config(String::new()).exit_code(), 3);
        assert_eq!(CliError::from(LearnError::Config("x".into())).exit_code(), 3);
    }

    #[test]
    fn config_paths_resolve_against_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "seed = 4\n[paths]\nmetadata = \"meta.jsonl\"\nedges = \"/abs/edges.tsv\"\n[learn]\nn_train = 10\n").unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.seed, Some(4));
        assert_eq!(cfg.paths.metadata, Some(dir.path().join("meta.jsonl")));
        assert_eq!(cfg.paths.edges, Some(PathBuf::from("/abs/edges.tsv")));
        assert_eq!(cfg.learn.n_train, Some(10));

        fs::write(&path, "[paths]\nmetdata = \"x\"\n").unwrap();
        assert!(matches!(PipelineConfig::load(&path), Err(CliError::Config(_))));
    }

    #[test]
    fn flags_beat_file() {
        assert_eq!(need(Some(1), Some(2), "--x", "x").unwrap(), 1);
        assert_eq!(need(None, Some(2), "--x", "x").unwrap(), 2);
        assert!(matches!(need::<u8>(None, None, "--x", "x"), Err(CliError::Config(_))));
    }

    #[test]
    fn channel_lists() {
        assert_eq!(parse_channels("C, T,T").unwrap(), [Channel::Title, Channel::Cocitation]);
        assert!(matches!(parse_channels("T,Q"), Err(CliError::Config(_))));
    }
}
