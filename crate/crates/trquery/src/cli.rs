//! The `trquery` command line.
//!
//! Data goes to the output stream and diagnostics to the error stream. Every
//! option can also be set through a `TRQ_*` environment variable.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use trquery_core::embedding::{
    train_with, EmbeddingConfig, Model, Norm, Scorer, UniformPlausibility,
};
use trquery_core::evalkit::{run_case, BenchReport, BenchRow, BenchSettings, PlausibilitySource};
use trquery_core::ntriples::ParseMode;
use trquery_core::qparser::{enumerate_subquery_trees, DEFAULT_MAX_EDGES};
use trquery_core::recommender::{
    parse_and_recommend, RecommendRequest, Recommendation, DEFAULT_PER_TREE_LIMIT,
    DEFAULT_THRESHOLD,
};
use trquery_core::sparql::{ask, count_distinct, evaluate_bgp, Query, QueryForm};
use trquery_core::Graph;

use crate::error::Error;
use crate::load::{load_graph, load_ntriples, load_query};
use crate::output::{
    write_json, BenchOut, Format, PlanOut, QueryReport, SelectOut, StatsOut, TimingsOut, TreeOut,
    SCHEMA_VERSION,
};
use crate::{embfile, manifest, snapshot, SystemClock};

#[derive(Debug, Parser)]
#[command(
    name = "trquery",
    version,
    about = "Approximate answers to SPARQL basic graph patterns, ranked with knowledge graph embeddings"
)]
pub struct Cli {
    /// Output format for result data.
    #[arg(long, global = true, value_enum, env = "TRQ_FORMAT", default_value_t = Format::Tsv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an N-Triples file and write a binary snapshot.
    Ingest(IngestArgs),
    /// Train embeddings on a graph and write an embedding file.
    Train(TrainArgs),
    /// Print the subquery trees of a query.
    Plan(PlanArgs),
    /// Recommend ranked approximate solutions for a query.
    Query(QueryArgs),
    /// Evaluate a query exactly: ASK, COUNT(DISTINCT) or SELECT.
    Ask(AskArgs),
    /// Print graph statistics.
    Stats(StatsArgs),
    /// Run a fact-deletion benchmark manifest.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// N-Triples input.
    pub input: PathBuf,
    /// Snapshot to write.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Skip malformed lines instead of failing.
    #[arg(long)]
    pub skip_invalid: bool,
}

#[derive(Debug, Args)]
pub struct StoreArg {
    /// Graph to load: a snapshot or an N-Triples file.
    #[arg(long, env = "TRQ_STORE")]
    pub store: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainOpts {
    /// transe, transh or transr.
    #[arg(long, env = "TRQ_MODEL", default_value = "transe")]
    pub model: String,
    #[arg(long, env = "TRQ_DIM", default_value_t = 50)]
    pub dim: usize,
    /// Relation space dimension (TransR only; defaults to --dim).
    #[arg(long, env = "TRQ_REL_DIM")]
    pub rel_dim: Option<usize>,
    #[arg(long, env = "TRQ_MARGIN", default_value_t = 1.0)]
    pub margin: f64,
    #[arg(long, env = "TRQ_LEARNING_RATE", default_value_t = 0.01)]
    pub learning_rate: f64,
    #[arg(long, env = "TRQ_EPOCHS", default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, env = "TRQ_BATCH_SIZE", default_value_t = 128)]
    pub batch_size: usize,
    /// Negative samples per positive triple.
    #[arg(long, env = "TRQ_NEGATIVES", default_value_t = 1)]
    pub negatives: usize,
    /// l1 or l2.
    #[arg(long, env = "TRQ_NORM", default_value = "l1")]
    pub norm: String,
    #[arg(long, env = "TRQ_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Also train on rdf:type triples.
    #[arg(long, env = "TRQ_INCLUDE_TYPES")]
    pub include_types: bool,
}

impl TrainOpts {
    pub fn config(&self) -> Result<EmbeddingConfig, Error> {
        let model: Model = self.model.parse()?;
        let norm: Norm = self.norm.parse()?;
        let config = EmbeddingConfig {
            model,
            dim: self.dim,
            rel_dim: self.rel_dim.unwrap_or(self.dim),
            margin: self.margin,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            negatives_per_positive: self.negatives,
            norm,
            seed: self.seed,
            include_type_triples: self.include_types,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub store: StoreArg,
    /// Embedding file to write.
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub opts: TrainOpts,
    /// Do not log the loss of every epoch.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// SPARQL query file.
    pub query: PathBuf,
    #[arg(long, env = "TRQ_MAX_EDGES", default_value_t = DEFAULT_MAX_EDGES)]
    pub max_edges: usize,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct RecommendOpts {
    #[arg(long, env = "TRQ_TOP_K", default_value_t = 10)]
    pub top_k: usize,
    /// Keep candidates with edit distance strictly below this.
    #[arg(long, env = "TRQ_THRESHOLD", default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: usize,
    #[arg(long, env = "TRQ_PER_TREE_LIMIT", default_value_t = DEFAULT_PER_TREE_LIMIT)]
    pub per_tree_limit: usize,
    #[arg(long, env = "TRQ_MAX_EDGES", default_value_t = DEFAULT_MAX_EDGES)]
    pub max_edges: usize,
}

impl RecommendOpts {
    fn request(&self, query: Query) -> RecommendRequest {
        RecommendRequest {
            query,
            threshold: self.threshold,
            top_k: self.top_k,
            per_tree_limit: self.per_tree_limit,
            max_edges: self.max_edges,
        }
    }
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    pub store: StoreArg,
    /// Embedding file; required unless --uniform is given.
    #[arg(long, env = "TRQ_EMBEDDINGS")]
    pub embeddings: Option<PathBuf>,
    /// SPARQL query file.
    pub query: PathBuf,
    #[command(flatten)]
    pub rec: RecommendOpts,
    /// Only print the projected variables.
    #[arg(long)]
    pub projected_only: bool,
    /// Score every missing triple with this constant instead of embeddings.
    #[arg(long)]
    pub uniform: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AskArgs {
    #[command(flatten)]
    pub store: StoreArg,
    /// SPARQL query file.
    pub query: PathBuf,
    /// Row limit for SELECT queries.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub store: StoreArg,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub store: StoreArg,
    /// Benchmark manifest.
    pub manifest: PathBuf,
    /// Use this embedding file for every case instead of retraining on
    /// each corrupted graph.
    #[arg(long, env = "TRQ_EMBEDDINGS")]
    pub embeddings: Option<PathBuf>,
    /// Constant plausibility baseline instead of embeddings.
    #[arg(long)]
    pub uniform: Option<f64>,
    #[command(flatten)]
    pub rec: RecommendOpts,
    #[command(flatten)]
    pub train: TrainOpts,
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(Error::Output(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Error> {
    match &cli.command {
        Command::Ingest(a) => ingest(a, err),
        Command::Train(a) => train_cmd(a, err),
        Command::Plan(a) => plan(a, cli.format, out),
        Command::Query(a) => query(a, cli.format, out, err),
        Command::Ask(a) => ask_cmd(a, cli.format, out),
        Command::Stats(a) => stats(a, cli.format, out),
        Command::Bench(a) => bench(a, cli.format, out, err),
    }
}

fn ingest(a: &IngestArgs, err: &mut dyn Write) -> Result<i32, Error> {
    let mode = if a.skip_invalid {
        ParseMode::Skip
    } else {
        ParseMode::Strict
    };
    let (g, report) = load_ntriples(&a.input, mode)?;
    for e in &report.skipped {
        writeln!(err, "warning: skipped {}: {e}", a.input.display())?;
    }
    snapshot::write(&g, &a.output)?;
    writeln!(
        err,
        "{} triples, {} terms ({} statements read, {} lines skipped)",
        g.len(),
        g.term_count(),
        report.statements,
        report.skipped.len()
    )?;
    Ok(0)
}

fn train_cmd(a: &TrainArgs, err: &mut dyn Write) -> Result<i32, Error> {
    let config = a.opts.config()?;
    let g = load_graph(&a.store.store)?;
    let epochs = config.epochs;
    let mut log_err = None;
    let outcome = train_with(&g, &config, |epoch, loss| {
        if !a.quiet && log_err.is_none() {
            if let Err(e) = writeln!(err, "epoch {}/{epochs} loss {loss:.6}", epoch + 1) {
                log_err = Some(e);
            }
        }
    })?;
    if let Some(e) = log_err {
        return Err(e.into());
    }
    embfile::write(&outcome.embeddings, &a.output)?;
    writeln!(
        err,
        "{}: {} entity and {} relation vectors written to {}",
        config.model,
        outcome.embeddings.entities().len(),
        outcome.embeddings.relations().len(),
        a.output.display()
    )?;
    Ok(0)
}

fn plan(a: &PlanArgs, format: Format, out: &mut dyn Write) -> Result<i32, Error> {
    let q = load_query(&a.query)?;
    let trees = enumerate_subquery_trees(&q, a.max_edges)?;
    let plan = PlanOut {
        schema_version: SCHEMA_VERSION,
        trees: trees
            .iter()
            .map(|t| TreeOut {
                patterns: t
                    .patterns(&q)
                    .iter()
                    .map(|p| p.display_with(&q.prefixes).to_string())
                    .collect(),
                dropped: t.dropped_origins.iter().map(|i| i + 1).collect(),
            })
            .collect(),
    };
    match format {
        Format::Tsv => plan.write_text(out)?,
        Format::Json => write_json(out, &plan)?,
    }
    Ok(0)
}

fn query(
    a: &QueryArgs,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Error> {
    let g = load_graph(&a.store.store)?;
    let text = fs::read_to_string(&a.query).map_err(|e| Error::io(&a.query, e))?;
    let (rec, wall) = match (a.uniform, &a.embeddings) {
        (Some(c), _) => timed_recommend(&g, &text, a.rec, &UniformPlausibility(c))?,
        (None, Some(path)) => {
            let set = embfile::read(path)?;
            let scorer = Scorer::new(&set, &g);
            timed_recommend(&g, &text, a.rec, &scorer)?
        }
        (None, None) => return Err(Error::Usage("query needs --embeddings or --uniform".into())),
    };
    let q = Query::parse(&text)?;
    let timings = TimingsOut::new(&rec.timings, wall);
    let report = QueryReport::new(&g, &q, &rec, a.projected_only, timings);
    match format {
        Format::Tsv => report.write_tsv(out)?,
        Format::Json => write_json(out, &report)?,
    }
    writeln!(
        err,
        "{} solutions from {} candidates over {} subquery trees{}",
        rec.solutions.len(),
        rec.candidates_seen,
        rec.trees_evaluated,
        if rec.truncated { " (truncated)" } else { "" }
    )?;
    writeln!(err, "{}", timings.summary())?;
    Ok(0)
}

fn timed_recommend(
    g: &Graph,
    text: &str,
    opts: RecommendOpts,
    plausibility: &impl trquery_core::embedding::Plausibility,
) -> Result<(Recommendation, u64), Error> {
    let clock = SystemClock::new();
    let start = Instant::now();
    let rec = parse_and_recommend(g, text, |q| opts.request(q), plausibility, &clock)?;
    Ok((rec, start.elapsed().as_nanos() as u64))
}

fn ask_cmd(a: &AskArgs, format: Format, out: &mut dyn Write) -> Result<i32, Error> {
    let g = load_graph(&a.store.store)?;
    let q = load_query(&a.query)?;
    match q.form {
        QueryForm::Ask => {
            let answer = ask(&g, &q)?;
            match format {
                Format::Tsv => writeln!(out, "{answer}")?,
                Format::Json => write_json(
                    out,
                    &serde_json::json!({"schema_version": SCHEMA_VERSION, "ask": answer}),
                )?,
            }
        }
        QueryForm::CountDistinct => {
            let n = count_distinct(&g, &q)?;
            match format {
                Format::Tsv => writeln!(out, "{n}")?,
                Format::Json => write_json(
                    out,
                    &serde_json::json!({"schema_version": SCHEMA_VERSION, "count": n}),
                )?,
            }
        }
        QueryForm::Select => {
            let res = evaluate_bgp(&g, &q, a.limit)?;
            let rows = res
                .solutions
                .iter()
                .map(|m| {
                    q.projected
                        .iter()
                        .map(|v| {
                            m.get(v)
                                .map_or_else(String::new, |id| g.term(id).to_string())
                        })
                        .collect()
                })
                .collect();
            let sel = SelectOut {
                schema_version: SCHEMA_VERSION,
                columns: q.projected.clone(),
                rows,
                truncated: res.truncated,
            };
            match format {
                Format::Tsv => sel.write_tsv(out)?,
                Format::Json => write_json(out, &sel)?,
            }
        }
    }
    Ok(0)
}

fn stats(a: &StatsArgs, format: Format, out: &mut dyn Write) -> Result<i32, Error> {
    let g = load_graph(&a.store.store)?;
    let s = StatsOut::new(&g);
    match format {
        Format::Tsv => s.write_tsv(out)?,
        Format::Json => write_json(out, &s)?,
    }
    Ok(0)
}

fn bench(
    a: &BenchArgs,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Error> {
    let g = load_graph(&a.store.store)?;
    let entries = manifest::read_manifest(&a.manifest)?;
    let fixed = a.embeddings.as_deref().map(embfile::read).transpose()?;
    let source = match (a.uniform, &fixed) {
        (Some(c), _) => PlausibilitySource::Uniform(c),
        (None, Some(set)) => PlausibilitySource::Fixed(set),
        (None, None) => PlausibilitySource::TrainOnCorrupted(a.train.config()?),
    };
    let settings = BenchSettings {
        threshold: a.rec.threshold,
        top_k: a.rec.top_k,
        per_tree_limit: a.rec.per_tree_limit,
        max_edges: a.rec.max_edges,
    };
    let rows = entries
        .iter()
        .map(|entry| {
            let outcome = manifest::load_case(&g, entry)
                .and_then(|case| run_case(&g, &case, &source, &settings).map_err(Error::from))
                .map_err(|e| e.to_string());
            if let Err(e) = &outcome {
                let _ = writeln!(err, "case {} failed: {e}", entry.name);
            }
            BenchRow {
                name: entry.name.clone(),
                outcome,
            }
        })
        .collect();
    let report = BenchReport { rows };
    let rendered = BenchOut::new(&report);
    match format {
        Format::Tsv => rendered.write_tsv(out)?,
        Format::Json => write_json(out, &rendered)?,
    }
    Ok(if report.failures() > 0 { 1 } else { 0 })
}
