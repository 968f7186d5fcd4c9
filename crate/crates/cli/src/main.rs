//! `stag`: build a knowledge-graph snapshot from paper metadata, piecewise
//! or in one go, and serve it.

use std::collections::{BTreeMap, BTreeSet};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use stag_core::authors::{bundled_author_model, disambiguate_authors, Author, MentionRef};
use stag_core::citelink::{build_citation_graph, build_paper_index, CitationEdge, LinkConfig};
use stag_core::dedup::{dedupe_corpus, Paper, PairScoreModel};
use stag_core::enrich::{
    assign_embeddings, assign_fields_of_study, load_venue_labels, mark_influential, train_fos, CuePhrases, FosConfig,
};
use stag_core::graphstore::{build_graph, export_snapshot, import_snapshot, resolve_release_dir, Graph, GraphParts, PaperId};
use stag_core::ingest::{load_corpus, PaperMention};
use stag_core::kbnorm::{build_venue_kb, read_jsonl, AbbrevTable, AffiliationConfig, AffiliationIndex, InstitutionRecord, VenueRecord};
use stag_core::pipeline::{
    link_affiliations, resolve_venues, run_pipeline, train_or_load_dedup_model, write_jsonl, DedupSettings, PipelineConfig,
};
use stag_core::recommend::{coi_score, match_score, RecentIndex, RecommendError, Recommender};
use stag_core::text::DEFAULT_EMBEDDING_DIM;
use stag_service::{read_keys, ApiConfig};

#[derive(Parser)]
#[command(name = "stag", version, about = "Scholarly knowledge-graph builder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage from a pipeline config and export a snapshot.
    Run(RunArgs),
    /// Parse and validate source records.
    Ingest(IngestArgs),
    /// Merge mentions into papers; also resolves venues and assigns embeddings.
    Dedupe(DedupeArgs),
    /// Link bibliography entries to papers.
    Link(LinkArgs),
    /// Cluster author mentions into authors.
    Authors(AuthorsArgs),
    /// Fields of study and influential citations.
    Enrich(EnrichArgs),
    /// Assemble the graph and write a snapshot release.
    Export(ExportArgs),
    /// Serve a snapshot over HTTP.
    Serve(ServeArgs),
    /// Recent-paper recommendations from example papers.
    Recommend(RecommendArgs),
    /// Conflict-of-interest and match scores for reviewers.
    Review(ReviewArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the worker count from the config.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct IngestArgs {
    /// Corpus file or directory of `<source>.jsonl[.gz]` files.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DedupeArgs {
    /// Raw corpus file or directory.
    #[arg(long = "in", conflicts_with = "mentions", required_unless_present = "mentions")]
    input: Option<PathBuf>,
    /// Mentions already written by `stag ingest`.
    #[arg(long)]
    mentions: Option<PathBuf>,
    /// Pair model; loaded when the file exists, else trained and saved here.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Venue KB used to resolve venue strings.
    #[arg(long)]
    venue_kb: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_EMBEDDING_DIM)]
    dim: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LinkArgs {
    #[arg(long)]
    papers: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AuthorsArgs {
    #[arg(long)]
    papers: PathBuf,
    /// Institution registry for affiliation linking.
    #[arg(long)]
    institutions: Option<PathBuf>,
    /// Pair model; the bundled one by default.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 0.75)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EnrichArgs {
    #[arg(long)]
    papers: PathBuf,
    #[arg(long)]
    citations: PathBuf,
    #[arg(long)]
    authors: PathBuf,
    /// TSV of venue id and comma-separated field labels.
    #[arg(long)]
    venue_labels: PathBuf,
    /// One cue phrase per line; the bundled list by default.
    #[arg(long)]
    cue_phrases: Option<PathBuf>,
    #[arg(long)]
    save_fos_model: Option<PathBuf>,
    #[arg(long)]
    out_papers: PathBuf,
    #[arg(long)]
    out_citations: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    papers: PathBuf,
    #[arg(long)]
    citations: PathBuf,
    #[arg(long)]
    authors: PathBuf,
    #[arg(long)]
    venue_kb: PathBuf,
    #[arg(long)]
    institutions: PathBuf,
    #[arg(long)]
    release: String,
    /// Snapshot root; the release is written to `<out>/<release>`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    /// A release directory or a directory of releases (the latest is served).
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// File of API keys, one per line.
    #[arg(long)]
    keys: Option<PathBuf>,
    /// Requests per minute without a key.
    #[arg(long, default_value_t = 100)]
    rate_limit: u32,
    /// Requests per minute per key.
    #[arg(long, default_value_t = 6000)]
    key_rate_limit: u32,
}

#[derive(Args)]
struct RecommendArgs {
    #[arg(long)]
    snapshot: PathBuf,
    /// Paper ids such as `CorpusId:12` or `DOI:10.1/x`; repeatable.
    #[arg(long = "positive", required = true)]
    positives: Vec<String>,
    #[arg(long = "negative")]
    negatives: Vec<String>,
    #[arg(long)]
    now: NaiveDate,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    limit: usize,
}

#[derive(Args)]
struct ReviewArgs {
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long = "reviewer", required = true)]
    reviewers: Vec<u64>,
    #[arg(long)]
    title: String,
    #[arg(long = "abstract", default_value = "")]
    abstract_text: String,
    /// Submission author ids; repeatable.
    #[arg(long = "author")]
    authors: Vec<u64>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = dispatch(Cli::parse().command) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run(a) => run(a),
        Command::Ingest(a) => ingest(a),
        Command::Dedupe(a) => dedupe(a),
        Command::Link(a) => link(a),
        Command::Authors(a) => authors(a),
        Command::Enrich(a) => enrich(a),
        Command::Export(a) => export(a),
        Command::Serve(a) => serve(a),
        Command::Recommend(a) => recommend(a),
        Command::Review(a) => review(a),
    }
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn read<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    read_jsonl(path).with_context(|| format!("reading {}", path.display()))
}

fn write<T: serde::Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    write_jsonl(path, rows).with_context(|| format!("writing {}", path.display()))
}

fn run(a: RunArgs) -> Result<()> {
    let mut config = PipelineConfig::load(&a.config)?;
    if let Some(w) = a.workers {
        config.workers = w;
    }
    let outcome = run_pipeline(&config)?;
    eprintln!("wrote {}", outcome.release_dir.display());
    print_json(&serde_json::to_value(&outcome.report)?)
}

fn ingest(a: IngestArgs) -> Result<()> {
    let corpus = load_corpus(&a.input)?;
    for r in &corpus.rejections {
        log::warn!("rejected {}:{}: {}", r.file.display(), r.line, r.error);
    }
    for w in &corpus.warnings {
        log::warn!("{}: {}", w.mention_id, w.message);
    }
    write(&a.out, &corpus.mentions)?;
    print_json(&serde_json::to_value(corpus.report)?)
}

fn dedupe(a: DedupeArgs) -> Result<()> {
    let mentions: Vec<PaperMention> = match (&a.input, &a.mentions) {
        (Some(input), _) => load_corpus(input)?.mentions,
        (None, Some(path)) => read(path)?,
        (None, None) => bail!("one of --in or --mentions is required"),
    };
    let settings = DedupSettings {
        model: a.model.clone(),
        save_model: a.model.clone().filter(|p| !p.exists()),
        threshold: a.threshold,
        ..Default::default()
    };
    let (model, training) = train_or_load_dedup_model(&mentions, &settings, a.seed)?;
    if let Some(t) = &training {
        log::info!("trained pair model on {} positives, {} negatives", t.positives, t.negatives);
    }
    let out = dedupe_corpus(&mentions, &model, a.threshold);
    let mut papers = out.papers;
    let resolved = match &a.venue_kb {
        Some(kb) => {
            let venues: Vec<VenueRecord> = read(kb)?;
            resolve_venues(&mut papers, &build_venue_kb(&venues, &AbbrevTable::bundled()))
        }
        None => 0,
    };
    assign_embeddings(&mut papers, a.dim);
    write(&a.out, &papers)?;
    print_json(&json!({"mentions": mentions.len(), "papers": papers.len(), "venues_resolved": resolved}))
}

fn link(a: LinkArgs) -> Result<()> {
    let papers: Vec<Paper> = read(&a.papers)?;
    let edges = build_citation_graph(&papers, &build_paper_index(&papers), &LinkConfig::default());
    write(&a.out, &edges)?;
    print_json(&json!({"papers": papers.len(), "edges": edges.len()}))
}

fn authors(a: AuthorsArgs) -> Result<()> {
    let papers: Vec<Paper> = read(&a.papers)?;
    let model = match &a.model {
        Some(p) => PairScoreModel::load(p)?,
        None => bundled_author_model(),
    };
    let links = match &a.institutions {
        Some(path) => {
            let registry: Vec<InstitutionRecord> = read(path)?;
            link_affiliations(&papers, &AffiliationIndex::new(registry), &AffiliationConfig::default())
        }
        None => Default::default(),
    };
    let out = disambiguate_authors(&papers, &links, &model, a.threshold);
    write(&a.out, &out.authors)?;
    print_json(&json!({
        "mentions": out.mention_to_author.len(),
        "authors": out.authors.len(),
        "affiliations_linked": links.len(),
    }))
}

fn enrich(a: EnrichArgs) -> Result<()> {
    let mut papers: Vec<Paper> = read(&a.papers)?;
    let mut edges: Vec<CitationEdge> = read(&a.citations)?;
    let authors: Vec<Author> = read(&a.authors)?;
    let labels = load_venue_labels(&a.venue_labels)?;
    let cues = match &a.cue_phrases {
        Some(p) => CuePhrases::load(p)?,
        None => CuePhrases::bundled(),
    };
    let (model, report) = train_fos(&labels, &papers, &FosConfig::default())?;
    if let Some(path) = &a.save_fos_model {
        model.save(path)?;
    }
    assign_fields_of_study(&mut papers, &model);
    let author_map: BTreeMap<MentionRef, u64> =
        authors.iter().flat_map(|au| au.mentions.iter().map(move |m| (*m, au.author_id))).collect();
    mark_influential(&mut edges, &papers, &author_map, &cues);
    write(&a.out_papers, &papers)?;
    write(&a.out_citations, &edges)?;
    print_json(&json!({
        "fos_training_papers": report.training_papers,
        "fos_vocab": report.vocab_size,
        "influential_edges": edges.iter().filter(|e| e.is_influential).count(),
    }))
}

fn export(a: ExportArgs) -> Result<()> {
    let graph = build_graph(GraphParts {
        papers: read(&a.papers)?,
        authors: read(&a.authors)?,
        venues: read(&a.venue_kb)?,
        institutions: read(&a.institutions)?,
        edges: read(&a.citations)?,
    })?;
    let manifest = export_snapshot(&graph, &a.out, &a.release)?;
    print_json(&serde_json::to_value(manifest)?)
}

fn serve(a: ServeArgs) -> Result<()> {
    let mut config = ApiConfig::new(&a.snapshot);
    config.bind = SocketAddr::new(a.host, a.port);
    config.rate_limit = a.rate_limit;
    config.key_rate_limit = a.key_rate_limit;
    if let Some(keys) = &a.keys {
        config.api_keys = read_keys(keys)?;
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(stag_service::serve(config))?;
    Ok(())
}

fn load_graph(snapshot: &Path) -> Result<Graph> {
    let dir = resolve_release_dir(snapshot)?;
    import_snapshot(&dir).with_context(|| format!("importing {}", dir.display()))
}

fn resolve_ids(graph: &Graph, raw: &[String]) -> Result<Vec<u64>> {
    raw.iter()
        .map(|s| {
            let id: PaperId = s.parse()?;
            graph.resolve(&id).with_context(|| format!("paper {s} not found"))
        })
        .collect()
}

fn recommend(a: RecommendArgs) -> Result<()> {
    let graph = load_graph(&a.snapshot)?;
    let positives = resolve_ids(&graph, &a.positives)?;
    let negatives = resolve_ids(&graph, &a.negatives)?;
    let index = RecentIndex::build(&graph, a.now);
    let ranked = Recommender::new(&graph).recommend(&index, &positives, &negatives, a.limit, a.seed)?;
    for r in ranked {
        let p = graph.paper(r.corpus_id).expect("ranked paper exists");
        println!("{}", json!({"corpusId": r.corpus_id, "score": r.score, "title": p.title, "year": p.year()}));
    }
    Ok(())
}

fn review(a: ReviewArgs) -> Result<()> {
    let graph = load_graph(&a.snapshot)?;
    let reviewers: BTreeSet<u64> = a.reviewers.iter().copied().collect();
    for r in reviewers {
        let coi = coi_score(r, &a.authors, &graph)?;
        let matched = match match_score(r, &a.title, &a.abstract_text, &graph) {
            Ok(v) => Some(v),
            Err(RecommendError::NotScorable(_)) => None,
            Err(e) => return Err(e.into()),
        };
        println!("{}", json!({"reviewerId": r, "coi": coi, "matchScore": matched}));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn dedupe_needs_exactly_one_input() {
        assert!(Cli::try_parse_from(["stag", "dedupe", "--out", "p.jsonl"]).is_err());
        assert!(Cli::try_parse_from(["stag", "dedupe", "--in", "c", "--mentions", "m", "--out", "p"]).is_err());
        assert!(Cli::try_parse_from(["stag", "dedupe", "--in", "c", "--out", "p"]).is_ok());
    }
}
