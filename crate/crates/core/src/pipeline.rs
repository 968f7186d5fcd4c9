//! End-to-end graph build: ingest, dedup, venue normalization, embeddings,
//! citation linking, affiliation linking, author disambiguation, enrichment,
//! graph assembly and snapshot export.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::authors::{bundled_author_model, disambiguate_authors, AuthorOutput, MentionRef};
use crate::citelink::{build_citation_graph, build_paper_index, CitationEdge, LinkConfig};
use crate::dedup::{
    dedupe_corpus, fit_pair_model, make_training_pairs, pair_examples, Paper, PairScoreModel, PairTrainingConfig,
    TrainingReport, DEFAULT_MIN_POSITIVES, FEATURE_NAMES,
};
use crate::enrich::{
    assign_embeddings, assign_fields_of_study, load_venue_labels, mark_influential, train_fos, CuePhrases, FosConfig,
};
use crate::graphstore::{build_graph, export_snapshot, GraphParts, SnapshotManifest};
use crate::ingest::{load_corpus, PaperMention};
use crate::kbnorm::{
    build_venue_kb, link_affiliation, normalize_venue, read_jsonl, AbbrevTable, AffiliationConfig, AffiliationIndex,
    InstitutionRecord, VenueKb, VenueRecord,
};
use crate::linear::LogisticConfig;
use crate::text::DEFAULT_EMBEDDING_DIM;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("stage {stage}: {message}")]
    Stage { stage: &'static str, message: String },
}

fn stage_err<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::Stage {
        stage,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupSettings {
    /// Existing pair model; trained from the corpus when absent or missing.
    pub model: Option<PathBuf>,
    /// Where to write a freshly trained model.
    pub save_model: Option<PathBuf>,
    pub threshold: f64,
    pub min_positives: usize,
    pub max_class_ratio: f64,
}

impl Default for DedupSettings {
    fn default() -> Self {
        Self {
            model: None,
            save_model: None,
            threshold: crate::dedup::DEFAULT_THRESHOLD,
            min_positives: DEFAULT_MIN_POSITIVES,
            max_class_ratio: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuthorSettings {
    /// Pair model file; the bundled model when absent.
    pub model: Option<PathBuf>,
    pub threshold: f64,
}

impl Default for AuthorSettings {
    fn default() -> Self {
        Self {
            model: None,
            threshold: crate::authors::DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FosSettings {
    pub vocab_cap: usize,
    pub min_examples: usize,
}

impl Default for FosSettings {
    fn default() -> Self {
        Self {
            vocab_cap: crate::enrich::VOCAB_CAP,
            min_examples: crate::enrich::MIN_LABEL_EXAMPLES,
        }
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("snapshots")
}

fn default_dim() -> usize {
    DEFAULT_EMBEDDING_DIM
}

/// Pipeline configuration, read from TOML. Relative paths are resolved
/// against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub venue_kb: PathBuf,
    pub institutions: PathBuf,
    pub venue_labels: PathBuf,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Intermediate JSONL outputs and the run report go here when set.
    #[serde(default)]
    pub work_dir: Option<PathBuf>,
    /// Defaults to `now` in ISO format.
    #[serde(default)]
    pub release_id: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub now: NaiveDate,
    /// Worker threads; 0 uses one per core. Never affects output.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_dim")]
    pub embedding_dim: usize,
    #[serde(default)]
    pub abbreviations: Option<PathBuf>,
    #[serde(default)]
    pub cue_phrases: Option<PathBuf>,
    #[serde(default)]
    pub dedup: DedupSettings,
    #[serde(default)]
    pub citations: LinkConfig,
    #[serde(default)]
    pub affiliations: AffiliationConfig,
    #[serde(default)]
    pub authors: AuthorSettings,
    #[serde(default)]
    pub fos: FosSettings,
}

impl PipelineConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut config: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.corpus,
            &mut self.venue_kb,
            &mut self.institutions,
            &mut self.venue_labels,
            &mut self.output,
        ] {
            fix(p);
        }
        for p in [
            &mut self.work_dir,
            &mut self.abbreviations,
            &mut self.cue_phrases,
            &mut self.dedup.model,
            &mut self.dedup.save_model,
            &mut self.authors.model,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// Check that every input exists and every threshold is sane.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let inputs = [
            ("corpus", Some(&self.corpus)),
            ("venue_kb", Some(&self.venue_kb)),
            ("institutions", Some(&self.institutions)),
            ("venue_labels", Some(&self.venue_labels)),
            ("abbreviations", self.abbreviations.as_ref()),
            ("cue_phrases", self.cue_phrases.as_ref()),
            ("authors.model", self.authors.model.as_ref()),
        ];
        for (key, path) in inputs {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(PipelineError::Config(format!("{key}: {} does not exist", p.display())));
                }
            }
        }
        let unit = [
            ("dedup.threshold", self.dedup.threshold),
            ("authors.threshold", self.authors.threshold),
            ("affiliations.threshold", self.affiliations.threshold),
            ("citations.threshold", self.citations.threshold),
            ("citations.raw_threshold", self.citations.raw_threshold),
        ];
        for (key, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(PipelineError::Config(format!("{key} must be within [0, 1], got {v}")));
            }
        }
        if self.embedding_dim < crate::text::MIN_EMBEDDING_DIM {
            return Err(PipelineError::Config(format!(
                "embedding_dim must be at least {}",
                crate::text::MIN_EMBEDDING_DIM
            )));
        }
        Ok(())
    }

    pub fn release_id(&self) -> String {
        self.release_id.clone().unwrap_or_else(|| self.now.to_string())
    }
}

/// Counts from one stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub release_id: String,
    pub stages: Vec<StageReport>,
}

impl RunReport {
    fn record(&mut self, stage: &str, counts: &[(&str, usize)]) {
        let counts: BTreeMap<String, u64> = counts.iter().map(|(k, v)| (k.to_string(), *v as u64)).collect();
        log::info!("{stage}: {counts:?}");
        self.stages.push(StageReport {
            stage: stage.to_owned(),
            counts,
        });
    }

    /// All counts keyed `stage.name`.
    pub fn flat_counts(&self) -> BTreeMap<String, u64> {
        self.stages
            .iter()
            .flat_map(|s| s.counts.iter().map(move |(k, v)| (format!("{}.{k}", s.stage), *v)))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub release_dir: PathBuf,
    pub manifest: SnapshotManifest,
    pub report: RunReport,
}

/// Load the pair model named in the settings, or train one from the
/// corpus's DOI/PDF-matched pairs.
pub fn train_or_load_dedup_model(
    mentions: &[PaperMention],
    settings: &DedupSettings,
    seed: u64,
) -> Result<(PairScoreModel, Option<TrainingReport>), PipelineError> {
    if let Some(path) = settings.model.as_ref().filter(|p| p.exists()) {
        let model = PairScoreModel::load(path).map_err(stage_err("dedup"))?;
        return Ok((model, None));
    }
    let config = PairTrainingConfig {
        min_positives: settings.min_positives,
        max_class_ratio: settings.max_class_ratio,
        seed,
    };
    let pairs = make_training_pairs(mentions, &config).map_err(stage_err("dedup"))?;
    let examples = pair_examples(mentions, &pairs);
    let (model, report) = fit_pair_model(&FEATURE_NAMES, &examples, settings.threshold, &LogisticConfig::default())
        .map_err(stage_err("dedup"))?;
    if let Some(path) = &settings.save_model {
        model.save(path).map_err(stage_err("dedup"))?;
    }
    Ok((model, Some(report)))
}

/// Set `venue_id` from the venue KB; returns how many papers resolved.
pub fn resolve_venues(papers: &mut [Paper], kb: &VenueKb) -> usize {
    let mut resolved = 0;
    for p in papers {
        p.venue_id = normalize_venue(&p.venue_raw, kb);
        resolved += usize::from(p.venue_id.is_some());
    }
    resolved
}

/// Link every non-empty author affiliation string to the registry.
pub fn link_affiliations(
    papers: &[Paper],
    index: &AffiliationIndex,
    config: &AffiliationConfig,
) -> HashMap<MentionRef, String> {
    use rayon::prelude::*;
    papers
        .par_iter()
        .flat_map_iter(|p| {
            p.authors
                .iter()
                .filter(|a| !a.affiliation_raw.trim().is_empty())
                .filter_map(|a| {
                    link_affiliation(&a.affiliation_raw, index, config).map(|(id, _)| ((p.corpus_id, a.position), id))
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in rows {
        serde_json::to_writer(&mut f, &r)?;
        f.write_all(b"\n")?;
    }
    f.flush()
}

/// Run every stage. Must be called inside the thread pool that should do
/// the work; see [`run_pipeline`].
fn run_stages(config: &PipelineConfig) -> Result<RunOutcome, PipelineError> {
    let mut report = RunReport {
        release_id: config.release_id(),
        ..Default::default()
    };
    let table = match &config.abbreviations {
        Some(p) => AbbrevTable::load(p).map_err(stage_err("venues"))?,
        None => AbbrevTable::bundled(),
    };
    let cues = match &config.cue_phrases {
        Some(p) => CuePhrases::load(p).map_err(stage_err("enrich"))?,
        None => CuePhrases::bundled(),
    };
    let author_model = match &config.authors.model {
        Some(p) => PairScoreModel::load(p).map_err(stage_err("authors"))?,
        None => bundled_author_model(),
    };
    let venues: Vec<VenueRecord> = read_jsonl(&config.venue_kb).map_err(stage_err("venues"))?;
    let registry: Vec<InstitutionRecord> = read_jsonl(&config.institutions).map_err(stage_err("affiliations"))?;
    let venue_labels = load_venue_labels(&config.venue_labels).map_err(stage_err("enrich"))?;
    if let Some(dir) = &config.work_dir {
        std::fs::create_dir_all(dir).map_err(stage_err("setup"))?;
    }
    let dump = |name: &str, write: &dyn Fn(&Path) -> std::io::Result<()>| -> Result<(), PipelineError> {
        match &config.work_dir {
            Some(dir) => write(&dir.join(name)).map_err(stage_err("dump")),
            None => Ok(()),
        }
    };

    let corpus = load_corpus(&config.corpus).map_err(stage_err("ingest"))?;
    let r = corpus.report;
    report.record(
        "ingest",
        &[("read", r.read), ("accepted", r.accepted), ("rejected", r.rejected), ("warnings", r.warnings)],
    );
    dump("mentions.jsonl", &|p| write_jsonl(p, &corpus.mentions))?;

    let (dedup_model, training) = train_or_load_dedup_model(&corpus.mentions, &config.dedup, config.seed)?;
    let dedup = dedupe_corpus(&corpus.mentions, &dedup_model, config.dedup.threshold);
    let mut papers = dedup.papers;
    let (pos, neg) = training.map(|t| (t.positives, t.negatives)).unwrap_or_default();
    report.record(
        "dedup",
        &[
            ("mentions", corpus.mentions.len()),
            ("papers", papers.len()),
            ("blocks", dedup.blocks),
            ("largest_block", dedup.largest_block),
            ("training_positives", pos),
            ("training_negatives", neg),
            ("violations", dedup.violations.len()),
        ],
    );

    let kb = build_venue_kb(&venues, &table);
    let resolved = resolve_venues(&mut papers, &kb);
    let with_raw = papers.iter().filter(|p| !p.venue_raw.is_empty()).count();
    report.record(
        "venues",
        &[("kb_keys", kb.len()), ("papers_with_venue_string", with_raw), ("papers_resolved", resolved)],
    );

    assign_embeddings(&mut papers, config.embedding_dim);
    report.record("embeddings", &[("papers", papers.len()), ("dim", config.embedding_dim)]);

    let index = build_paper_index(&papers);
    let mut edges: Vec<CitationEdge> = build_citation_graph(&papers, &index, &config.citations);
    let bib_entries: usize = papers
        .iter()
        .flat_map(|p| &p.references)
        .map(|r| r.bibliography.len())
        .sum();
    let contexts: usize = edges.iter().map(|e| e.contexts.len()).sum();
    report.record("citations", &[("bib_entries", bib_entries), ("edges", edges.len()), ("contexts", contexts)]);

    let aff_index = AffiliationIndex::new(registry.clone());
    let inst_links = link_affiliations(&papers, &aff_index, &config.affiliations);
    let aff_strings = papers
        .iter()
        .flat_map(|p| &p.authors)
        .filter(|a| !a.affiliation_raw.trim().is_empty())
        .count();
    report.record(
        "affiliations",
        &[("registry", registry.len()), ("strings", aff_strings), ("linked", inst_links.len())],
    );

    let authors: AuthorOutput = disambiguate_authors(&papers, &inst_links, &author_model, config.authors.threshold);
    let slots: usize = papers.iter().map(|p| p.authors.len()).sum();
    if authors.mention_to_author.len() != slots {
        return Err(PipelineError::Stage {
            stage: "authors",
            message: format!("{} author slots but {} assigned", slots, authors.mention_to_author.len()),
        });
    }
    report.record(
        "authors",
        &[
            ("mentions", slots),
            ("authors", authors.authors.len()),
            ("blocks", authors.blocks),
            ("largest_block", authors.largest_block),
        ],
    );

    let fos_config = FosConfig {
        vocab_cap: config.fos.vocab_cap,
        min_examples: config.fos.min_examples,
        ..Default::default()
    };
    let (fos_model, fos_report) = train_fos(&venue_labels, &papers, &fos_config).map_err(stage_err("enrich"))?;
    assign_fields_of_study(&mut papers, &fos_model);
    mark_influential(&mut edges, &papers, &authors.mention_to_author, &cues);
    let labeled = papers
        .iter()
        .filter(|p| p.fields_of_study.iter().any(|f| *f != crate::enrich::FieldLabel::NotApplicable))
        .count();
    report.record(
        "enrich",
        &[
            ("fos_training_papers", fos_report.training_papers),
            ("fos_vocab", fos_report.vocab_size),
            ("fos_labels", fos_model.classifiers.len()),
            ("papers_with_fields", labeled),
            ("influential_edges", edges.iter().filter(|e| e.is_influential).count()),
        ],
    );
    dump("papers.jsonl", &|p| write_jsonl(p, &papers))?;
    dump("citations.jsonl", &|p| write_jsonl(p, &edges))?;
    dump("authors.jsonl", &|p| write_jsonl(p, &authors.authors))?;

    let graph = build_graph(GraphParts {
        papers,
        authors: authors.authors,
        venues,
        institutions: registry,
        edges,
    })
    .map_err(stage_err("graph"))?;
    report.record(
        "graph",
        &[
            ("papers", graph.data().papers.len()),
            ("authors", graph.data().authors.len()),
            ("venues", graph.data().venues.len()),
            ("institutions", graph.data().institutions.len()),
            ("citations", graph.edges().len()),
            ("paper_author_edges", graph.papers().map(|p| p.author_ids.len()).sum()),
        ],
    );

    let manifest = export_snapshot(&graph, &config.output, &report.release_id).map_err(stage_err("export"))?;
    let records: Vec<(&str, usize)> = manifest.datasets.iter().map(|d| (d.name.as_str(), d.records)).collect();
    report.record("export", &records);
    dump("run_report.json", &|p| {
        std::fs::write(p, serde_json::to_string_pretty(&report).map_err(std::io::Error::other)?)
    })?;
    Ok(RunOutcome {
        release_dir: config.output.join(&report.release_id),
        manifest,
        report,
    })
}

/// Validate the config, then run the whole pipeline on `config.workers` threads.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunOutcome, PipelineError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| PipelineError::Config(format!("workers: {e}")))?;
    pool.install(|| run_stages(config))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
corpus = "c"
venue_kb = "v.jsonl"
institutions = "i.jsonl"
venue_labels = "l.tsv"
now = "2024-06-01"
"#;

    #[test]
    fn defaults_and_relative_paths() {
        let c = PipelineConfig::parse(MINIMAL, Path::new("/data")).unwrap();
        assert_eq!(c.corpus, PathBuf::from("/data/c"));
        assert_eq!(c.output, PathBuf::from("/data/snapshots"));
        assert_eq!(c.dedup.threshold, 0.8);
        assert_eq!(c.authors.threshold, 0.75);
        assert_eq!(c.affiliations.retrieve_k, 100);
        assert_eq!(c.fos.vocab_cap, 300_000);
        assert_eq!(c.release_id(), "2024-06-01");
    }

    #[test]
    fn unknown_keys_and_bad_thresholds_are_config_errors() {
        let text = format!("{MINIMAL}\nbogus = 1\n");
        assert!(matches!(PipelineConfig::parse(&text, Path::new(".")), Err(PipelineError::Config(_))));
        let text = format!("{MINIMAL}\n[dedup]\nthreshold = 1.5\n");
        let c = PipelineConfig::parse(&text, Path::new(".")).unwrap();
        assert!(matches!(c.validate(), Err(PipelineError::Config(_))));
    }

    #[test]
    fn missing_input_fails_before_processing() {
        let dir = tempfile::tempdir().unwrap();
        let c = PipelineConfig::parse(MINIMAL, dir.path()).unwrap();
        let err = run_pipeline(&c).unwrap_err().to_string();
        assert!(err.contains("corpus"), "{err}");
        assert!(!dir.path().join("snapshots").exists());
    }
}
