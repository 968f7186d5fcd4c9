//! The assembled knowledge graph: integrity-checked storage, lookups,
//! keyword search, and gzipped JSONL snapshot export/import.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::authors::Author;
use crate::citelink::{CitationContext, CitationEdge, CitationIntent};
use crate::dedup::Paper;
use crate::enrich::FieldLabel;
use crate::ingest::{ExternalIds, IdKind};
use crate::kbnorm::{InstitutionRecord, VenueRecord};
use crate::text::{edit_ratio, is_stopword, jaccard, normalize_text, DocVector};

pub const MAX_PAGE_LIMIT: usize = 1000;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("integrity: {0}")]
    Integrity(String),
    #[error("bad identifier: {0:?}")]
    BadIdentifier(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("corrupt snapshot: {0}")]
    Corrupt(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> GraphError + '_ {
    move |source| GraphError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// A paper node as stored in the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPaper {
    pub corpus_id: u64,
    pub title: String,
    pub abstract_text: String,
    pub venue_id: Option<String>,
    pub pub_date: Option<NaiveDate>,
    pub fields_of_study: BTreeSet<FieldLabel>,
    pub author_ids: Vec<u64>,
    pub external_ids: ExternalIds,
    pub embedding: Option<DocVector>,
}

impl GraphPaper {
    pub fn year(&self) -> Option<i32> {
        self.pub_date.map(|d| d.year())
    }
}

/// Raw graph contents; everything else is derived from these.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphData {
    pub papers: BTreeMap<u64, GraphPaper>,
    pub authors: BTreeMap<u64, Author>,
    pub venues: BTreeMap<String, VenueRecord>,
    pub institutions: BTreeMap<String, InstitutionRecord>,
    /// Sorted by `(citing, cited)`.
    pub edges: Vec<CitationEdge>,
}

#[derive(Debug, Clone, Default)]
struct SearchIndex {
    /// term → (corpus_id, weighted tf), postings sorted by corpus_id.
    postings: HashMap<String, Vec<(u64, f64)>>,
    docs: usize,
}

/// Immutable, indexed graph. Equality compares contents only.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    data: GraphData,
    citations_of: HashMap<u64, Vec<usize>>,
    references_of: HashMap<u64, Vec<usize>>,
    id_map: BTreeMap<(IdKind, String), u64>,
    papers_of_author: HashMap<u64, Vec<u64>>,
    search: SearchIndex,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data
    }
}

/// One page of an ordered result list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Page<T> {
    pub total: usize,
    pub offset: usize,
    pub items: Vec<T>,
}

pub fn check_limit(limit: usize) -> Result<(), GraphError> {
    if (1..=MAX_PAGE_LIMIT).contains(&limit) {
        Ok(())
    } else {
        Err(GraphError::BadRequest(format!("limit must be in 1..={MAX_PAGE_LIMIT}, got {limit}")))
    }
}

fn paginate<T: Clone>(all: &[T], offset: usize, limit: usize) -> Result<Page<T>, GraphError> {
    check_limit(limit)?;
    let start = offset.min(all.len());
    let end = offset.saturating_add(limit).min(all.len());
    Ok(Page {
        total: all.len(),
        offset,
        items: all[start..end].to_vec(),
    })
}

/// Parsed paper identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PaperId {
    Corpus(u64),
    External(IdKind, String),
}

impl std::str::FromStr for PaperId {
    type Err = GraphError;

    /// `CorpusId:<n>` or `<KIND>:<value>`; kinds are case-insensitive.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GraphError::BadIdentifier(s.to_owned());
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        if kind.eq_ignore_ascii_case("corpusid") {
            return value.parse::<u64>().ok().filter(|n| *n > 0).map(PaperId::Corpus).ok_or_else(bad);
        }
        let kind: IdKind = kind.parse().map_err(|_| bad())?;
        let value = kind.canonicalize(value).ok_or_else(bad)?;
        Ok(PaperId::External(kind, value))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchFilters {
    /// Inclusive year range.
    pub years: Option<(i32, i32)>,
    /// Keep papers having any of these fields.
    pub fields_of_study: BTreeSet<FieldLabel>,
    pub venue_id: Option<String>,
}

impl SearchFilters {
    pub fn accepts(&self, p: &GraphPaper) -> bool {
        if let Some((lo, hi)) = self.years {
            match p.year() {
                Some(y) if y >= lo && y <= hi => {}
                _ => return false,
            }
        }
        if !self.fields_of_study.is_empty() && self.fields_of_study.is_disjoint(&p.fields_of_study) {
            return false;
        }
        if let Some(v) = &self.venue_id {
            if p.venue_id.as_ref() != Some(v) {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scored<T> {
    pub id: T,
    pub score: f64,
}

pub const TITLE_WEIGHT: f64 = 3.0;

/// Non-stopword tokens of a query or document field.
pub fn search_terms(text: &str) -> Vec<String> {
    normalize_text(text).tokens().filter(|t| !is_stopword(t)).map(str::to_owned).collect()
}

/// Title-weighted term frequencies of one document.
pub fn document_terms(title: &str, abstract_text: &str) -> BTreeMap<String, f64> {
    let mut tf = BTreeMap::new();
    for t in search_terms(title) {
        *tf.entry(t).or_insert(0.0) += TITLE_WEIGHT;
    }
    for t in search_terms(abstract_text) {
        *tf.entry(t).or_insert(0.0) += 1.0;
    }
    tf
}

impl SearchIndex {
    fn build(papers: &BTreeMap<u64, GraphPaper>) -> Self {
        let mut postings: HashMap<String, Vec<(u64, f64)>> = HashMap::new();
        for p in papers.values() {
            for (t, w) in document_terms(&p.title, &p.abstract_text) {
                postings.entry(t).or_default().push((p.corpus_id, w));
            }
        }
        Self {
            postings,
            docs: papers.len(),
        }
    }
}

/// Inputs to [`build_graph`].
#[derive(Debug, Clone, Default)]
pub struct GraphParts {
    pub papers: Vec<Paper>,
    pub authors: Vec<Author>,
    pub venues: Vec<VenueRecord>,
    pub institutions: Vec<InstitutionRecord>,
    pub edges: Vec<CitationEdge>,
}

/// Assemble a graph from pipeline outputs.
///
/// Every venue is kept; only institutions referenced by some author are.
pub fn build_graph(parts: GraphParts) -> Result<Graph, GraphError> {
    let mut slot_author: HashMap<(u64, u32), u64> = HashMap::new();
    for a in &parts.authors {
        for m in &a.mentions {
            if slot_author.insert(*m, a.author_id).is_some() {
                return Err(GraphError::Integrity(format!("author slot {m:?} claimed twice")));
            }
        }
    }
    let mut data = GraphData::default();
    for p in parts.papers {
        let mut author_ids = Vec::with_capacity(p.authors.len());
        for a in &p.authors {
            let id = slot_author.get(&(p.corpus_id, a.position)).ok_or_else(|| {
                GraphError::Integrity(format!("paper {} author position {} has no author", p.corpus_id, a.position))
            })?;
            author_ids.push(*id);
        }
        let gp = GraphPaper {
            corpus_id: p.corpus_id,
            title: p.title,
            abstract_text: p.abstract_text,
            venue_id: p.venue_id,
            pub_date: p.pub_date,
            fields_of_study: p.fields_of_study,
            author_ids,
            external_ids: p.external_ids,
            embedding: p.embedding,
        };
        if data.papers.insert(gp.corpus_id, gp).is_some() {
            return Err(GraphError::Integrity(format!("duplicate corpus id {}", p.corpus_id)));
        }
    }
    data.authors = parts.authors.into_iter().map(|a| (a.author_id, a)).collect();
    data.venues = parts.venues.into_iter().map(|v| (v.venue_id.clone(), v)).collect();
    let used: BTreeSet<&String> = data.authors.values().flat_map(|a| &a.affiliations).collect();
    data.institutions = parts
        .institutions
        .into_iter()
        .filter(|i| used.contains(&i.inst_id))
        .map(|i| (i.inst_id.clone(), i))
        .collect();
    data.edges = parts.edges;
    Graph::from_data(data)
}

impl Graph {
    /// Validate referential integrity and build indexes.
    pub fn from_data(mut data: GraphData) -> Result<Self, GraphError> {
        let integrity = |m: String| Err(GraphError::Integrity(m));
        data.edges.sort_by_key(|e| (e.citing, e.cited));
        for w in data.edges.windows(2) {
            if (w[0].citing, w[0].cited) == (w[1].citing, w[1].cited) {
                return integrity(format!("duplicate edge {} -> {}", w[0].citing, w[0].cited));
            }
        }
        let mut g = Graph::default();
        for (i, e) in data.edges.iter().enumerate() {
            for end in [e.citing, e.cited] {
                if !data.papers.contains_key(&end) {
                    return integrity(format!("edge {} -> {} references missing paper {end}", e.citing, e.cited));
                }
            }
            g.citations_of.entry(e.cited).or_default().push(i);
            g.references_of.entry(e.citing).or_default().push(i);
        }
        for p in data.papers.values() {
            if let Some(v) = &p.venue_id {
                if !data.venues.contains_key(v) {
                    return integrity(format!("paper {} references missing venue {v}", p.corpus_id));
                }
            }
            for a in &p.author_ids {
                if !data.authors.contains_key(a) {
                    return integrity(format!("paper {} references missing author {a}", p.corpus_id));
                }
            }
            for (kind, value) in &p.external_ids {
                if let Some(other) = g.id_map.insert((*kind, value.clone()), p.corpus_id) {
                    return integrity(format!("{kind}:{value} maps to both {other} and {}", p.corpus_id));
                }
            }
        }
        for a in data.authors.values() {
            for inst in &a.affiliations {
                if !data.institutions.contains_key(inst) {
                    return integrity(format!("author {} references missing institution {inst}", a.author_id));
                }
            }
            let mut papers: Vec<u64> = a.mentions.iter().map(|m| m.0).collect();
            papers.sort_unstable();
            papers.dedup();
            for m in &a.mentions {
                let ok = data
                    .papers
                    .get(&m.0)
                    .is_some_and(|p| p.author_ids.contains(&a.author_id));
                if !ok {
                    return integrity(format!("author {} mention {:?} not on that paper", a.author_id, m));
                }
            }
            g.papers_of_author.insert(a.author_id, papers);
        }
        g.search = SearchIndex::build(&data.papers);
        g.data = data;
        Ok(g)
    }

    pub fn data(&self) -> &GraphData {
        &self.data
    }

    pub fn paper(&self, corpus_id: u64) -> Option<&GraphPaper> {
        self.data.papers.get(&corpus_id)
    }

    pub fn author(&self, author_id: u64) -> Option<&Author> {
        self.data.authors.get(&author_id)
    }

    pub fn venue(&self, venue_id: &str) -> Option<&VenueRecord> {
        self.data.venues.get(venue_id)
    }

    pub fn institution(&self, inst_id: &str) -> Option<&InstitutionRecord> {
        self.data.institutions.get(inst_id)
    }

    pub fn papers(&self) -> impl Iterator<Item = &GraphPaper> {
        self.data.papers.values()
    }

    pub fn authors(&self) -> impl Iterator<Item = &Author> {
        self.data.authors.values()
    }

    pub fn edges(&self) -> &[CitationEdge] {
        &self.data.edges
    }

    pub fn id_map(&self) -> &BTreeMap<(IdKind, String), u64> {
        &self.id_map
    }

    pub fn resolve(&self, id: &PaperId) -> Option<u64> {
        match id {
            PaperId::Corpus(n) => self.data.papers.contains_key(n).then_some(*n),
            PaperId::External(kind, value) => self.id_map.get(&(*kind, value.clone())).copied(),
        }
    }

    /// Look up a paper by `CorpusId:<n>` or an external identifier.
    pub fn get_paper(&self, id: &str) -> Result<Option<&GraphPaper>, GraphError> {
        let parsed: PaperId = id.parse()?;
        Ok(self.resolve(&parsed).and_then(|n| self.paper(n)))
    }

    fn edge_list(&self, index: &HashMap<u64, Vec<usize>>, corpus_id: u64) -> Result<Vec<&CitationEdge>, GraphError> {
        if !self.data.papers.contains_key(&corpus_id) {
            return Err(GraphError::NotFound(format!("CorpusId:{corpus_id}")));
        }
        Ok(index
            .get(&corpus_id)
            .map(|ix| ix.iter().map(|i| &self.data.edges[*i]).collect())
            .unwrap_or_default())
    }

    /// Edges citing `corpus_id` in storage order; empty for unknown papers.
    pub fn citing_edges(&self, corpus_id: u64) -> impl Iterator<Item = &CitationEdge> {
        self.citations_of.get(&corpus_id).into_iter().flatten().map(|i| &self.data.edges[*i])
    }

    pub fn reference_count(&self, corpus_id: u64) -> usize {
        self.references_of.get(&corpus_id).map_or(0, Vec::len)
    }

    /// Edges citing `corpus_id`, ordered by citing id.
    pub fn get_citations(&self, corpus_id: u64, offset: usize, limit: usize) -> Result<Page<CitationEdge>, GraphError> {
        check_limit(limit)?;
        let mut all = self.edge_list(&self.citations_of, corpus_id)?;
        all.sort_by_key(|e| e.citing);
        let all: Vec<CitationEdge> = all.into_iter().cloned().collect();
        paginate(&all, offset, limit)
    }

    /// Edges from `corpus_id` to the works it cites, ordered by cited id.
    pub fn get_references(&self, corpus_id: u64, offset: usize, limit: usize) -> Result<Page<CitationEdge>, GraphError> {
        check_limit(limit)?;
        let mut all = self.edge_list(&self.references_of, corpus_id)?;
        all.sort_by_key(|e| e.cited);
        let all: Vec<CitationEdge> = all.into_iter().cloned().collect();
        paginate(&all, offset, limit)
    }

    /// Distinct papers of an author, ascending corpus id.
    pub fn author_papers(&self, author_id: u64) -> Option<&[u64]> {
        self.papers_of_author.get(&author_id).map(Vec::as_slice)
    }

    pub fn get_author_papers(&self, author_id: u64, offset: usize, limit: usize) -> Result<Page<u64>, GraphError> {
        check_limit(limit)?;
        let all = self
            .author_papers(author_id)
            .ok_or_else(|| GraphError::NotFound(format!("author {author_id}")))?;
        paginate(all, offset, limit)
    }

    /// TF-IDF keyword search: Σ_t tf(t, d) · ln(1 + N / df(t)) over distinct
    /// query terms, title occurrences weighted 3×.
    pub fn search_papers(
        &self,
        query: &str,
        filters: &SearchFilters,
        offset: usize,
        limit: usize,
    ) -> Result<Page<Scored<u64>>, GraphError> {
        check_limit(limit)?;
        if normalize_text(query).is_empty() {
            return Err(GraphError::BadRequest("empty query".into()));
        }
        let terms: BTreeSet<String> = search_terms(query).into_iter().collect();
        let mut scores: BTreeMap<u64, f64> = BTreeMap::new();
        for t in &terms {
            let Some(postings) = self.search.postings.get(t) else { continue };
            let idf = (1.0 + self.search.docs as f64 / postings.len() as f64).ln();
            for (id, tf) in postings {
                *scores.entry(*id).or_default() += tf * idf;
            }
        }
        let mut ranked: Vec<Scored<u64>> = scores
            .into_iter()
            .filter(|(id, _)| filters.accepts(&self.data.papers[id]))
            .map(|(id, score)| Scored { id, score })
            .collect();
        ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.id.cmp(&b.id)));
        paginate(&ranked, offset, limit)
    }

    /// Authors sharing at least one name token with the query, ranked by
    /// edit ratio plus token jaccard of the normalized names.
    pub fn search_authors(&self, query: &str, offset: usize, limit: usize) -> Result<Page<Scored<u64>>, GraphError> {
        check_limit(limit)?;
        let q = normalize_text(query);
        if q.is_empty() {
            return Err(GraphError::BadRequest("empty query".into()));
        }
        let q_tokens = q.token_set();
        let mut ranked: Vec<Scored<u64>> = self
            .data
            .authors
            .values()
            .filter_map(|a| {
                let name = normalize_text(&a.canonical_name);
                let tokens = name.token_set();
                if tokens.is_disjoint(&q_tokens) {
                    return None;
                }
                let score = edit_ratio(q.as_str(), name.as_str()) + jaccard(&q_tokens, &tokens);
                Some(Scored { id: a.author_id, score })
            })
            .collect();
        ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.id.cmp(&b.id)));
        paginate(&ranked, offset, limit)
    }
}

// ---------------------------------------------------------------------------
// Snapshots

pub const DATASETS: [&str; 8] = [
    "papers",
    "abstracts",
    "authors",
    "citations",
    "embeddings",
    "paper-ids",
    "publication-venues",
    "tldrs",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub name: String,
    pub file: String,
    pub records: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub release_id: String,
    pub embedding_dim: usize,
    pub datasets: Vec<DatasetFile>,
}

impl SnapshotManifest {
    pub fn dataset(&self, name: &str) -> Option<&DatasetFile> {
        self.datasets.iter().find(|d| d.name == name)
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn dataset_path(name: &str) -> String {
    format!("{name}/part-000.jsonl.gz")
}

fn gzip_lines(records: &[Value]) -> Vec<u8> {
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    for r in records {
        // serde_json::Value keeps object keys sorted, so output is canonical.
        enc.write_all(serde_json::to_string(r).expect("JSON values serialize").as_bytes())
            .and_then(|_| enc.write_all(b"\n"))
            .expect("writing to memory");
    }
    enc.finish().expect("writing to memory")
}

fn fos_names(set: &BTreeSet<FieldLabel>) -> Vec<&'static str> {
    set.iter().map(|l| l.as_str()).collect()
}

fn dataset_records(g: &Graph) -> BTreeMap<&'static str, Vec<Value>> {
    let d = &g.data;
    let mut out: BTreeMap<&'static str, Vec<Value>> = DATASETS.iter().map(|n| (*n, Vec::new())).collect();
    for p in d.papers.values() {
        out.get_mut("papers").unwrap().push(json!({
            "corpus_id": p.corpus_id,
            "title": p.title,
            "venue_id": p.venue_id,
            "pub_date": p.pub_date.map(|x| x.to_string()),
            "year": p.year(),
            "fields_of_study": fos_names(&p.fields_of_study),
            "author_ids": p.author_ids,
        }));
        if !p.abstract_text.is_empty() {
            out.get_mut("abstracts").unwrap().push(json!({"corpus_id": p.corpus_id, "abstract": p.abstract_text}));
        }
        if let Some(e) = &p.embedding {
            out.get_mut("embeddings").unwrap().push(json!({"corpus_id": p.corpus_id, "vector": e.values()}));
        }
    }
    for ((kind, value), corpus_id) in &g.id_map {
        out.get_mut("paper-ids")
            .unwrap()
            .push(json!({"kind": kind.as_str(), "value": value, "corpus_id": corpus_id}));
    }
    for a in d.authors.values() {
        let affiliations: Vec<&InstitutionRecord> = a.affiliations.iter().map(|i| &d.institutions[i]).collect();
        out.get_mut("authors").unwrap().push(json!({
            "author_id": a.author_id,
            "name": a.canonical_name,
            "affiliations": affiliations,
            "mentions": a.mentions,
        }));
    }
    for e in &d.edges {
        out.get_mut("citations").unwrap().push(json!({
            "citing": e.citing,
            "cited": e.cited,
            "contexts": e.contexts.iter().map(|c| &c.text).collect::<Vec<_>>(),
            "context_co_cited": e.contexts.iter().map(|c| c.co_cited).collect::<Vec<_>>(),
            "intent": e.intent,
            "isInfluential": e.is_influential,
        }));
    }
    for v in d.venues.values() {
        out.get_mut("publication-venues").unwrap().push(serde_json::to_value(v).expect("venue serializes"));
    }
    out
}

/// Write `<dir>/<release_id>/<dataset>/part-000.jsonl.gz` for every dataset
/// plus `manifest.json`. Output bytes depend only on the graph contents.
pub fn export_snapshot(g: &Graph, dir: &Path, release_id: &str) -> Result<SnapshotManifest, GraphError> {
    let root = dir.join(release_id);
    let embedding_dim = g.papers().find_map(|p| p.embedding.as_ref().map(DocVector::dim)).unwrap_or(0);
    let mut manifest = SnapshotManifest {
        release_id: release_id.to_owned(),
        embedding_dim,
        datasets: Vec::new(),
    };
    for (name, records) in dataset_records(g) {
        let rel = dataset_path(name);
        let path = root.join(&rel);
        std::fs::create_dir_all(path.parent().unwrap()).map_err(io_err(&path))?;
        let bytes = gzip_lines(&records);
        std::fs::write(&path, &bytes).map_err(io_err(&path))?;
        manifest.datasets.push(DatasetFile {
            name: name.to_owned(),
            file: rel,
            records: records.len(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    manifest.datasets.sort_by(|a, b| a.name.cmp(&b.name));
    let path = root.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(io_err(&path))?;
    Ok(manifest)
}

pub fn read_manifest(release_dir: &Path) -> Result<SnapshotManifest, GraphError> {
    let path = release_dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|e| GraphError::Corrupt(format!("{}: {e}", path.display())))
}

fn read_dataset(release_dir: &Path, entry: &DatasetFile) -> Result<Vec<Value>, GraphError> {
    let path = release_dir.join(&entry.file);
    let bytes = std::fs::read(&path).map_err(|e| GraphError::Corrupt(format!("{}: {e}", path.display())))?;
    if hex::encode(Sha256::digest(&bytes)) != entry.sha256 {
        return Err(GraphError::Corrupt(format!("{}: digest mismatch", entry.file)));
    }
    let mut text = String::new();
    GzDecoder::new(bytes.as_slice())
        .read_to_string(&mut text)
        .map_err(|e| GraphError::Corrupt(format!("{}: {e}", entry.file)))?;
    let records: Vec<Value> = text
        .lines()
        .map(serde_json::from_str)
        .collect::<Result<_, _>>()
        .map_err(|e| GraphError::Corrupt(format!("{}: {e}", entry.file)))?;
    if records.len() != entry.records {
        return Err(GraphError::Corrupt(format!("{}: expected {} records, found {}", entry.file, entry.records, records.len())));
    }
    Ok(records)
}

#[derive(Deserialize)]
struct PaperRecord {
    corpus_id: u64,
    title: String,
    venue_id: Option<String>,
    pub_date: Option<NaiveDate>,
    fields_of_study: BTreeSet<FieldLabel>,
    author_ids: Vec<u64>,
}

#[derive(Deserialize)]
struct AbstractRecord {
    corpus_id: u64,
    #[serde(rename = "abstract")]
    text: String,
}

#[derive(Deserialize)]
struct EmbeddingRecord {
    corpus_id: u64,
    vector: Vec<f64>,
}

#[derive(Deserialize)]
struct PaperIdRecord {
    kind: IdKind,
    value: String,
    corpus_id: u64,
}

#[derive(Deserialize)]
struct AuthorRecord {
    author_id: u64,
    name: String,
    affiliations: Vec<InstitutionRecord>,
    mentions: Vec<(u64, u32)>,
}

#[derive(Deserialize)]
struct CitationRecord {
    citing: u64,
    cited: u64,
    contexts: Vec<String>,
    context_co_cited: Vec<u32>,
    intent: CitationIntent,
    #[serde(rename = "isInfluential")]
    is_influential: bool,
}

fn decode<T: for<'de> Deserialize<'de>>(name: &str, records: Vec<Value>) -> Result<Vec<T>, GraphError> {
    records
        .into_iter()
        .map(|r| serde_json::from_value(r).map_err(|e| GraphError::Corrupt(format!("{name}: {e}"))))
        .collect()
}

/// Load a release directory written by [`export_snapshot`].
pub fn import_snapshot(release_dir: &Path) -> Result<Graph, GraphError> {
    let manifest = read_manifest(release_dir)?;
    let mut sets: HashMap<&str, Vec<Value>> = HashMap::new();
    for name in DATASETS {
        let entry = manifest
            .dataset(name)
            .ok_or_else(|| GraphError::Corrupt(format!("manifest lacks dataset {name}")))?;
        sets.insert(name, read_dataset(release_dir, entry)?);
    }
    let mut take = |name: &str| sets.remove(name).unwrap_or_default();
    let mut data = GraphData::default();
    for r in decode::<PaperRecord>("papers", take("papers"))? {
        data.papers.insert(
            r.corpus_id,
            GraphPaper {
                corpus_id: r.corpus_id,
                title: r.title,
                abstract_text: String::new(),
                venue_id: r.venue_id,
                pub_date: r.pub_date,
                fields_of_study: r.fields_of_study,
                author_ids: r.author_ids,
                external_ids: ExternalIds::new(),
                embedding: None,
            },
        );
    }
    let dangling = |what: &str, id: u64| GraphError::Integrity(format!("{what} record for missing paper {id}"));
    for r in decode::<AbstractRecord>("abstracts", take("abstracts"))? {
        data.papers.get_mut(&r.corpus_id).ok_or_else(|| dangling("abstract", r.corpus_id))?.abstract_text = r.text;
    }
    for r in decode::<EmbeddingRecord>("embeddings", take("embeddings"))? {
        data.papers.get_mut(&r.corpus_id).ok_or_else(|| dangling("embedding", r.corpus_id))?.embedding =
            Some(DocVector::from_values(r.vector));
    }
    for r in decode::<PaperIdRecord>("paper-ids", take("paper-ids"))? {
        data.papers
            .get_mut(&r.corpus_id)
            .ok_or_else(|| dangling("paper-id", r.corpus_id))?
            .external_ids
            .insert(r.kind, r.value);
    }
    for r in decode::<AuthorRecord>("authors", take("authors"))? {
        let affiliations = r.affiliations.iter().map(|i| i.inst_id.clone()).collect();
        for inst in r.affiliations {
            data.institutions.insert(inst.inst_id.clone(), inst);
        }
        data.authors.insert(
            r.author_id,
            Author {
                author_id: r.author_id,
                canonical_name: r.name,
                mentions: r.mentions,
                affiliations,
            },
        );
    }
    for r in decode::<CitationRecord>("citations", take("citations"))? {
        if r.contexts.len() != r.context_co_cited.len() {
            return Err(GraphError::Corrupt(format!("citation {} -> {}: context arrays differ in length", r.citing, r.cited)));
        }
        data.edges.push(CitationEdge {
            citing: r.citing,
            cited: r.cited,
            contexts: r
                .contexts
                .into_iter()
                .zip(r.context_co_cited)
                .map(|(text, co_cited)| CitationContext { text, co_cited })
                .collect(),
            intent: r.intent,
            is_influential: r.is_influential,
        });
    }
    for v in decode::<VenueRecord>("publication-venues", take("publication-venues"))? {
        data.venues.insert(v.venue_id.clone(), v);
    }
    Graph::from_data(data)
}

/// Release subdirectories of a snapshot root (those holding a manifest),
/// in ascending name order.
pub fn list_releases(root: &Path) -> Result<Vec<String>, GraphError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(root).map_err(io_err(root))? {
        let entry = entry.map_err(io_err(root))?;
        if entry.path().join(MANIFEST_FILE).is_file() {
            out.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    out.sort();
    Ok(out)
}

/// The release directory to load from `path`: itself when it holds a
/// manifest, else its latest release subdirectory.
pub fn resolve_release_dir(path: &Path) -> Result<PathBuf, GraphError> {
    if path.join(MANIFEST_FILE).is_file() {
        return Ok(path.to_path_buf());
    }
    let latest = list_releases(path)?
        .pop()
        .ok_or_else(|| GraphError::NotFound(format!("no snapshot release under {}", path.display())))?;
    Ok(path.join(latest))
}
