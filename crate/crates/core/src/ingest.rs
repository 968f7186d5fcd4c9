//! Parsing source records into [`PaperMention`]s.
//!
//! Input is JSONL (optionally gzipped), one paper object per line. See the
//! README for the record schema.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::LazyLock;

use chrono::NaiveDate;
use flate2::read::MultiGzDecoder;
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::text::normalize_text;

/// Kinds of external identifier a paper may carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum IdKind {
    Doi,
    Arxiv,
    Pmid,
    Pmcid,
    Mag,
    Acl,
}

impl IdKind {
    pub const ALL: [IdKind; 6] = [
        IdKind::Doi,
        IdKind::Arxiv,
        IdKind::Pmid,
        IdKind::Pmcid,
        IdKind::Mag,
        IdKind::Acl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IdKind::Doi => "DOI",
            IdKind::Arxiv => "ARXIV",
            IdKind::Pmid => "PMID",
            IdKind::Pmcid => "PMCID",
            IdKind::Mag => "MAG",
            IdKind::Acl => "ACL",
        }
    }

    /// Lowercase prefix used in block keys, e.g. `doi:`.
    pub fn key_prefix(self) -> &'static str {
        match self {
            IdKind::Doi => "doi",
            IdKind::Arxiv => "arxiv",
            IdKind::Pmid => "pmid",
            IdKind::Pmcid => "pmcid",
            IdKind::Mag => "mag",
            IdKind::Acl => "acl",
        }
    }

    /// Validate and canonicalize an identifier value of this kind.
    ///
    /// DOIs are lowercased (DOI matching is case-insensitive) and PMCIDs
    /// always carry the `PMC` prefix.
    pub fn canonicalize(self, value: &str) -> Option<String> {
        static DOI: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^10\.[^/\s]+/\S+$").unwrap());
        static ARXIV: LazyLock<Regex> = LazyLock::new(|| {
            Regex::new(r"^(\d{4}\.\d{4,5}|[a-z][a-z\-]*(\.[A-Z]{2})?/\d{7})(v\d+)?$").unwrap()
        });
        static DIGITS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\d{1,12}$").unwrap());
        static PMCID: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(?i:pmc)?(\d{1,10})$").unwrap());
        static ACL: LazyLock<Regex> = LazyLock::new(|| {
            Regex::new(r"^([A-Z]\d{2}-\d{4}|\d{4}\.[a-z][a-z0-9\-]*\.\d+)$").unwrap()
        });
        let v = value.trim();
        let v = match self {
            IdKind::Doi => v
                .trim_start_matches("https://doi.org/")
                .trim_start_matches("http://dx.doi.org/")
                .trim_start_matches("doi:"),
            _ => v,
        };
        match self {
            IdKind::Doi => DOI.is_match(v).then(|| v.to_lowercase()),
            IdKind::Arxiv => ARXIV.is_match(v).then(|| v.to_owned()),
            IdKind::Pmid | IdKind::Mag => DIGITS.is_match(v).then(|| v.to_owned()),
            IdKind::Pmcid => PMCID.captures(v).map(|c| format!("PMC{}", &c[1])),
            IdKind::Acl => ACL.is_match(v).then(|| v.to_owned()),
        }
    }
}

impl fmt::Display for IdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IdKind {
    type Err = ();

    /// Accepts the canonical names plus the common source spellings
    /// (`PubMed`, `PubMedCentral`, `ArXiv`, `ACL`, ...), case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "doi" => Ok(IdKind::Doi),
            "arxiv" => Ok(IdKind::Arxiv),
            "pmid" | "pubmed" => Ok(IdKind::Pmid),
            "pmcid" | "pubmedcentral" | "pmc" => Ok(IdKind::Pmcid),
            "mag" => Ok(IdKind::Mag),
            "acl" | "aclanthology" => Ok(IdKind::Acl),
            _ => Err(()),
        }
    }
}

pub type ExternalIds = BTreeMap<IdKind, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatePrecision {
    Day,
    Month,
    Year,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorMention {
    pub raw_name: String,
    pub position: u32,
    #[serde(default)]
    pub affiliation_raw: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub email: Option<String>,
}

/// One decomposed bibliography entry of a source record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BibEntry {
    pub raw: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub author_names: Vec<String>,
    #[serde(default)]
    pub year: Option<i32>,
    #[serde(default)]
    pub venue: Option<String>,
}

/// A body sentence and the bibliography indexes it cites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BodySentence {
    pub text: String,
    pub cites: Vec<usize>,
}

/// One source record describing a paper, before deduplication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperMention {
    pub mention_id: String,
    pub source: String,
    pub title: String,
    pub authors: Vec<AuthorMention>,
    #[serde(default)]
    pub venue_raw: String,
    #[serde(default)]
    pub pub_date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_precision: Option<DatePrecision>,
    #[serde(default)]
    pub abstract_text: String,
    #[serde(default)]
    pub external_ids: ExternalIds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pdf_hash: Option<String>,
    #[serde(default)]
    pub bibliography: Vec<BibEntry>,
    #[serde(default)]
    pub body_sentences: Vec<BodySentence>,
}

impl PaperMention {
    pub fn year(&self) -> Option<i32> {
        use chrono::Datelike;
        self.pub_date.map(|d| d.year())
    }

    pub fn doi(&self) -> Option<&str> {
        self.external_ids.get(&IdKind::Doi).map(String::as_str)
    }
}

/// Non-fatal problem found while parsing a record; the offending value was dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestWarning {
    pub mention_id: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("malformed JSON: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("record has neither a title nor any valid external id")]
    NoTitleOrId,
    #[error("duplicate mention id {0}")]
    DuplicateId(String),
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub read: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub warnings: usize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawDate {
    Text(String),
    Year(i64),
}

#[derive(Deserialize)]
struct RawAuthor {
    #[serde(default)]
    name: String,
    #[serde(default)]
    affiliation: Option<String>,
    #[serde(default)]
    email: Option<String>,
}

#[derive(Deserialize)]
struct RawBib {
    #[serde(default)]
    raw: String,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    authors: Vec<String>,
    #[serde(default)]
    year: Option<i32>,
    #[serde(default)]
    venue: Option<String>,
}

#[derive(Deserialize)]
struct RawSentence {
    text: String,
    #[serde(default)]
    cites: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawRecord {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    source: Option<String>,
    #[serde(default)]
    title: Option<String>,
    #[serde(default, rename = "abstract")]
    abstract_text: Option<String>,
    #[serde(default)]
    authors: Vec<RawAuthor>,
    #[serde(default)]
    venue: Option<String>,
    #[serde(default)]
    date: Option<RawDate>,
    #[serde(default)]
    external_ids: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pdf_sha: Option<String>,
    #[serde(default)]
    bibliography: Vec<RawBib>,
    #[serde(default)]
    body_sentences: Vec<RawSentence>,
}

fn parse_date(raw: &RawDate) -> Option<(NaiveDate, DatePrecision)> {
    match raw {
        RawDate::Year(y) => {
            let y = i32::try_from(*y).ok()?;
            NaiveDate::from_ymd_opt(y, 1, 1).map(|d| (d, DatePrecision::Year))
        }
        RawDate::Text(s) => {
            let s = s.trim();
            if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
                return Some((d, DatePrecision::Day));
            }
            let parts: Vec<&str> = s.split('-').collect();
            match parts.as_slice() {
                [y] if y.len() == 4 => NaiveDate::from_ymd_opt(y.parse().ok()?, 1, 1)
                    .map(|d| (d, DatePrecision::Year)),
                [y, m] if y.len() == 4 => NaiveDate::from_ymd_opt(y.parse().ok()?, m.parse().ok()?, 1)
                    .map(|d| (d, DatePrecision::Month)),
                _ => None,
            }
        }
    }
}

fn id_value_string(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.map(|s| s.trim().to_owned()).filter(|s| !s.is_empty())
}

/// Parse one JSON record.
///
/// `source` is the default source id; a record-level `source` key overrides
/// it. The mention id is `<source>:<id>` when the record carries an `id`,
/// otherwise `<source>:<sha256 prefix of the line>`.
pub fn parse_record(
    raw_line: &str,
    source: &str,
) -> Result<(PaperMention, Vec<IngestWarning>), RecordError> {
    let rec: RawRecord = serde_json::from_str(raw_line)?;
    let source = non_empty(rec.source).unwrap_or_else(|| source.to_owned());
    let local_id = non_empty(rec.id).unwrap_or_else(|| {
        let digest = Sha256::digest(raw_line.trim().as_bytes());
        hex::encode(&digest[..8])
    });
    let mention_id = format!("{source}:{local_id}");
    let mut warnings = Vec::new();
    let mut warn = |message: String| {
        warnings.push(IngestWarning {
            mention_id: mention_id.clone(),
            message,
        })
    };

    let mut external_ids = ExternalIds::new();
    for (key, value) in &rec.external_ids {
        let Ok(kind) = key.parse::<IdKind>() else {
            warn(format!("unknown external id kind {key:?} dropped"));
            continue;
        };
        match id_value_string(value).and_then(|v| kind.canonicalize(&v)) {
            Some(v) => {
                external_ids.insert(kind, v);
            }
            None => warn(format!("invalid {kind} value {value} dropped")),
        }
    }

    let title = rec.title.unwrap_or_default().trim().to_owned();
    if normalize_text(&title).is_empty() && external_ids.is_empty() {
        return Err(RecordError::NoTitleOrId);
    }

    let mut authors = Vec::new();
    for a in rec.authors {
        let name = a.name.trim();
        if name.is_empty() {
            warn("author with empty name dropped".into());
            continue;
        }
        authors.push(AuthorMention {
            raw_name: name.to_owned(),
            position: authors.len() as u32,
            affiliation_raw: a.affiliation.unwrap_or_default().trim().to_owned(),
            email: non_empty(a.email),
        });
    }

    let (pub_date, date_precision) = match rec.date.as_ref().map(|d| (d, parse_date(d))) {
        Some((_, Some((d, p)))) => (Some(d), Some(p)),
        Some((RawDate::Text(s), None)) if s.trim().is_empty() => (None, None),
        Some((raw, None)) => {
            let shown = match raw {
                RawDate::Text(s) => s.clone(),
                RawDate::Year(y) => y.to_string(),
            };
            warn(format!("unparseable date {shown:?} dropped"));
            (None, None)
        }
        None => (None, None),
    };

    let mut bibliography = Vec::new();
    for b in rec.bibliography {
        let title = b.title.unwrap_or_default().trim().to_owned();
        let raw = if b.raw.trim().is_empty() {
            // Synthesize the raw string from the parsed parts.
            let mut parts = vec![b.authors.join(", "), title.clone()];
            if let Some(y) = b.year {
                parts.push(y.to_string());
            }
            parts.retain(|p| !p.is_empty());
            parts.join(". ")
        } else {
            b.raw.trim().to_owned()
        };
        bibliography.push(BibEntry {
            raw,
            title,
            author_names: b.authors,
            year: b.year,
            venue: non_empty(b.venue),
        });
    }
    // Entries with nothing at all to match on are dropped; body-sentence cite
    // indexes refer to the original positions, so remap them.
    let mut remap = Vec::with_capacity(bibliography.len());
    let mut kept = Vec::with_capacity(bibliography.len());
    for entry in bibliography {
        if entry.raw.is_empty() {
            warn("empty bibliography entry dropped".into());
            remap.push(None);
        } else {
            remap.push(Some(kept.len()));
            kept.push(entry);
        }
    }

    let mut body_sentences = Vec::new();
    for s in rec.body_sentences {
        let mut cites = Vec::new();
        for c in s.cites {
            match remap.get(c).copied().flatten() {
                Some(i) => {
                    if !cites.contains(&i) {
                        cites.push(i);
                    }
                }
                None => warn(format!("sentence cites unknown bibliography index {c}")),
            }
        }
        body_sentences.push(BodySentence { text: s.text, cites });
    }

    let mention = PaperMention {
        mention_id,
        source,
        title,
        authors,
        venue_raw: rec.venue.unwrap_or_default().trim().to_owned(),
        pub_date,
        date_precision,
        abstract_text: rec.abstract_text.unwrap_or_default().trim().to_owned(),
        external_ids,
        pdf_hash: non_empty(rec.pdf_sha).map(|h| h.to_lowercase()),
        bibliography: kept,
        body_sentences,
    };
    Ok((mention, warnings))
}

/// A rejected input line.
#[derive(Debug)]
pub struct Rejection {
    pub file: PathBuf,
    pub line: usize,
    pub error: RecordError,
}

/// Result of loading a corpus: accepted mentions in file order plus counts.
#[derive(Debug, Default)]
pub struct Corpus {
    pub mentions: Vec<PaperMention>,
    pub report: IngestReport,
    pub rejections: Vec<Rejection>,
    pub warnings: Vec<IngestWarning>,
}

fn open_reader(path: &Path) -> Result<Box<dyn BufRead>, IngestError> {
    let io = |source| IngestError::Io {
        path: path.to_owned(),
        source,
    };
    let file = File::open(path).map_err(io)?;
    let gz = path.extension().is_some_and(|e| e == "gz");
    let reader: Box<dyn Read> = if gz {
        Box::new(MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(reader)))
}

/// Files making up a corpus: `path` itself, or every `*.jsonl[.gz]` in it, sorted.
pub fn corpus_files(path: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let io = |source| IngestError::Io {
        path: path.to_owned(),
        source,
    };
    let meta = std::fs::metadata(path).map_err(io)?;
    if !meta.is_dir() {
        return Ok(vec![path.to_owned()]);
    }
    let mut files = Vec::new();
    for entry in std::fs::read_dir(path).map_err(io)? {
        let p = entry.map_err(io)?.path();
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if name.ends_with(".jsonl") || name.ends_with(".jsonl.gz") {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

/// Default source id for a file: its name with `.jsonl[.gz]` stripped.
pub fn source_for(path: &Path) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("source");
    name.trim_end_matches(".gz").trim_end_matches(".jsonl").to_owned()
}

/// Load every mention under `path` (a JSONL file or a directory of them).
pub fn load_corpus(path: &Path) -> Result<Corpus, IngestError> {
    let mut corpus = Corpus::default();
    let mut seen: HashSet<String> = HashSet::new();
    for file in corpus_files(path)? {
        let source = source_for(&file);
        let reader = open_reader(&file)?;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| IngestError::Io {
                path: file.clone(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            corpus.report.read += 1;
            let outcome = parse_record(&line, &source).and_then(|(m, w)| {
                if seen.insert(m.mention_id.clone()) {
                    Ok((m, w))
                } else {
                    Err(RecordError::DuplicateId(m.mention_id))
                }
            });
            match outcome {
                Ok((m, w)) => {
                    corpus.report.accepted += 1;
                    corpus.report.warnings += w.len();
                    for warning in &w {
                        log::warn!("{}: {}", warning.mention_id, warning.message);
                    }
                    corpus.warnings.extend(w);
                    corpus.mentions.push(m);
                }
                Err(error) => {
                    corpus.report.rejected += 1;
                    log::warn!("{}:{}: rejected: {error}", file.display(), lineno + 1);
                    corpus.rejections.push(Rejection {
                        file: file.clone(),
                        line: lineno + 1,
                        error,
                    });
                }
            }
        }
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_minimal_record() {
        let (m, w) = parse_record(
            r#"{"title":"X","authors":[{"name":"A B"}],"externalIds":{"DOI":"10.1/x"}}"#,
            "s2",
        )
        .unwrap();
        assert_eq!(m.authors.len(), 1);
        assert_eq!(m.authors[0].position, 0);
        assert_eq!(m.doi(), Some("10.1/x"));
        assert!(w.is_empty());
        assert!(m.mention_id.starts_with("s2:"));
    }

    #[test]
    fn rejects_empty_title_without_ids() {
        assert!(matches!(
            parse_record(r#"{"title":""}"#, "s"),
            Err(RecordError::NoTitleOrId)
        ));
        assert!(matches!(
            parse_record(r#"{"title":"?!","externalIds":{"DOI":"junk"}}"#, "s"),
            Err(RecordError::NoTitleOrId)
        ));
    }

    #[test]
    fn invalid_doi_dropped_with_warning() {
        let (m, w) =
            parse_record(r#"{"title":"T","externalIds":{"DOI":"not-a-doi"}}"#, "s").unwrap();
        assert!(m.external_ids.is_empty());
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn id_canonicalization() {
        assert_eq!(IdKind::Doi.canonicalize("10.1000/ABC").as_deref(), Some("10.1000/abc"));
        assert_eq!(IdKind::Doi.canonicalize("https://doi.org/10.1/x").as_deref(), Some("10.1/x"));
        assert_eq!(IdKind::Arxiv.canonicalize("2101.00001").as_deref(), Some("2101.00001"));
        assert_eq!(IdKind::Arxiv.canonicalize("hep-th/9901001v2").as_deref(), Some("hep-th/9901001v2"));
        assert_eq!(IdKind::Arxiv.canonicalize("21.1"), None);
        assert_eq!(IdKind::Pmcid.canonicalize("12345").as_deref(), Some("PMC12345"));
        assert_eq!(IdKind::Pmid.canonicalize("PMC1"), None);
        assert_eq!(IdKind::Acl.canonicalize("P19-1001").as_deref(), Some("P19-1001"));
        assert_eq!("PubMed".parse::<IdKind>(), Ok(IdKind::Pmid));
    }

    #[test]
    fn dates_and_precision() {
        let (m, _) = parse_record(r#"{"title":"T","date":"2020"}"#, "s").unwrap();
        assert_eq!(m.pub_date, NaiveDate::from_ymd_opt(2020, 1, 1));
        assert_eq!(m.date_precision, Some(DatePrecision::Year));
        let (m, _) = parse_record(r#"{"title":"T","date":2019}"#, "s").unwrap();
        assert_eq!(m.year(), Some(2019));
        let (m, _) = parse_record(r#"{"title":"T","date":"2021-03-04"}"#, "s").unwrap();
        assert_eq!(m.date_precision, Some(DatePrecision::Day));
        let (m, w) = parse_record(r#"{"title":"T","date":"March"}"#, "s").unwrap();
        assert_eq!(m.pub_date, None);
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn bibliography_and_sentences() {
        let line = r#"{"title":"T","bibliography":[{"raw":"A. B. Foo. 2001","title":"Foo","authors":["A. B."],"year":2001},{"raw":""}],
            "bodySentences":[{"text":"As in [1].","cites":[0,0,1,7]}]}"#;
        let (m, w) = parse_record(line, "s").unwrap();
        assert_eq!(m.bibliography.len(), 1);
        assert_eq!(m.body_sentences[0].cites, vec![0]);
        assert_eq!(w.len(), 3);
    }

    #[test]
    fn deterministic_parse() {
        let line = r#"{"title":"Same","date":"2020-01-02"}"#;
        assert_eq!(parse_record(line, "a").unwrap().0, parse_record(line, "a").unwrap().0);
    }

    fn write_lines(dir: &Path, name: &str, lines: &[&str]) -> PathBuf {
        let p = dir.join(name);
        let mut f = File::create(&p).unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        p
    }

    #[test]
    fn load_counts() {
        let dir = tempfile::tempdir().unwrap();
        let good = write_lines(
            dir.path(),
            "good.jsonl",
            &[r#"{"id":"1","title":"A"}"#, r#"{"id":"2","title":"B"}"#, r#"{"id":"3","title":"C"}"#],
        );
        let c = load_corpus(&good).unwrap();
        assert_eq!(c.report, IngestReport { read: 3, accepted: 3, rejected: 0, warnings: 0 });
        assert_eq!(c.mentions[2].mention_id, "good:3");

        let bad = write_lines(
            dir.path(),
            "bad.jsonl",
            &[r#"{"id":"1","title":"A"}"#, "{not json", r#"{"id":"3","title":"C"}"#],
        );
        let c = load_corpus(&bad).unwrap();
        assert_eq!(c.report, IngestReport { read: 3, accepted: 2, rejected: 1, warnings: 0 });

        let empty = write_lines(dir.path(), "empty.jsonl", &[]);
        assert!(load_corpus(&empty).unwrap().mentions.is_empty());

        assert!(load_corpus(&dir.path().join("missing.jsonl")).is_err());
    }

    #[test]
    fn duplicate_ids_rejected_and_gzip_read() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("src.jsonl.gz");
        let mut enc = flate2::write::GzEncoder::new(File::create(&p).unwrap(), flate2::Compression::default());
        writeln!(enc, r#"{{"id":"1","title":"A"}}"#).unwrap();
        writeln!(enc, r#"{{"id":"1","title":"A again"}}"#).unwrap();
        enc.finish().unwrap();
        let c = load_corpus(dir.path()).unwrap();
        assert_eq!(c.report.accepted, 1);
        assert_eq!(c.report.rejected, 1);
        assert_eq!(c.report.accepted + c.report.rejected, c.report.read);
        assert!(matches!(c.rejections[0].error, RecordError::DuplicateId(_)));
        assert_eq!(c.mentions[0].source, "src");
    }
}
