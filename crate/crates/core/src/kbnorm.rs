//! Venue and affiliation normalization against prepared knowledge bases.
//!
//! Venues resolve by exact lookup of cleaned strings in a table of every
//! known variant (including the ISO-4 abbreviation). Affiliations are parsed
//! into main/child/address parts, matched by token-Jaccard retrieval, and
//! ranked by a fixed linear score.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{edit_ratio, jaccard, normalize_text};

#[derive(Debug, Error)]
pub enum KbError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("affiliation string is empty")]
    EmptyAffiliation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VenueRecord {
    #[serde(rename = "id")]
    pub venue_id: String,
    #[serde(rename = "name")]
    pub canonical_name: String,
    #[serde(default)]
    pub variants: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub issn: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstitutionRecord {
    #[serde(rename = "id")]
    pub inst_id: String,
    pub name: String,
    #[serde(default)]
    pub aliases: BTreeSet<String>,
    #[serde(default)]
    pub country: String,
    #[serde(default)]
    pub city: String,
}

fn read_lines(path: &Path) -> Result<Vec<String>, KbError> {
    let io = |source| KbError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io)?;
    std::io::BufReader::new(file).lines().collect::<Result<_, _>>().map_err(io)
}

/// Read a JSONL file of records, skipping blank lines.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, KbError> {
    let mut out = Vec::new();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| KbError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// ISO-4 abbreviation

/// Word-to-abbreviation table in LTWA style.
///
/// Keys ending in `-` match any word starting with the stem; other keys
/// match whole words. The longest matching key wins.
#[derive(Debug, Clone, Default)]
pub struct AbbrevTable {
    whole: HashMap<String, String>,
    prefixes: Vec<(String, String)>,
}

const BUNDLED_LTWA: &str = include_str!("../data/ltwa_subset.tsv");

/// Articles, conjunctions, and prepositions omitted from abbreviated titles.
const ISO4_DROPPED: [&str; 28] = [
    "a", "an", "and", "at", "by", "d", "de", "del", "der", "des", "die", "du", "e", "et", "for",
    "from", "fur", "in", "l", "la", "le", "les", "of", "on", "the", "to", "und", "with",
];

impl AbbrevTable {
    /// The table shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LTWA).expect("bundled abbreviation table is valid")
    }

    pub fn load(path: &Path) -> Result<Self, KbError> {
        let text = std::fs::read_to_string(path).map_err(|source| KbError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(|(line, message)| KbError::Parse {
            path: path.display().to_string(),
            line,
            message,
        })
    }

    /// Parse TSV `word<TAB>abbreviation`; `#` starts a comment line.
    pub fn parse(tsv: &str) -> Result<Self, (usize, String)> {
        let mut table = AbbrevTable::default();
        for (i, line) in tsv.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((word, abbrev)) = line.split_once('\t') else {
                return Err((i + 1, "expected word<TAB>abbreviation".into()));
            };
            let word = word.trim().to_lowercase();
            let abbrev = abbrev.trim().to_owned();
            if word.is_empty() || abbrev.is_empty() {
                return Err((i + 1, "empty key or abbreviation".into()));
            }
            match word.strip_suffix('-') {
                Some(stem) => table.prefixes.push((normalize_text(stem).into_string(), abbrev)),
                None => {
                    table.whole.insert(normalize_text(&word).into_string(), abbrev);
                }
            }
        }
        // Longest stems first so the first hit is the longest match.
        table.prefixes.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.whole.len() + self.prefixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Abbreviation for one normalized word, if the table has one.
    pub fn lookup(&self, word: &str) -> Option<&str> {
        let whole = self.whole.get(word).map(|a| (word.len(), a.as_str()));
        let prefix = self
            .prefixes
            .iter()
            .find(|(stem, _)| word.starts_with(stem.as_str()))
            .map(|(stem, a)| (stem.len(), a.as_str()));
        match (whole, prefix) {
            (Some(w), Some(p)) => Some(if p.0 > w.0 { p.1 } else { w.1 }),
            (w, p) => w.or(p).map(|x| x.1),
        }
    }

    /// All entries as `(key, abbreviation)`, prefix keys carrying a trailing `-`.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self
            .whole
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .chain(self.prefixes.iter().map(|(k, v)| (format!("{k}-"), v.clone())))
            .collect();
        out.sort();
        out
    }
}

/// ISO-4 style abbreviation of a serial title.
///
/// Articles, conjunctions, and prepositions are dropped and every other word
/// is replaced by its table abbreviation when one exists. Single-word titles
/// are returned unchanged.
pub fn iso4_abbreviate(title: &str, table: &AbbrevTable) -> String {
    let words: Vec<&str> = title.split_whitespace().collect();
    if words.len() <= 1 {
        return title.trim().to_owned();
    }
    let mut out = Vec::with_capacity(words.len());
    for w in words {
        let key = normalize_text(w).as_str().replace(' ', "");
        if key.is_empty() && w != "&" {
            out.push(w.to_owned());
            continue;
        }
        if ISO4_DROPPED.contains(&key.as_str()) || w == "&" {
            continue;
        }
        out.push(table.lookup(&key).map(str::to_owned).unwrap_or_else(|| w.to_owned()));
    }
    out.join(" ")
}

// ---------------------------------------------------------------------------
// Venue lookup

/// Rule-based cleanup of a raw venue string, then [`normalize_text`].
///
/// Removes "Proceedings of (the)" prefixes, ordinals, years, volume/issue/page
/// fragments and parenthesized acronyms.
pub fn clean_venue_string(raw: &str) -> String {
    static RULES: LazyLock<Vec<Regex>> = LazyLock::new(|| {
        [
            r"(?i)\b(in\s+)?(proc(eedings|\.)?)\s+(of\s+)?(the\s+)?",
            r"(?i)\(\s*[A-Z0-9&\-]{2,}\s*(['’]?\d{2,4})?\s*\)",
            r"(?i)\b(vol(ume)?|no|num(ber)?|issue|iss|pp|pages?|p)\.?\s*\d+(\s*[-–]\s*\d+)?",
            r"(?i)\b\d+(st|nd|rd|th)\b",
            r"(?i)\b(first|second|third|fourth|fifth|sixth|seventh|eighth|ninth|tenth)\b",
            r"\b(19|20)\d{2}\b",
            r"['’]\d{2}\b",
        ]
        .iter()
        .map(|r| Regex::new(r).unwrap())
        .collect()
    });
    let mut s = raw.to_owned();
    for rule in RULES.iter() {
        s = rule.replace_all(&s, " ").into_owned();
    }
    normalize_text(&s).into_string()
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum VenueKey {
    Unique(String),
    Ambiguous(BTreeSet<String>),
}

/// Exact-match table from cleaned variant strings to venue ids.
#[derive(Debug, Clone, Default)]
pub struct VenueKb {
    keys: HashMap<String, VenueKey>,
    records: BTreeMap<String, VenueRecord>,
}

impl VenueKb {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &VenueRecord> {
        self.records.values()
    }

    pub fn record(&self, venue_id: &str) -> Option<&VenueRecord> {
        self.records.get(venue_id)
    }

    /// Keys claimed by more than one venue.
    pub fn ambiguous_keys(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .keys
            .iter()
            .filter(|(_, v)| matches!(v, VenueKey::Ambiguous(_)))
            .map(|(k, _)| k.as_str())
            .collect();
        out.sort_unstable();
        out
    }

    pub fn get_key(&self, key: &str) -> Option<&str> {
        match self.keys.get(key)? {
            VenueKey::Unique(id) => Some(id),
            VenueKey::Ambiguous(_) => None,
        }
    }

    fn add_key(&mut self, key: String, venue_id: &str) {
        if key.is_empty() {
            return;
        }
        match self.keys.get_mut(&key) {
            None => {
                self.keys.insert(key, VenueKey::Unique(venue_id.to_owned()));
            }
            Some(VenueKey::Unique(existing)) if existing == venue_id => {}
            Some(entry) => {
                let mut ids = match entry {
                    VenueKey::Unique(existing) => BTreeSet::from([existing.clone()]),
                    VenueKey::Ambiguous(ids) => std::mem::take(ids),
                };
                ids.insert(venue_id.to_owned());
                *entry = VenueKey::Ambiguous(ids);
            }
        }
    }
}

/// Index every variant (plus the canonical name and its ISO-4 form) of every
/// venue. A key claimed by two venues becomes ambiguous and never matches.
pub fn build_venue_kb(records: &[VenueRecord], table: &AbbrevTable) -> VenueKb {
    let mut kb = VenueKb::default();
    for r in records {
        let mut strings: BTreeSet<&str> = r.variants.iter().map(String::as_str).collect();
        strings.insert(&r.canonical_name);
        let iso = iso4_abbreviate(&r.canonical_name, table);
        for s in strings.into_iter().chain([iso.as_str()]) {
            kb.add_key(normalize_text(s).into_string(), &r.venue_id);
            kb.add_key(clean_venue_string(s), &r.venue_id);
        }
        kb.records.insert(r.venue_id.clone(), r.clone());
    }
    kb
}

/// Exact lookup of a raw venue string: first its normalized form, then its
/// cleaned form. No fuzzy fallback.
pub fn normalize_venue(raw: &str, kb: &VenueKb) -> Option<String> {
    let norm = normalize_text(raw);
    if norm.is_empty() {
        return None;
    }
    kb.get_key(norm.as_str())
        .or_else(|| kb.get_key(&clean_venue_string(raw)))
        .map(str::to_owned)
}

// ---------------------------------------------------------------------------
// Affiliations

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParsedAffiliation {
    pub main: String,
    pub child: String,
    pub address: String,
}

const INSTITUTION_CUES: [&str; 34] = [
    "academy", "center", "centre", "clinic", "college", "company", "corporation", "council",
    "dept", "department", "division", "ecole", "faculty", "foundation", "hochschule", "hospital",
    "inc", "institut", "institute", "instituto", "istituto", "lab", "laboratories", "laboratory",
    "labs", "ltd", "school", "universidad", "universidade", "universitat", "universite",
    "universiteit", "universita", "university",
];

fn has_institution_cue(segment: &str) -> bool {
    normalize_text(segment)
        .tokens()
        .any(|t| INSTITUTION_CUES.contains(&t) || t.starts_with("universit"))
}

/// Split an affiliation string into main institute, child unit, and address.
///
/// Segments are separated by commas or semicolons. The last segment with an
/// institution cue word is the main institute; everything before it is the
/// child unit; everything after it is the address. Without any cue the whole
/// string is the main institute.
pub fn parse_affiliation(raw: &str) -> Result<ParsedAffiliation, KbError> {
    let segments: Vec<&str> = raw
        .split([',', ';'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if segments.is_empty() {
        return Err(KbError::EmptyAffiliation);
    }
    let Some(main_idx) = segments.iter().rposition(|s| has_institution_cue(s)) else {
        return Ok(ParsedAffiliation {
            main: segments.join(", "),
            ..Default::default()
        });
    };
    Ok(ParsedAffiliation {
        main: segments[main_idx].to_owned(),
        child: segments[..main_idx].join(", "),
        address: segments[main_idx + 1..].join(", "),
    })
}

struct IndexedInstitution {
    names: Vec<(String, HashSet<String>)>,
    location: HashSet<String>,
}

/// Token-set retrieval index over an institution registry.
pub struct AffiliationIndex {
    records: Vec<InstitutionRecord>,
    indexed: Vec<IndexedInstitution>,
    postings: HashMap<String, Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AffiliationConfig {
    pub retrieve_k: usize,
    pub threshold: f64,
}

impl Default for AffiliationConfig {
    fn default() -> Self {
        Self {
            retrieve_k: 100,
            threshold: 0.5,
        }
    }
}

fn token_set(s: &str) -> HashSet<String> {
    normalize_text(s).tokens().map(str::to_owned).collect()
}

/// A retrieved registry record with its retrieval Jaccard.
#[derive(Debug, Clone, PartialEq)]
pub struct Retrieved {
    pub index: usize,
    pub inst_id: String,
    pub jaccard: f64,
}

impl AffiliationIndex {
    pub fn new(registry: Vec<InstitutionRecord>) -> Self {
        let mut records = registry;
        records.sort_by(|a, b| a.inst_id.cmp(&b.inst_id));
        let mut postings: HashMap<String, Vec<usize>> = HashMap::new();
        let indexed: Vec<IndexedInstitution> = records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let names: Vec<(String, HashSet<String>)> = std::iter::once(&r.name)
                    .chain(&r.aliases)
                    .map(|n| (normalize_text(n).into_string(), token_set(n)))
                    .collect();
                let all: BTreeSet<&String> = names.iter().flat_map(|(_, t)| t).collect();
                for t in all {
                    postings.entry(t.clone()).or_default().push(i);
                }
                let mut location = token_set(&r.city);
                location.extend(token_set(&r.country));
                IndexedInstitution { names, location }
            })
            .collect();
        Self {
            records,
            indexed,
            postings,
        }
    }

    pub fn records(&self) -> &[InstitutionRecord] {
        &self.records
    }

    pub fn get(&self, inst_id: &str) -> Option<&InstitutionRecord> {
        self.records
            .binary_search_by(|r| r.inst_id.as_str().cmp(inst_id))
            .ok()
            .map(|i| &self.records[i])
    }

    /// Best Jaccard between `tokens` and any of the record's names.
    pub fn record_jaccard(&self, index: usize, tokens: &HashSet<String>) -> f64 {
        self.indexed[index]
            .names
            .iter()
            .map(|(_, t)| jaccard(tokens, t))
            .fold(0.0, f64::max)
    }

    /// The `k` records with highest positive Jaccard, ties by inst id.
    pub fn retrieve(&self, main: &str, k: usize) -> Vec<Retrieved> {
        let tokens = token_set(main);
        let mut candidates: BTreeSet<usize> = BTreeSet::new();
        for t in &tokens {
            if let Some(p) = self.postings.get(t) {
                candidates.extend(p.iter().copied());
            }
        }
        let mut scored: Vec<Retrieved> = candidates
            .into_iter()
            .map(|i| Retrieved {
                index: i,
                inst_id: self.records[i].inst_id.clone(),
                jaccard: self.record_jaccard(i, &tokens),
            })
            .filter(|r| r.jaccard > 0.0)
            .collect();
        scored.sort_by(|a, b| b.jaccard.total_cmp(&a.jaccard).then_with(|| a.inst_id.cmp(&b.inst_id)));
        scored.truncate(k);
        scored
    }

    /// Fixed linear rank score: `0.5·jaccard + 0.3·edit_ratio + 0.2·location overlap`.
    fn rank_score(&self, r: &Retrieved, parsed: &ParsedAffiliation) -> f64 {
        let inst = &self.indexed[r.index];
        let main = normalize_text(&parsed.main);
        let edit = inst
            .names
            .iter()
            .map(|(n, _)| edit_ratio(main.as_str(), n))
            .fold(0.0, f64::max);
        let location = if inst.location.is_empty() {
            0.0
        } else {
            let addr = token_set(&parsed.address);
            inst.location.iter().filter(|t| addr.contains(*t)).count() as f64 / inst.location.len() as f64
        };
        // Integer weights keep the exact-match case at exactly 0.8.
        (5.0 * r.jaccard + 3.0 * edit + 2.0 * location) / 10.0
    }
}

/// Resolve a raw affiliation string to a registry institution.
pub fn link_affiliation(raw: &str, index: &AffiliationIndex, config: &AffiliationConfig) -> Option<(String, f64)> {
    let parsed = parse_affiliation(raw).ok()?;
    let mut best: Option<(String, f64)> = None;
    for r in index.retrieve(&parsed.main, config.retrieve_k) {
        let s = index.rank_score(&r, &parsed);
        if best.as_ref().is_none_or(|(id, b)| s > *b || (s == *b && r.inst_id < *id)) {
            best = Some((r.inst_id.clone(), s));
        }
    }
    best.filter(|(_, s)| *s >= config.threshold)
}
