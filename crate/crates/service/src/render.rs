//! JSON views of graph records, restricted to the fields a caller asked for.

use serde_json::{json, Map, Value};

use stag_core::graphstore::{Graph, GraphPaper};
use stag_core::authors::Author;
use stag_core::citelink::CitationEdge;

use crate::ApiError;

pub const PAPER_FIELDS: [&str; 13] = [
    "title",
    "abstract",
    "year",
    "publicationDate",
    "venue",
    "venueId",
    "fieldsOfStudy",
    "authors",
    "externalIds",
    "citationCount",
    "referenceCount",
    "influentialCitationCount",
    "embedding",
];

pub const AUTHOR_FIELDS: [&str; 5] = ["name", "affiliations", "paperCount", "citationCount", "papers"];

/// Edge attributes selectable on citation and reference listings.
pub const EDGE_FIELDS: [&str; 3] = ["contexts", "intents", "isInfluential"];

/// Parse a `fields=a,b` list against the allowed names. Empty → `default`.
pub fn parse_fields(raw: Option<&str>, allowed: &[&str], default: &[&str]) -> Result<Vec<String>, ApiError> {
    let Some(raw) = raw.map(str::trim).filter(|s| !s.is_empty()) else {
        return Ok(default.iter().map(|s| s.to_string()).collect());
    };
    let mut out: Vec<String> = Vec::new();
    for f in raw.split(',').map(str::trim).filter(|f| !f.is_empty()) {
        if !allowed.contains(&f) {
            return Err(ApiError::bad_request(format!("unknown field {f:?}")));
        }
        if !out.iter().any(|x| x == f) {
            out.push(f.to_owned());
        }
    }
    Ok(out)
}

pub fn paper_field(g: &Graph, p: &GraphPaper, field: &str) -> Value {
    match field {
        "title" => json!(p.title),
        "abstract" => {
            if p.abstract_text.is_empty() {
                Value::Null
            } else {
                json!(p.abstract_text)
            }
        }
        "year" => json!(p.year()),
        "publicationDate" => json!(p.pub_date.map(|d| d.to_string())),
        "venue" => json!(p.venue_id.as_ref().and_then(|v| g.venue(v)).map(|v| &v.canonical_name)),
        "venueId" => json!(p.venue_id),
        "fieldsOfStudy" => json!(p.fields_of_study.iter().map(|f| f.as_str()).collect::<Vec<_>>()),
        "authors" => Value::Array(
            p.author_ids
                .iter()
                .map(|id| json!({"authorId": id, "name": g.author(*id).map(|a| &a.canonical_name)}))
                .collect(),
        ),
        "externalIds" => Value::Object(
            p.external_ids.iter().map(|(k, v)| (k.as_str().to_owned(), json!(v))).collect(),
        ),
        "citationCount" => json!(g.citing_edges(p.corpus_id).count()),
        "referenceCount" => json!(g.reference_count(p.corpus_id)),
        "influentialCitationCount" => json!(g.citing_edges(p.corpus_id).filter(|e| e.is_influential).count()),
        "embedding" => json!(p.embedding.as_ref().map(|e| e.values())),
        other => unreachable!("field {other} was validated"),
    }
}

/// `{corpusId, ...fields}`.
pub fn paper(g: &Graph, p: &GraphPaper, fields: &[String]) -> Value {
    let mut m = Map::new();
    m.insert("corpusId".into(), json!(p.corpus_id));
    for f in fields {
        m.insert(f.clone(), paper_field(g, p, f));
    }
    Value::Object(m)
}

fn author_field(g: &Graph, a: &Author, field: &str) -> Value {
    let papers = g.author_papers(a.author_id).unwrap_or_default();
    match field {
        "name" => json!(a.canonical_name),
        "affiliations" => json!(a
            .affiliations
            .iter()
            .map(|i| g.institution(i).map_or(i.as_str(), |r| r.name.as_str()))
            .collect::<Vec<_>>()),
        "paperCount" => json!(papers.len()),
        "citationCount" => json!(papers.iter().map(|id| g.citing_edges(*id).count()).sum::<usize>()),
        "papers" => Value::Array(
            papers
                .iter()
                .filter_map(|id| g.paper(*id))
                .map(|p| json!({"corpusId": p.corpus_id, "title": p.title}))
                .collect(),
        ),
        other => unreachable!("field {other} was validated"),
    }
}

/// `{authorId, ...fields}`.
pub fn author(g: &Graph, a: &Author, fields: &[String]) -> Value {
    let mut m = Map::new();
    m.insert("authorId".into(), json!(a.author_id));
    for f in fields {
        m.insert(f.clone(), author_field(g, a, f));
    }
    Value::Object(m)
}

/// One citation or reference row: edge attributes plus the paper on the
/// other end under `paper_key`.
pub fn edge(g: &Graph, e: &CitationEdge, other: u64, paper_key: &str, fields: &[String]) -> Value {
    let (edge_fields, paper_fields): (Vec<String>, Vec<String>) =
        fields.iter().cloned().partition(|f| EDGE_FIELDS.contains(&f.as_str()));
    let mut m = Map::new();
    for f in &edge_fields {
        let v = match f.as_str() {
            "contexts" => json!(e.contexts.iter().map(|c| &c.text).collect::<Vec<_>>()),
            "intents" => json!([e.intent]),
            "isInfluential" => json!(e.is_influential),
            other => unreachable!("field {other} was validated"),
        };
        m.insert(f.clone(), v);
    }
    let p = g.paper(other).map_or(Value::Null, |p| paper(g, p, &paper_fields));
    m.insert(paper_key.into(), p);
    Value::Object(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fields_are_validated_and_deduplicated() {
        let got = parse_fields(Some("title, year,title"), &PAPER_FIELDS, &["title"]).unwrap();
        assert_eq!(got, ["title", "year"]);
        assert_eq!(parse_fields(None, &PAPER_FIELDS, &["title"]).unwrap(), ["title"]);
        assert_eq!(parse_fields(Some(""), &PAPER_FIELDS, &["title"]).unwrap(), ["title"]);
        assert!(parse_fields(Some("title,colour"), &PAPER_FIELDS, &["title"]).is_err());
    }
}
