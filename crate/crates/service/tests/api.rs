use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tower::ServiceExt;

use stag_core::graphstore::Graph;
use stag_core::pipeline::{run_pipeline, PipelineConfig};
use stag_core::recommend::{coi_score, match_score, RecentIndex, Recommender};
use stag_service::{router, ApiConfig, AppState};

struct Fixture {
    _dir: tempfile::TempDir,
    release_dir: PathBuf,
    state: Arc<AppState>,
}

fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/demo/pipeline.toml");
        let mut config = PipelineConfig::load(&demo).unwrap();
        let dir = tempfile::tempdir().unwrap();
        config.output = dir.path().to_owned();
        let outcome = run_pipeline(&config).unwrap();
        let mut api = ApiConfig::new(dir.path());
        api.rate_limit = 1_000_000;
        api.api_keys = BTreeSet::from(["k1".to_owned()]);
        let state = Arc::new(AppState::load(&api).unwrap());
        Fixture { _dir: dir, release_dir: outcome.release_dir, state }
    })
}

fn graph() -> &'static Graph {
    &fixture().state.graph
}

fn app() -> Router {
    router(fixture().state.clone())
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (status, body) = send(app, Request::get(uri).body(Body::empty()).unwrap()).await;
    (status, serde_json::from_slice(&body).unwrap())
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    let req = Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let (status, body) = send(app, req).await;
    (status, serde_json::from_slice(&body).unwrap())
}

fn keys(v: &Value) -> BTreeSet<&str> {
    v.as_object().unwrap().keys().map(String::as_str).collect()
}

fn assert_error(status: StatusCode, body: &Value, want: StatusCode) {
    assert_eq!(status, want, "{body}");
    assert_eq!(keys(body), BTreeSet::from(["error"]));
    assert!(body["error"].is_string());
}

#[tokio::test]
async fn paper_field_selection_is_exact() {
    let app = app();
    let p = graph().paper(1).unwrap();
    let (status, body) = get(&app, "/graph/v1/paper/CorpusId:1?fields=title,year").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({"corpusId": 1, "title": p.title, "year": p.year()}));

    let (_, body) = get(&app, "/graph/v1/paper/CorpusId:1").await;
    assert_eq!(keys(&body), BTreeSet::from(["corpusId", "title"]));

    let all = stag_service::render::PAPER_FIELDS.join(",");
    let (_, body) = get(&app, &format!("/graph/v1/paper/CorpusId:1?fields={all}")).await;
    assert_eq!(keys(&body).len(), stag_service::render::PAPER_FIELDS.len() + 1);
    assert_eq!(body["authors"].as_array().unwrap().len(), p.author_ids.len());
}

#[tokio::test]
async fn external_ids_resolve_including_slashes() {
    let app = app();
    let p = graph().papers().find(|p| p.external_ids.keys().any(|k| k.as_str() == "DOI")).unwrap();
    let doi = p.external_ids.iter().find(|(k, _)| k.as_str() == "DOI").unwrap().1;
    assert!(doi.contains('/'));
    let (status, body) = get(&app, &format!("/graph/v1/paper/DOI:{doi}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["corpusId"], json!(p.corpus_id));

    let (status, body) = get(&app, "/graph/v1/paper/DOI:10.9999/unknown").await;
    assert_error(status, &body, StatusCode::NOT_FOUND);
    let (status, body) = get(&app, "/graph/v1/paper/CorpusId:999999").await;
    assert_error(status, &body, StatusCode::NOT_FOUND);
    let (status, body) = get(&app, "/graph/v1/paper/nonsense").await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);
    let (status, body) = get(&app, "/graph/v1/paper/CorpusId:1?fields=colour").await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);
    let (status, body) = get(&app, "/graph/v1/nothing").await;
    assert_error(status, &body, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn citation_listings_page_through_the_graph() {
    let app = app();
    let g = graph();
    let hub = g.papers().max_by_key(|p| g.citing_edges(p.corpus_id).count()).unwrap().corpus_id;
    let total = g.citing_edges(hub).count();
    assert!(total > 3);
    let mut seen = Vec::new();
    let mut offset = 0;
    loop {
        let (status, body) =
            get(&app, &format!("/graph/v1/paper/CorpusId:{hub}/citations?offset={offset}&limit=3&fields=title,isInfluential")).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body["total"], json!(total));
        for row in body["data"].as_array().unwrap() {
            assert_eq!(keys(row), BTreeSet::from(["citingPaper", "isInfluential"]));
            assert_eq!(keys(&row["citingPaper"]), BTreeSet::from(["corpusId", "title"]));
            seen.push(row["citingPaper"]["corpusId"].as_u64().unwrap());
        }
        match body.get("next") {
            Some(n) => offset = n.as_u64().unwrap() as usize,
            None => break,
        }
    }
    let expected: Vec<u64> = g.get_citations(hub, 0, 1000).unwrap().items.iter().map(|e| e.citing).collect();
    assert_eq!(seen, expected);

    let (status, body) = get(&app, &format!("/graph/v1/paper/CorpusId:{}/references?fields=contexts", seen[0])).await;
    assert_eq!(status, StatusCode::OK);
    let rows = body["data"].as_array().unwrap();
    assert!(rows.iter().any(|r| r["citedPaper"]["corpusId"] == json!(hub)));
    assert!(rows.iter().all(|r| r["contexts"].is_array()));

    let (status, body) = get(&app, &format!("/graph/v1/paper/CorpusId:{hub}/citations?limit=0")).await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);
    let (status, body) = get(&app, &format!("/graph/v1/paper/CorpusId:{hub}/citations?limit=1001")).await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn search_applies_filters() {
    let app = app();
    let g = graph();
    let p = g.paper(5).unwrap();
    let word = p.title.split_whitespace().last().unwrap();
    let (status, body) = get(&app, &format!("/graph/v1/paper/search?query={word}&fields=year,venueId&limit=1000")).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<u64> = body["data"].as_array().unwrap().iter().map(|r| r["corpusId"].as_u64().unwrap()).collect();
    assert!(ids.contains(&5));

    let year = p.year().unwrap();
    let (_, body) = get(&app, &format!("/graph/v1/paper/search?query={word}&year={year}&fields=year&limit=1000")).await;
    assert!(body["data"].as_array().unwrap().iter().all(|r| r["year"] == json!(year)));

    if let Some(field) = p.fields_of_study.iter().next() {
        let (status, body) =
            get(&app, &format!("/graph/v1/paper/search?query={word}&fieldsOfStudy={}&fields=fieldsOfStudy", field.as_str().replace(' ', "%20")))
                .await;
        assert_eq!(status, StatusCode::OK);
        assert!(body["data"].as_array().unwrap().iter().all(|r| r["fieldsOfStudy"].as_array().unwrap().contains(&json!(field.as_str()))));
    }
    let (status, body) = get(&app, "/graph/v1/paper/search?query=x&year=soon").await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);
    let (status, body) = get(&app, "/graph/v1/paper/search").await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn author_endpoints() {
    let app = app();
    let g = graph();
    let a = g.authors().max_by_key(|a| g.author_papers(a.author_id).unwrap().len()).unwrap();
    let (status, body) = get(&app, &format!("/graph/v1/author/{}?fields=name,paperCount", a.author_id)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({"authorId": a.author_id, "name": a.canonical_name, "paperCount": g.author_papers(a.author_id).unwrap().len()}));

    let (_, body) = get(&app, &format!("/graph/v1/author/{}/papers?fields=authors", a.author_id)).await;
    for p in body["data"].as_array().unwrap() {
        assert!(p["authors"].as_array().unwrap().iter().any(|x| x["authorId"] == json!(a.author_id)));
    }
    let last = a.canonical_name.split_whitespace().last().unwrap();
    let (_, body) = get(&app, &format!("/graph/v1/author/search?query={last}")).await;
    assert!(body["data"].as_array().unwrap().iter().any(|x| x["authorId"] == json!(a.author_id)));

    let (status, body) = get(&app, "/graph/v1/author/99999999").await;
    assert_error(status, &body, StatusCode::NOT_FOUND);
    let (status, body) = get(&app, "/graph/v1/author/abc").await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn keys_and_rate_limits() {
    let fx = fixture();
    let mut config = ApiConfig::new(&fx.release_dir);
    config.rate_limit = 3;
    config.key_rate_limit = 5;
    config.api_keys = BTreeSet::from(["k1".to_owned()]);
    let clock = Arc::new(AtomicU64::new(0));
    let c = clock.clone();
    let state = AppState::new(fx.state.graph.clone(), PathBuf::new(), Vec::new(), config)
        .with_clock(Arc::new(move || c.load(Ordering::SeqCst)));
    let app = router(Arc::new(state));
    for _ in 0..3 {
        assert_eq!(get(&app, "/graph/v1/paper/CorpusId:1").await.0, StatusCode::OK);
    }
    let (status, body) = get(&app, "/graph/v1/paper/CorpusId:1").await;
    assert_error(status, &body, StatusCode::TOO_MANY_REQUESTS);

    let keyed = |key: &str| Request::get("/graph/v1/paper/CorpusId:1").header("x-api-key", key).body(Body::empty()).unwrap();
    for _ in 0..5 {
        assert_eq!(send(&app, keyed("k1")).await.0, StatusCode::OK, "a key has its own budget");
    }
    assert_eq!(send(&app, keyed("k1")).await.0, StatusCode::TOO_MANY_REQUESTS);
    assert_eq!(send(&app, keyed("nope")).await.0, StatusCode::FORBIDDEN);

    clock.store(60, Ordering::SeqCst);
    assert_eq!(get(&app, "/graph/v1/paper/CorpusId:1").await.0, StatusCode::OK, "new window");
}

#[tokio::test]
async fn recommendations_match_direct_calls() {
    let app = app();
    let g = graph();
    let now = chrono::NaiveDate::from_ymd_opt(2024, 6, 1).unwrap();
    let (status, body) = post(
        &app,
        "/recommendations/v1/papers",
        json!({"positivePaperIds": ["CorpusId:3", "CorpusId:8"], "negativePaperIds": ["CorpusId:11"], "limit": 10, "seed": 4, "now": "2024-06-01"}),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let got = body["recommendedPapers"].as_array().unwrap();
    let direct = Recommender::new(g).recommend(&RecentIndex::build(g, now), &[3, 8], &[11], 10, 4).unwrap();
    assert_eq!(got.len(), direct.len());
    assert!(!got.is_empty());
    for (row, d) in got.iter().zip(&direct) {
        assert_eq!(row["corpusId"], json!(d.corpus_id));
        assert_eq!(row["score"], json!(d.score));
        assert_eq!(keys(row), BTreeSet::from(["corpusId", "score", "title", "year", "authors"]));
        assert!(stag_core::recommend::in_window(g.paper(d.corpus_id).unwrap().pub_date.unwrap(), now));
    }

    let (status, body) = post(&app, "/recommendations/v1/papers", json!({"positivePaperIds": []})).await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);
    let (status, body) =
        post(&app, "/recommendations/v1/papers", json!({"positivePaperIds": ["CorpusId:1", "DOI:10.1/none"]})).await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("DOI:10.1/none"));
    let (status, body) = post(&app, "/recommendations/v1/papers", json!({"positive": ["CorpusId:1"]})).await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn peer_review_matrix_matches_direct_calls() {
    let app = app();
    let g = graph();
    let reviewers: Vec<u64> = g.authors().map(|a| a.author_id).take(2).collect();
    let p = g.paper(reviewers.iter().find_map(|r| g.author_papers(*r).unwrap().first().copied()).unwrap()).unwrap();
    let submissions = json!([
        {"title": p.title, "abstract": p.abstract_text, "authorIds": [p.author_ids[0]]},
        {"title": "An unrelated survey", "abstract": "", "authorIds": []},
        {"title": "Protein folding", "abstract": "Structures of enzymes.", "authorIds": [reviewers[1].to_string()]},
    ]);
    let (status, body) = post(&app, "/peer-review/v1/score", json!({"reviewers": reviewers, "submissions": submissions})).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let scores = body["scores"].as_array().unwrap();
    assert_eq!(scores.len(), 6);
    for cell in scores {
        let r = cell["reviewerId"].as_u64().unwrap();
        let s = &submissions[cell["submissionIndex"].as_u64().unwrap() as usize];
        let authors: Vec<u64> =
            s["authorIds"].as_array().unwrap().iter().map(|a| a.as_u64().unwrap_or_else(|| a.as_str().unwrap().parse().unwrap())).collect();
        assert_eq!(cell["coi"], json!(coi_score(r, &authors, g).unwrap()));
        let expected = match_score(r, s["title"].as_str().unwrap(), s["abstract"].as_str().unwrap(), g).ok();
        assert_eq!(cell["matchScore"], json!(expected));
    }

    let (status, body) =
        post(&app, "/peer-review/v1/score", json!({"reviewers": [reviewers[0], 99999999], "submissions": []})).await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("99999999"));
}

#[tokio::test]
async fn datasets_listing_and_download() {
    let app = app();
    let release = fixture().release_dir.file_name().unwrap().to_string_lossy().into_owned();
    let (status, body) = get(&app, "/datasets/v1/release").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!([release]));

    let (status, manifest) = get(&app, &format!("/datasets/v1/release/{release}")).await;
    assert_eq!(status, StatusCode::OK);
    for d in manifest["datasets"].as_array().unwrap() {
        let file = d["file"].as_str().unwrap();
        let req = Request::get(format!("/datasets/v1/release/{release}/dataset/{file}")).body(Body::empty()).unwrap();
        let (status, bytes) = send(&app, req).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(hex::encode(Sha256::digest(&bytes)), d["sha256"].as_str().unwrap());
    }
    let (status, body) = get(&app, &format!("/datasets/v1/release/{release}/dataset/venues-of-mars/part-000.jsonl.gz")).await;
    assert_error(status, &body, StatusCode::NOT_FOUND);
    let (status, body) = get(&app, &format!("/datasets/v1/release/{release}/dataset/papers/part-001.jsonl.gz")).await;
    assert_error(status, &body, StatusCode::NOT_FOUND);
    let (status, body) = get(&app, "/datasets/v1/release/1999-01-01").await;
    assert_error(status, &body, StatusCode::NOT_FOUND);
    let (status, _) = get(&app, "/datasets/v1/release/latest").await;
    assert_eq!(status, StatusCode::OK);
}

#[test]
fn bad_snapshot_fails_at_startup() {
    let dir = tempfile::tempdir().unwrap();
    assert!(AppState::load(&ApiConfig::new(dir.path())).is_err());
}
