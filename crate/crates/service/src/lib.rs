//! HTTP API over one imported snapshot: graph lookups and search,
//! recommendations, peer-review scores and dataset downloads.
//!
//! The graph is read-only for the life of the process, so every response is
//! a function of the snapshot and the request.

pub mod limit;
pub mod render;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Body;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{ConnectInfo, Path as UrlPath, Query, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::NaiveDate;
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use stag_core::enrich::{FieldLabel, FosVocab, VOCAB_CAP};
use stag_core::graphstore::{
    import_snapshot, list_releases, read_manifest, resolve_release_dir, Graph, GraphError, PaperId, SearchFilters,
    MANIFEST_FILE, MAX_PAGE_LIMIT,
};
use stag_core::recommend::{coi_score, graph_vocab, match_score, RecentIndex, RecommendError, Recommender, MAX_K};

use limit::{system_clock, Clock, RateLimiter};

pub const DEFAULT_PAGE_LIMIT: usize = 100;

#[derive(Debug, Clone)]
pub struct ApiConfig {
    pub bind: SocketAddr,
    /// A release directory, or a directory of releases (the latest is served).
    pub snapshot: PathBuf,
    pub api_keys: BTreeSet<String>,
    /// Requests per minute for clients without a key.
    pub rate_limit: u32,
    /// Requests per minute for each valid key.
    pub key_rate_limit: u32,
    pub max_page_limit: usize,
}

impl ApiConfig {
    pub fn new(snapshot: impl Into<PathBuf>) -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            snapshot: snapshot.into(),
            api_keys: BTreeSet::new(),
            rate_limit: 100,
            key_rate_limit: 6000,
            max_page_limit: MAX_PAGE_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.rate_limit == 0 || self.key_rate_limit == 0 {
            return Err(ServiceError::Config("rate limits must be positive".into()));
        }
        if !(1..=MAX_PAGE_LIMIT).contains(&self.max_page_limit) {
            return Err(ServiceError::Config(format!("max page limit must be in 1..={MAX_PAGE_LIMIT}")));
        }
        Ok(())
    }
}

/// One key per line; blank lines and `#` comments are skipped.
pub fn read_keys(path: &Path) -> Result<BTreeSet<String>, ServiceError> {
    let text = std::fs::read_to_string(path).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("config: {0}")]
    Config(String),
    #[error("snapshot: {0}")]
    Snapshot(#[from] GraphError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// An error response; the body is always `{"error": message}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.message}))).into_response()
    }
}

impl From<GraphError> for ApiError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::BadIdentifier(_) | GraphError::BadRequest(_) => ApiError::bad_request(e.to_string()),
            GraphError::NotFound(_) => ApiError::not_found(e.to_string()),
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
        }
    }
}

impl From<RecommendError> for ApiError {
    fn from(e: RecommendError) -> Self {
        match e {
            RecommendError::BadRequest(_) | RecommendError::NotFound(_) | RecommendError::NotScorable(_) => {
                ApiError::bad_request(e.to_string())
            }
            RecommendError::Train(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

type ApiResult<T = Response> = Result<T, ApiError>;

pub struct AppState {
    pub graph: Graph,
    /// Directory holding the releases offered for download.
    pub releases_root: PathBuf,
    /// Releases offered for download, ascending.
    pub releases: Vec<String>,
    pub vocab: FosVocab,
    /// `now` used by recommendations when the request gives none: the latest publication date.
    pub default_now: Option<NaiveDate>,
    pub config: ApiConfig,
    limiter: RateLimiter,
    recent: Mutex<HashMap<NaiveDate, Arc<RecentIndex>>>,
}

impl AppState {
    pub fn load(config: &ApiConfig) -> Result<Self, ServiceError> {
        config.validate()?;
        let release_dir = resolve_release_dir(&config.snapshot)?;
        let graph = import_snapshot(&release_dir)?;
        let (releases_root, releases) = if config.snapshot.join(MANIFEST_FILE).is_file() {
            let name = release_dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            (release_dir.parent().map(Path::to_path_buf).unwrap_or_default(), vec![name])
        } else {
            (config.snapshot.clone(), list_releases(&config.snapshot)?)
        };
        log::info!(
            "serving {} ({} papers, {} authors, {} citations)",
            release_dir.display(),
            graph.data().papers.len(),
            graph.data().authors.len(),
            graph.edges().len()
        );
        Ok(Self::new(graph, releases_root, releases, config.clone()))
    }

    pub fn new(graph: Graph, releases_root: PathBuf, releases: Vec<String>, config: ApiConfig) -> Self {
        let vocab = graph_vocab(&graph, VOCAB_CAP);
        let default_now = graph.papers().filter_map(|p| p.pub_date).max();
        Self {
            graph,
            releases_root,
            releases,
            vocab,
            default_now,
            config,
            limiter: RateLimiter::new(system_clock()),
            recent: Mutex::new(HashMap::new()),
        }
    }

    /// Replace the rate-limit clock (seconds); used by tests.
    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.limiter = RateLimiter::new(clock);
        self
    }

    fn recent_index(&self, now: NaiveDate) -> Arc<RecentIndex> {
        let mut cache = self.recent.lock().unwrap_or_else(|e| e.into_inner());
        if cache.len() > 16 {
            cache.clear();
        }
        cache.entry(now).or_insert_with(|| Arc::new(RecentIndex::build(&self.graph, now))).clone()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/graph/v1/paper/search", get(paper_search))
        .route("/graph/v1/paper/{*rest}", get(paper_routes))
        .route("/graph/v1/author/search", get(author_search))
        .route("/graph/v1/author/{id}", get(author_get))
        .route("/graph/v1/author/{id}/papers", get(author_papers))
        .route("/recommendations/v1/papers", post(recommendations))
        .route("/peer-review/v1/score", post(peer_review))
        .route("/datasets/v1/release", get(release_list))
        .route("/datasets/v1/release/{id}", get(release_manifest))
        .route("/datasets/v1/release/{id}/dataset/{name}/{part}", get(release_file))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .layer(middleware::from_fn_with_state(state.clone(), gate))
        .with_state(state)
}

/// Key check and rate limiting. A missing key is allowed at the anonymous
/// rate; an unknown key is refused.
async fn gate(State(state): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    let (client, limit) = match req.headers().get("x-api-key") {
        Some(key) => {
            let key = key.to_str().unwrap_or_default();
            if !state.config.api_keys.contains(key) {
                return ApiError::new(StatusCode::FORBIDDEN, "invalid api key").into_response();
            }
            (format!("key:{key}"), state.config.key_rate_limit)
        }
        None => {
            let ip = req
                .extensions()
                .get::<ConnectInfo<SocketAddr>>()
                .map_or_else(|| "anonymous".to_owned(), |c| c.0.ip().to_string());
            (format!("ip:{ip}"), state.config.rate_limit)
        }
    };
    if !state.limiter.admit(&client, limit) {
        return ApiError::new(StatusCode::TOO_MANY_REQUESTS, "rate limit exceeded, retry in the next minute")
            .into_response();
    }
    next.run(req).await
}

type Params = BTreeMap<String, String>;

fn query(q: Result<Query<Params>, QueryRejection>) -> ApiResult<Params> {
    Ok(q?.0)
}

fn usize_param(params: &Params, name: &str, default: usize) -> ApiResult<usize> {
    match params.get(name) {
        None => Ok(default),
        Some(v) => v.trim().parse().map_err(|_| ApiError::bad_request(format!("{name} must be a non-negative integer"))),
    }
}

/// `(offset, limit)` from the query, limit capped by the configured maximum.
fn paging(state: &AppState, params: &Params) -> ApiResult<(usize, usize)> {
    let offset = usize_param(params, "offset", 0)?;
    let limit = usize_param(params, "limit", DEFAULT_PAGE_LIMIT.min(state.config.max_page_limit))?;
    if limit == 0 || limit > state.config.max_page_limit {
        return Err(ApiError::bad_request(format!("limit must be in 1..={}", state.config.max_page_limit)));
    }
    Ok((offset, limit))
}

fn page_body(total: usize, offset: usize, data: Vec<Value>) -> Value {
    let mut body = json!({"total": total, "offset": offset});
    if offset + data.len() < total {
        body["next"] = json!(offset + data.len());
    }
    body["data"] = Value::Array(data);
    body
}

fn resolve_paper(g: &Graph, raw: &str) -> ApiResult<u64> {
    let id: PaperId = raw.parse()?;
    g.resolve(&id).ok_or_else(|| ApiError::not_found(format!("paper {raw} not found")))
}

fn parse_author_id(raw: &str) -> Option<u64> {
    raw.trim().parse().ok()
}

async fn paper_routes(
    State(state): State<Arc<AppState>>,
    UrlPath(rest): UrlPath<String>,
    q: Result<Query<Params>, QueryRejection>,
) -> ApiResult {
    let params = query(q)?;
    let g = &state.graph;
    // Identifiers such as DOIs may themselves contain slashes.
    let (raw_id, listing) = if let Some(id) = rest.strip_suffix("/citations") {
        (id, Some(true))
    } else if let Some(id) = rest.strip_suffix("/references") {
        (id, Some(false))
    } else {
        (rest.as_str(), None)
    };
    let corpus_id = resolve_paper(g, raw_id)?;
    let Some(citations) = listing else {
        let fields = render::parse_fields(params.get("fields").map(String::as_str), &render::PAPER_FIELDS, &["title"])?;
        return Ok(Json(render::paper(g, g.paper(corpus_id).expect("resolved"), &fields)).into_response());
    };
    let allowed: Vec<&str> = render::PAPER_FIELDS.iter().chain(&render::EDGE_FIELDS).copied().collect();
    let fields = render::parse_fields(params.get("fields").map(String::as_str), &allowed, &["title"])?;
    let (offset, limit) = paging(&state, &params)?;
    let (page, key) = if citations {
        (g.get_citations(corpus_id, offset, limit)?, "citingPaper")
    } else {
        (g.get_references(corpus_id, offset, limit)?, "citedPaper")
    };
    let data = page
        .items
        .iter()
        .map(|e| render::edge(g, e, if citations { e.citing } else { e.cited }, key, &fields))
        .collect();
    Ok(Json(page_body(page.total, page.offset, data)).into_response())
}

/// `2019` or `2016-2020`; open ends like `2016-` and `-2020` are allowed.
fn parse_years(raw: &str) -> ApiResult<(i32, i32)> {
    let bad = || ApiError::bad_request(format!("bad year filter {raw:?}"));
    let year = |s: &str, open: i32| -> ApiResult<i32> {
        if s.trim().is_empty() {
            Ok(open)
        } else {
            s.trim().parse().map_err(|_| bad())
        }
    };
    match raw.split_once('-') {
        None => {
            let y = raw.trim().parse().map_err(|_| bad())?;
            Ok((y, y))
        }
        Some((lo, hi)) => {
            let range = (year(lo, i32::MIN)?, year(hi, i32::MAX)?);
            if range.0 > range.1 || raw.trim() == "-" {
                return Err(bad());
            }
            Ok(range)
        }
    }
}

fn search_filters(g: &Graph, params: &Params) -> ApiResult<SearchFilters> {
    let mut filters = SearchFilters::default();
    if let Some(y) = params.get("year").filter(|s| !s.trim().is_empty()) {
        filters.years = Some(parse_years(y)?);
    }
    if let Some(raw) = params.get("fieldsOfStudy") {
        for f in raw.split(',').map(str::trim).filter(|f| !f.is_empty()) {
            let label: FieldLabel = f.parse().map_err(|_| ApiError::bad_request(format!("unknown field of study {f:?}")))?;
            filters.fields_of_study.insert(label);
        }
    }
    if let Some(v) = params.get("venue").map(|s| s.trim()).filter(|s| !s.is_empty()) {
        // A venue id, or a canonical venue name (case-insensitive).
        let id = match g.venue(v) {
            Some(rec) => rec.venue_id.clone(),
            None => g
                .data()
                .venues
                .values()
                .find(|rec| rec.canonical_name.eq_ignore_ascii_case(v))
                .map(|rec| rec.venue_id.clone())
                .unwrap_or_else(|| v.to_owned()),
        };
        filters.venue_id = Some(id);
    }
    Ok(filters)
}

async fn paper_search(State(state): State<Arc<AppState>>, q: Result<Query<Params>, QueryRejection>) -> ApiResult {
    let params = query(q)?;
    let g = &state.graph;
    let text = params.get("query").ok_or_else(|| ApiError::bad_request("query is required"))?;
    let fields = render::parse_fields(params.get("fields").map(String::as_str), &render::PAPER_FIELDS, &["title"])?;
    let filters = search_filters(g, &params)?;
    let (offset, limit) = paging(&state, &params)?;
    let page = g.search_papers(text, &filters, offset, limit)?;
    let data = page.items.iter().map(|s| render::paper(g, g.paper(s.id).expect("indexed"), &fields)).collect();
    Ok(Json(page_body(page.total, page.offset, data)).into_response())
}

async fn author_get(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    q: Result<Query<Params>, QueryRejection>,
) -> ApiResult {
    let params = query(q)?;
    let g = &state.graph;
    let fields = render::parse_fields(params.get("fields").map(String::as_str), &render::AUTHOR_FIELDS, &["name"])?;
    let id = parse_author_id(&id).ok_or_else(|| ApiError::bad_request(format!("bad author id {id:?}")))?;
    let a = g.author(id).ok_or_else(|| ApiError::not_found(format!("author {id} not found")))?;
    Ok(Json(render::author(g, a, &fields)).into_response())
}

async fn author_papers(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    q: Result<Query<Params>, QueryRejection>,
) -> ApiResult {
    let params = query(q)?;
    let g = &state.graph;
    let fields = render::parse_fields(params.get("fields").map(String::as_str), &render::PAPER_FIELDS, &["title"])?;
    let id = parse_author_id(&id).ok_or_else(|| ApiError::bad_request(format!("bad author id {id:?}")))?;
    let (offset, limit) = paging(&state, &params)?;
    let page = g.get_author_papers(id, offset, limit)?;
    let data = page.items.iter().filter_map(|p| g.paper(*p)).map(|p| render::paper(g, p, &fields)).collect();
    Ok(Json(page_body(page.total, page.offset, data)).into_response())
}

async fn author_search(State(state): State<Arc<AppState>>, q: Result<Query<Params>, QueryRejection>) -> ApiResult {
    let params = query(q)?;
    let g = &state.graph;
    let text = params.get("query").ok_or_else(|| ApiError::bad_request("query is required"))?;
    let fields = render::parse_fields(params.get("fields").map(String::as_str), &render::AUTHOR_FIELDS, &["name"])?;
    let (offset, limit) = paging(&state, &params)?;
    let page = g.search_authors(text, offset, limit)?;
    let data = page.items.iter().filter_map(|s| g.author(s.id)).map(|a| render::author(g, a, &fields)).collect();
    Ok(Json(page_body(page.total, page.offset, data)).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RecommendationRequest {
    #[serde(default)]
    pub positive_paper_ids: Vec<String>,
    #[serde(default)]
    pub negative_paper_ids: Vec<String>,
    #[serde(default = "default_recommendation_limit")]
    pub limit: usize,
    #[serde(default)]
    pub seed: u64,
    pub now: Option<NaiveDate>,
}

fn default_recommendation_limit() -> usize {
    MAX_K
}

async fn recommendations(
    State(state): State<Arc<AppState>>,
    q: Result<Query<Params>, QueryRejection>,
    body: Result<Json<RecommendationRequest>, JsonRejection>,
) -> ApiResult {
    let params = query(q)?;
    let Json(req) = body?;
    let fields = render::parse_fields(
        params.get("fields").map(String::as_str),
        &render::PAPER_FIELDS,
        &["title", "year", "authors"],
    )?;
    if req.positive_paper_ids.is_empty() {
        return Err(ApiError::bad_request("at least one positive paper id is required"));
    }
    let g = &state.graph;
    let mut unresolved = Vec::new();
    let mut resolve = |ids: &[String]| -> Vec<u64> {
        ids.iter()
            .filter_map(|raw| {
                let id = raw.parse::<PaperId>().ok().and_then(|id| g.resolve(&id));
                if id.is_none() {
                    unresolved.push(raw.clone());
                }
                id
            })
            .collect()
    };
    let positives = resolve(&req.positive_paper_ids);
    let negatives = resolve(&req.negative_paper_ids);
    if !unresolved.is_empty() {
        return Err(ApiError::bad_request(format!("unresolvable paper ids: {}", unresolved.join(", "))));
    }
    let now = req
        .now
        .or(state.default_now)
        .ok_or_else(|| ApiError::bad_request("now is required for an undated graph"))?;
    let (limit, seed) = (req.limit, req.seed);
    let worker = state.clone();
    let ranked = tokio::task::spawn_blocking(move || {
        let index = worker.recent_index(now);
        Recommender::with_vocab(&worker.graph, worker.vocab.clone()).recommend(&index, &positives, &negatives, limit, seed)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let papers: Vec<Value> = ranked
        .iter()
        .map(|r| {
            let mut v = render::paper(g, g.paper(r.corpus_id).expect("ranked paper exists"), &fields);
            v["score"] = json!(r.score);
            v
        })
        .collect();
    Ok(Json(json!({"recommendedPapers": papers})).into_response())
}

/// An author id given as a number or a numeric string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AuthorRef {
    Num(u64),
    Str(String),
}

impl AuthorRef {
    fn id(&self) -> ApiResult<u64> {
        match self {
            AuthorRef::Num(n) => Ok(*n),
            AuthorRef::Str(s) => parse_author_id(s).ok_or_else(|| ApiError::bad_request(format!("bad author id {s:?}"))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Submission {
    #[serde(default)]
    pub title: String,
    #[serde(default, rename = "abstract")]
    pub abstract_text: String,
    #[serde(default)]
    pub author_ids: Vec<AuthorRef>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeerReviewRequest {
    pub reviewers: Vec<AuthorRef>,
    pub submissions: Vec<Submission>,
}

async fn peer_review(State(state): State<Arc<AppState>>, body: Result<Json<PeerReviewRequest>, JsonRejection>) -> ApiResult {
    let Json(req) = body?;
    let g = &state.graph;
    let reviewers = req.reviewers.iter().map(AuthorRef::id).collect::<ApiResult<Vec<u64>>>()?;
    let unknown: Vec<String> = reviewers.iter().filter(|r| g.author(**r).is_none()).map(u64::to_string).collect();
    if !unknown.is_empty() {
        return Err(ApiError::bad_request(format!("unknown reviewer ids: {}", unknown.join(", "))));
    }
    let submissions = req
        .submissions
        .iter()
        .map(|s| Ok((s, s.author_ids.iter().map(AuthorRef::id).collect::<ApiResult<Vec<u64>>>()?)))
        .collect::<ApiResult<Vec<_>>>()?;
    let mut scores = Vec::with_capacity(reviewers.len() * submissions.len());
    for r in &reviewers {
        for (i, (s, authors)) in submissions.iter().enumerate() {
            let coi = coi_score(*r, authors, g)?;
            let matched = match match_score(*r, &s.title, &s.abstract_text, g) {
                Ok(v) => json!(v),
                Err(RecommendError::NotScorable(_)) => Value::Null,
                Err(e) => return Err(e.into()),
            };
            scores.push(json!({"reviewerId": r, "submissionIndex": i, "coi": coi, "matchScore": matched}));
        }
    }
    Ok(Json(json!({"scores": scores})).into_response())
}

fn known_release(state: &AppState, id: &str) -> ApiResult<String> {
    let id = if id == "latest" { state.releases.last().map(String::as_str).unwrap_or(id) } else { id };
    state
        .releases
        .iter()
        .find(|r| *r == id)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("release {id} not found")))
}

async fn release_list(State(state): State<Arc<AppState>>) -> ApiResult {
    Ok(Json(&state.releases).into_response())
}

async fn release_manifest(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let id = known_release(&state, &id)?;
    let manifest = read_manifest(&state.releases_root.join(&id))?;
    Ok(Json(manifest).into_response())
}

async fn release_file(
    State(state): State<Arc<AppState>>,
    UrlPath((id, name, part)): UrlPath<(String, String, String)>,
) -> ApiResult {
    let id = known_release(&state, &id)?;
    let dir = state.releases_root.join(&id);
    let manifest = read_manifest(&dir)?;
    let entry = manifest
        .dataset(&name)
        .filter(|d| d.file == format!("{name}/{part}"))
        .ok_or_else(|| ApiError::not_found(format!("dataset {name}/{part} not in release {id}")))?;
    let bytes = tokio::fs::read(dir.join(&entry.file))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let mut resp = Response::new(Body::from(bytes));
    resp.headers_mut().insert(header::CONTENT_TYPE, HeaderValue::from_static("application/gzip"));
    Ok(resp)
}

/// Bind and serve until the process is stopped.
pub async fn serve(config: ApiConfig) -> Result<(), ServiceError> {
    let state = Arc::new(AppState::load(&config)?);
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state).into_make_service_with_connect_info::<SocketAddr>()).await?;
    Ok(())
}
