//! JSON-over-HTTP API. Reads share a lock; ingest and review marks take
//! it exclusively, one writer at a time.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequest, Multipart, Path, RawQuery, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::Serialize;
use tokio::sync::RwLock;

use super::api::{self, AnnotateRequest, ReviewRequest, RunRequest, SemanticQuery};
use super::{to_json, Config, ErrorBody, ErrorDetail, IngestRequest, ServiceError, Store};
use crate::retrieval::LinkSource;
use crate::textindex::{DocKind, SearchRequest};

pub type SharedStore = Arc<RwLock<Store>>;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        json_response(status, &self.body())
    }
}

fn json_response<T: Serialize + ?Sized>(status: StatusCode, value: &T) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], to_json(value)).into_response()
}

fn ok<T: Serialize>(value: T) -> Response {
    json_response(StatusCode::OK, &value)
}

type Reply = Result<Response, ServiceError>;

fn parse_json<T: DeserializeOwned>(body: &[u8]) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(format!("invalid JSON body: {e}")))
}

fn query_pairs(raw: Option<String>) -> Vec<(String, String)> {
    raw.map(|q| form_urlencoded::parse(q.as_bytes()).into_owned().collect())
        .unwrap_or_default()
}

fn first<'a>(pairs: &'a [(String, String)], key: &str) -> Option<&'a str> {
    pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

/// Solr-style `q`, `fl` (comma separated, repeatable), `facet.field` and
/// `fq` (both repeatable).
pub fn search_request_from_query(pairs: &[(String, String)]) -> Result<SearchRequest, ServiceError> {
    let mut req = SearchRequest::new(first(pairs, "q").unwrap_or(""));
    let fl: Vec<&str> = pairs
        .iter()
        .filter(|(k, _)| k == "fl")
        .flat_map(|(_, v)| v.split(','))
        .map(str::trim)
        .filter(|f| !f.is_empty())
        .collect();
    if !fl.is_empty() {
        req = req.fl(&fl);
    }
    for (k, v) in pairs {
        match k.as_str() {
            "facet.field" => req = req.facet(v),
            "fq" => {
                let (f, value) = SearchRequest::parse_filter(v)?;
                req = req.filter(&f, &value);
            }
            _ => {}
        }
    }
    Ok(req)
}

async fn health(State(store): State<SharedStore>) -> Response {
    ok(api::health(&*store.read().await))
}

async fn ontology_tree(State(store): State<SharedStore>) -> Response {
    ok(api::ontology_tree(store.read().await.ontology()))
}

/// `term` expands a concept; `subject`/`predicate`/`object` expand a
/// triple pattern.
async fn ontology_expand(State(store): State<SharedStore>, RawQuery(raw): RawQuery) -> Reply {
    let pairs = query_pairs(raw);
    let store = store.read().await;
    let policy = match first(&pairs, "policy") {
        Some(p) if !p.is_empty() => p.parse().map_err(ServiceError::BadRequest)?,
        _ => store.policy,
    };
    if let Some(term) = first(&pairs, "term") {
        return Ok(ok(api::expand_concept(store.ontology(), term, policy)?));
    }
    if ["subject", "predicate", "object"]
        .iter()
        .any(|k| first(&pairs, k).is_some())
    {
        let q = SemanticQuery {
            subject: first(&pairs, "subject").map(String::from),
            predicate: first(&pairs, "predicate").map(String::from),
            object: first(&pairs, "object").map(String::from),
            policy: Some(policy),
            kind: None,
        };
        return Ok(ok(api::expand_triple(&store, &q)));
    }
    Err(ServiceError::BadRequest(
        "`term` or a triple pattern is required".into(),
    ))
}

fn is_json(headers: &HeaderMap) -> bool {
    headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"))
}

/// JSON `{"text": ...}` or the raw text itself.
async fn annotate(State(store): State<SharedStore>, headers: HeaderMap, body: Bytes) -> Reply {
    let text = if is_json(&headers) {
        parse_json::<AnnotateRequest>(&body)?.text
    } else {
        String::from_utf8(body.to_vec()).map_err(|_| ServiceError::BadRequest("body is not UTF-8".into()))?
    };
    Ok(ok(api::annotate(store.read().await.ontology(), &text)))
}

async fn ingest_request_from_multipart(mut form: Multipart) -> Result<IngestRequest, ServiceError> {
    let bad = |e: axum::extract::multipart::MultipartError| ServiceError::BadRequest(e.to_string());
    let mut body = None;
    let mut kind = None;
    let mut req = IngestRequest::new(DocKind::Requirement, "");
    while let Some(field) = form.next_field().await.map_err(bad)? {
        let name = field.name().unwrap_or("").to_string();
        let file_name = field.file_name().map(String::from);
        let value = field.text().await.map_err(bad)?;
        match name.as_str() {
            "file" | "body" => {
                if req.id.is_none() {
                    req.id = file_name.as_deref().and_then(file_stem);
                }
                body = Some(value);
            }
            "kind" => kind = Some(value.parse::<DocKind>().map_err(ServiceError::BadRequest)?),
            "id" => req.id = Some(value),
            "title" => req.title = Some(value),
            "link" => req.links.push(value),
            "field" => {
                let (k, v) = value
                    .split_once('=')
                    .ok_or_else(|| ServiceError::BadRequest(format!("field `{value}` is not key=value")))?;
                req.fields.insert(k.trim().to_string(), v.trim().to_string());
            }
            "replace" => req.replace = matches!(value.as_str(), "true" | "1" | "yes" | "on"),
            other => return Err(ServiceError::BadRequest(format!("unknown form field `{other}`"))),
        }
    }
    req.body = body.ok_or_else(|| ServiceError::BadRequest("form field `file` is required".into()))?;
    req.kind = kind.ok_or_else(|| ServiceError::BadRequest("form field `kind` is required".into()))?;
    Ok(req)
}

fn file_stem(name: &str) -> Option<String> {
    std::path::Path::new(name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
}

async fn documents(State(store): State<SharedStore>, request: Request) -> Reply {
    let multipart = request
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    let req = if multipart {
        let form = Multipart::from_request(request, &())
            .await
            .map_err(|e| ServiceError::BadRequest(e.body_text()))?;
        ingest_request_from_multipart(form).await?
    } else {
        let body = Bytes::from_request(request, &())
            .await
            .map_err(|e| ServiceError::BadRequest(e.body_text()))?;
        parse_json(&body)?
    };
    let report = api::ingest(&mut *store.write().await, req)?;
    Ok(json_response(StatusCode::CREATED, &report))
}

async fn run_script(State(store): State<SharedStore>, body: Bytes) -> Reply {
    let req: RunRequest = parse_json(&body)?;
    let mut store = store.write().await;
    Ok(ok(api::run(&mut store, &req)?))
}

async fn search(State(store): State<SharedStore>, RawQuery(raw): RawQuery) -> Reply {
    let req = search_request_from_query(&query_pairs(raw))?;
    Ok(ok(api::search(&*store.read().await, &req)?))
}

async fn semantic_search(State(store): State<SharedStore>, body: Bytes) -> Reply {
    let q: SemanticQuery = parse_json(&body)?;
    Ok(ok(api::semantic_search(&*store.read().await, &q)?))
}

async fn similar(State(store): State<SharedStore>, Path(id): Path<String>, RawQuery(raw): RawQuery) -> Reply {
    let pairs = query_pairs(raw);
    let k = match first(&pairs, "k") {
        Some(k) => k
            .parse()
            .map_err(|_| ServiceError::BadRequest(format!("k must be a positive integer, got `{k}`")))?,
        None => 10,
    };
    Ok(ok(api::similar(&*store.read().await, &id, k)?))
}

/// `mode=semantic|explicit`, `format=json|csv`, optional comma separated
/// `requirements` and `tests`.
async fn traceability(State(store): State<SharedStore>, RawQuery(raw): RawQuery) -> Reply {
    let pairs = query_pairs(raw);
    let mode: LinkSource = first(&pairs, "mode")
        .unwrap_or("semantic")
        .parse()
        .map_err(ServiceError::BadRequest)?;
    let list = |key: &str| {
        first(&pairs, key).map(|v| {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect()
        })
    };
    let matrix = api::traceability(&*store.read().await, mode, list("requirements"), list("tests"))?;
    match first(&pairs, "format").unwrap_or("json") {
        "json" => Ok(ok(matrix)),
        "csv" => Ok(([(header::CONTENT_TYPE, "text/csv")], matrix.to_csv()).into_response()),
        other => Err(ServiceError::BadRequest(format!("unknown format `{other}`"))),
    }
}

async fn review(State(store): State<SharedStore>, body: Bytes) -> Reply {
    let req: ReviewRequest = parse_json(&body)?;
    let mut store = store.write().await;
    Ok(ok(api::review(&mut store, &req)?))
}

async fn not_found() -> Response {
    let body = ErrorBody {
        error: ErrorDetail {
            kind: "not_found",
            message: "no such endpoint".into(),
        },
    };
    json_response(StatusCode::NOT_FOUND, &body)
}

pub fn router(store: SharedStore) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/ontology/tree", get(ontology_tree))
        .route("/ontology/expand", get(ontology_expand))
        .route("/annotate", post(annotate))
        .route("/documents", post(documents))
        .route("/scripts/run", post(run_script))
        .route("/search", get(search))
        .route("/semantic-search", post(semantic_search))
        .route("/logs/{id}/similar", get(similar))
        .route("/traceability", get(traceability))
        .route("/traceability/review", post(review))
        .fallback(not_found)
        .with_state(store)
}

/// Serves until Ctrl-C, then flushes the store.
pub async fn serve(config: &Config) -> Result<(), ServiceError> {
    let store = Arc::new(RwLock::new(Store::open(config)?));
    let listener = tokio::net::TcpListener::bind(config.bind_address()).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::clone(&store)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    let saved = store.read().await.save();
    saved
}
