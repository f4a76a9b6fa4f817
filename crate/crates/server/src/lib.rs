//! HTTP+JSON API over exploration sessions.
//!
//! Datasets are ingested once and shared read-only; each session owns its
//! history behind an async mutex so mutations are serialized, while reads
//! are served from a snapshot published after every mutation. Mutations that
//! outlast [`ServerOptions::job_threshold`] are answered with a job handle
//! that can be polled at `/jobs/{id}`.

mod error;

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::{Path as FsPath, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use netmine_core::io::{
    canonical_json, read_dataset, read_dataset_from, DatasetManifest, ExportKind, FORMAT_VERSION,
};
use netmine_core::session::{NullCache, OverlaySpec, ScopeMode, Session, SessionConfig};
use netmine_core::significance::Progress;
use netmine_core::stats::{GlobalReference, PathScope};
use netmine_core::{ClusterId, Network};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

pub use error::ApiError;

#[derive(Debug, Clone)]
pub struct ServerOptions {
    /// Mutations still running after this long are turned into jobs.
    pub job_threshold: Duration,
    /// Defaults for session parameters a client leaves out.
    pub defaults: SessionConfig,
}

impl Default for ServerOptions {
    fn default() -> Self {
        Self {
            job_threshold: Duration::from_secs(2),
            defaults: SessionConfig::default(),
        }
    }
}

struct Dataset {
    net: Arc<Network>,
    manifest: DatasetManifest,
    cache: NullCache,
}

struct SessionSlot {
    dataset: String,
    /// Held for the whole of a mutation.
    live: Arc<tokio::sync::Mutex<Session>>,
    /// Copy of the session taken after the last mutation; cheap to clone
    /// because history entries are shared.
    published: RwLock<Arc<Session>>,
}

impl SessionSlot {
    fn snapshot(&self) -> Arc<Session> {
        Arc::clone(&self.published.read().unwrap())
    }

    fn publish(&self, session: &Session) {
        *self.published.write().unwrap() = Arc::new(session.clone());
    }
}

struct Job {
    session: String,
    progress: Arc<Progress>,
    outcome: Mutex<Option<(StatusCode, Value)>>,
}

/// Shared server state; cloning shares everything.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    options: ServerOptions,
    datasets: RwLock<HashMap<String, Arc<Dataset>>>,
    sessions: RwLock<HashMap<String, Arc<SessionSlot>>>,
    jobs: RwLock<HashMap<String, Arc<Job>>>,
    next_dataset: AtomicU64,
    next_session: AtomicU64,
    next_job: AtomicU64,
}

impl AppState {
    pub fn new(options: ServerOptions) -> Self {
        Self {
            inner: Arc::new(Inner {
                options,
                datasets: RwLock::default(),
                sessions: RwLock::default(),
                jobs: RwLock::default(),
                next_dataset: AtomicU64::new(1),
                next_session: AtomicU64::new(1),
                next_job: AtomicU64::new(1),
            }),
        }
    }

    /// Registers an already-built network and returns its dataset id.
    pub fn add_dataset(&self, net: Network, manifest: DatasetManifest) -> String {
        let id = format!(
            "d{}",
            self.inner.next_dataset.fetch_add(1, Ordering::Relaxed)
        );
        let dataset = Dataset {
            net: Arc::new(net),
            manifest,
            cache: NullCache::new(),
        };
        self.inner
            .datasets
            .write()
            .unwrap()
            .insert(id.clone(), Arc::new(dataset));
        id
    }

    /// Reads a manifest file from disk and registers the dataset.
    pub fn load_dataset(&self, manifest_path: &FsPath) -> Result<String, ApiError> {
        let manifest = DatasetManifest::load(manifest_path)?;
        let net = read_dataset(manifest_path)?;
        Ok(self.add_dataset(net, manifest))
    }

    fn dataset(&self, id: &str) -> Result<Arc<Dataset>, ApiError> {
        self.inner
            .datasets
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_dataset(id))
    }

    fn session(&self, id: &str) -> Result<Arc<SessionSlot>, ApiError> {
        self.inner
            .sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route(
            "/health",
            get(|| async { json_response(StatusCode::OK, &json!({ "status": "ok" })) }),
        )
        .route("/datasets", post(create_dataset))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/state", get(get_state))
        .route("/sessions/{id}/refine", post(refine))
        .route("/sessions/{id}/coarsen", post(coarsen))
        .route("/sessions/{id}/overlay", post(overlay))
        .route("/sessions/{id}/groups", post(groups))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/redo", post(redo))
        .route("/sessions/{id}/export", get(export))
        .route("/jobs/{id}", get(get_job))
        .with_state(state)
}

/// Binds `addr` and serves until the process stops.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

/// Canonical JSON body with the format version stamped on objects.
pub(crate) fn json_response(status: StatusCode, body: &Value) -> Response {
    let mut body = body.clone();
    if let Value::Object(map) = &mut body {
        map.insert(
            "format_version".into(),
            Value::String(FORMAT_VERSION.into()),
        );
    }
    (
        status,
        [(header::CONTENT_TYPE, "application/json")],
        canonical_json(&body),
    )
        .into_response()
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let text: &[u8] = if body.is_empty() { b"{}" } else { body };
    serde_json::from_slice(text)
        .map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("response serializes")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetRequest {
    /// Path of a manifest file on the server.
    manifest_path: Option<PathBuf>,
    /// Inline manifest; table paths are used when no inline tables are given.
    manifest: Option<DatasetManifest>,
    nodes: Option<String>,
    edges: Option<String>,
}

async fn create_dataset(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let request: DatasetRequest = parse_body(&body)?;
    let (net, manifest) = tokio::task::spawn_blocking(move || -> Result<_, ApiError> {
        match (request.manifest_path, request.manifest) {
            (Some(path), None) => Ok((read_dataset(&path)?, DatasetManifest::load(&path)?)),
            (None, Some(manifest)) => {
                let net = match (request.nodes, request.edges) {
                    (Some(nodes), Some(edges)) => {
                        read_dataset_from(&manifest, nodes.as_bytes(), edges.as_bytes())?
                    }
                    (None, None) => {
                        let open = |p: &PathBuf| {
                            std::fs::File::open(p).map_err(|e| netmine_core::io::IoError::Io {
                                path: p.display().to_string(),
                                message: e.to_string(),
                            })
                        };
                        read_dataset_from(
                            &manifest,
                            open(&manifest.nodes)?,
                            open(&manifest.edges)?,
                        )?
                    }
                    _ => {
                        return Err(ApiError::bad_request(
                            "give both `nodes` and `edges` tables or neither",
                        ))
                    }
                };
                Ok((net, manifest))
            }
            _ => Err(ApiError::bad_request(
                "give exactly one of `manifest_path` or `manifest`",
            )),
        }
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    let summary = json!({
        "nodes": net.node_count(),
        "edges": net.edge_count(),
        "components": net.connected_components().iter().map(Vec::len).collect::<Vec<_>>(),
        "schema": net.schema(),
    });
    let id = state.add_dataset(net, manifest);
    let mut body = summary;
    body["dataset"] = Value::String(id);
    Ok(json_response(StatusCode::CREATED, &body))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionRequest {
    dataset: String,
    seed: Option<u64>,
    replicates: Option<usize>,
    swaps_per_edge: Option<usize>,
    alpha: Option<f64>,
    layout_iterations: Option<usize>,
    scope: Option<ScopeMode>,
}

fn session_body(id: &str, dataset: &str, session: &Session) -> Value {
    json!({
        "session": id,
        "dataset": dataset,
        "history": to_value(&session.history()),
        "state": to_value(&session.view()),
    })
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let request: SessionRequest = parse_body(&body)?;
    let dataset = state.dataset(&request.dataset)?;
    let defaults = &state.inner.options.defaults;
    let config = SessionConfig {
        seed: request.seed.unwrap_or(defaults.seed),
        replicates: request.replicates.unwrap_or(defaults.replicates),
        swaps_per_edge: request.swaps_per_edge.unwrap_or(defaults.swaps_per_edge),
        alpha: request.alpha.unwrap_or(defaults.alpha),
        layout_iterations: request
            .layout_iterations
            .unwrap_or(defaults.layout_iterations),
        scope: request.scope.unwrap_or(defaults.scope),
        year_attribute: dataset.manifest.year_attribute.clone(),
    };
    if config.replicates == 0 {
        return Err(ApiError::bad_request("`replicates` must be at least 1"));
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(ApiError::bad_request(
            "`alpha` must lie strictly between 0 and 1",
        ));
    }
    let net = Arc::clone(&dataset.net);
    let cache = dataset.cache.clone();
    let session = tokio::task::spawn_blocking(move || Session::new(net, config, cache))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    let id = format!(
        "s{}",
        state.inner.next_session.fetch_add(1, Ordering::Relaxed)
    );
    let body = session_body(&id, &request.dataset, &session);
    let slot = SessionSlot {
        dataset: request.dataset,
        published: RwLock::new(Arc::new(session.clone())),
        live: Arc::new(tokio::sync::Mutex::new(session)),
    };
    state
        .inner
        .sessions
        .write()
        .unwrap()
        .insert(id.clone(), Arc::new(slot));
    Ok(json_response(StatusCode::CREATED, &body))
}

async fn get_state(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let slot = state.session(&id)?;
    let session = slot.snapshot();
    Ok(json_response(
        StatusCode::OK,
        &session_body(&id, &slot.dataset, &session),
    ))
}

type Mutation = Box<dyn FnOnce(&mut Session, &Progress) -> Result<Value, ApiError> + Send>;

/// Runs `op` with exclusive access to the session. The reply carries the
/// op's result merged with the new state, or a job handle when the op is
/// still running after the configured threshold.
async fn mutate(state: &AppState, id: &str, op: Mutation) -> Result<Response, ApiError> {
    let slot = state.session(id)?;
    let mut guard = Arc::clone(&slot.live).lock_owned().await;
    let job = Arc::new(Job {
        session: id.to_owned(),
        progress: Arc::new(Progress::new()),
        outcome: Mutex::new(None),
    });
    let worker_job = Arc::clone(&job);
    let worker_slot = Arc::clone(&slot);
    let session_id = id.to_owned();
    let handle = tokio::task::spawn_blocking(move || {
        let outcome = match op(&mut guard, &worker_job.progress) {
            Ok(result) => {
                worker_slot.publish(&guard);
                let mut body = session_body(&session_id, &worker_slot.dataset, &guard);
                body["result"] = result;
                (StatusCode::OK, body)
            }
            Err(e) => (e.status, e.body()),
        };
        *worker_job.outcome.lock().unwrap() = Some(outcome.clone());
        outcome
    });
    match tokio::time::timeout(state.inner.options.job_threshold, handle).await {
        Ok(joined) => {
            let (status, body) = joined.map_err(|e| ApiError::internal(e.to_string()))?;
            Ok(json_response(status, &body))
        }
        Err(_) => {
            let job_id = format!("j{}", state.inner.next_job.fetch_add(1, Ordering::Relaxed));
            state
                .inner
                .jobs
                .write()
                .unwrap()
                .insert(job_id.clone(), Arc::clone(&job));
            let (done, total) = job.progress.snapshot();
            Ok(json_response(
                StatusCode::ACCEPTED,
                &json!({
                    "job": job_id,
                    "session": id,
                    "status": "running",
                    "progress": { "done": done, "total": total },
                }),
            ))
        }
    }
}

async fn get_job(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let job = state
        .inner
        .jobs
        .read()
        .unwrap()
        .get(&id)
        .cloned()
        .ok_or_else(|| ApiError::unknown_job(&id))?;
    let (done, total) = job.progress.snapshot();
    let mut body = json!({
        "job": id,
        "session": job.session,
        "progress": { "done": done, "total": total },
    });
    match job.outcome.lock().unwrap().as_ref() {
        None => body["status"] = json!("running"),
        Some((status, outcome)) => {
            body["status"] = json!("done");
            body["http_status"] = json!(status.as_u16());
            body["outcome"] = outcome.clone();
        }
    }
    Ok(json_response(StatusCode::OK, &body))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RefineRequest {
    clusters: Vec<ClusterId>,
}

async fn refine(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let request: RefineRequest = parse_body(&body)?;
    mutate(
        &state,
        &id,
        Box::new(move |s, progress| Ok(to_value(&s.refine(&request.clusters, Some(progress))?))),
    )
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CoarsenRequest {
    k: usize,
}

async fn coarsen(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let request: CoarsenRequest = parse_body(&body)?;
    mutate(
        &state,
        &id,
        Box::new(move |s, progress| Ok(to_value(&s.coarsen(request.k, Some(progress))?))),
    )
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OverlayRequest {
    attribute: String,
    category: Option<String>,
    #[serde(default)]
    reference: GlobalReference,
    alpha: Option<f64>,
}

async fn overlay(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let request: OverlayRequest = parse_body(&body)?;
    mutate(
        &state,
        &id,
        Box::new(move |s, _| {
            let spec = OverlaySpec {
                attribute: request.attribute,
                category: request.category,
                reference: request.reference,
                alpha: request.alpha.unwrap_or(s.config().alpha),
            };
            Ok(to_value(&s.overlay(spec)?))
        }),
    )
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupsRequest {
    /// Explicit cluster → label map.
    labels: Option<BTreeMap<ClusterId, String>>,
    /// Derive labels from the current overlay's verdicts for this category.
    category: Option<String>,
    #[serde(default)]
    paths: PathScope,
}

async fn groups(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let request: GroupsRequest = parse_body(&body)?;
    mutate(
        &state,
        &id,
        Box::new(move |s, _| {
            let tables = match (request.labels, request.category) {
                (Some(labels), None) => s.groups(labels, request.paths)?,
                (None, Some(category)) => s.auto_groups(&category, request.paths)?,
                _ => {
                    return Err(ApiError::bad_request(
                        "give exactly one of `labels` or `category`",
                    ))
                }
            };
            Ok(to_value(&tables))
        }),
    )
    .await
}

async fn undo(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    mutate(
        &state,
        &id,
        Box::new(|s, _| {
            s.undo()?;
            Ok(Value::Null)
        }),
    )
    .await
}

async fn redo(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    mutate(
        &state,
        &id,
        Box::new(|s, _| {
            s.redo()?;
            Ok(Value::Null)
        }),
    )
    .await
}

#[derive(Deserialize)]
struct ExportQuery {
    kind: Option<String>,
}

async fn export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<ExportQuery>,
) -> Result<Response, ApiError> {
    let kind: ExportKind = query
        .kind
        .as_deref()
        .unwrap_or("json")
        .parse()
        .map_err(ApiError::bad_request)?;
    let session = state.session(&id)?.snapshot();
    let bytes = session.export(kind)?;
    let content_type = match kind {
        ExportKind::Json => "application/json",
        ExportKind::Svg => "image/svg+xml",
        ExportKind::Csv => "text/csv",
    };
    Ok((
        StatusCode::OK,
        [(header::CONTENT_TYPE, content_type)],
        bytes,
    )
        .into_response())
}
