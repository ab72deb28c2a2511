//! REST service under `/v1`: tables, benchmarks and campaign lifecycle.
//!
//! Every request is checked in a fixed order: bearer token (401), role
//! (403), body (400), resource (404), execution (500).

mod auth;
mod error;

use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, RawQuery, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Extension, Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value as Json_};
use uuid::Uuid;

use crate::campaign::{Campaign, CampaignConfig, CampaignError, ExportKind};
use crate::datastore::{FilterExpr, Lineage, Query, SchemaTemplate, Store, StoreOptions, TravelerForm};

pub use auth::{ApiToken, Role, TokenStore};
pub use error::ApiError;

struct Slot {
    state: Mutex<Campaign>,
    view: RwLock<Arc<Campaign>>,
}

/// Shared service state.
pub struct App {
    store: Store,
    tokens: TokenStore,
    campaigns: RwLock<BTreeMap<Uuid, Arc<Slot>>>,
    campaign_dir: Option<PathBuf>,
}

impl App {
    pub fn new(store: Store, tokens: TokenStore) -> App {
        App { store, tokens, campaigns: RwLock::default(), campaign_dir: None }
    }

    /// Persists campaign snapshots under `dir` and reloads any found there.
    pub fn with_campaign_dir(mut self, dir: PathBuf) -> Result<App, String> {
        fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        let mut loaded = BTreeMap::new();
        for entry in fs::read_dir(&dir).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| Uuid::parse_str(s).ok()) else {
                continue;
            };
            let text = fs::read_to_string(&path).map_err(|e| e.to_string())?;
            let c = Campaign::from_snapshot(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            loaded.insert(id, Arc::new(Slot { view: RwLock::new(Arc::new(c.clone())), state: Mutex::new(c) }));
        }
        self.campaigns = RwLock::new(loaded);
        self.campaign_dir = Some(dir);
        Ok(self)
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn tokens(&self) -> &TokenStore {
        &self.tokens
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ApiError> {
        let missing = || ApiError::not_found(format!("no campaign {id:?}"));
        let id = Uuid::parse_str(id).map_err(|_| missing())?;
        self.campaigns.read().unwrap_or_else(|e| e.into_inner()).get(&id).cloned().ok_or_else(missing)
    }

    fn persist(&self, id: Uuid, c: &Campaign) -> Result<(), ApiError> {
        if let Some(dir) = &self.campaign_dir {
            let tmp = dir.join(format!("{id}.json.tmp"));
            fs::write(&tmp, c.snapshot()).map_err(|e| ApiError::internal(&e))?;
            fs::rename(&tmp, dir.join(format!("{id}.json"))).map_err(|e| ApiError::internal(&e))?;
        }
        Ok(())
    }
}

/// Runs `f` on a copy of the campaign and publishes the copy only on
/// success, so a failed operation leaves the campaign untouched.
async fn mutate<T, F>(app: Arc<App>, id: String, f: F) -> Result<(T, Arc<Campaign>), ApiError>
where
    T: Send + 'static,
    F: FnOnce(&mut Campaign) -> Result<T, CampaignError> + Send + 'static,
{
    let slot = app.slot(&id)?;
    let uuid = Uuid::parse_str(&id).expect("slot lookup parsed it");
    tokio::task::spawn_blocking(move || {
        let mut guard = slot.state.lock().unwrap_or_else(|e| e.into_inner());
        let mut next = guard.clone();
        let out = f(&mut next)?;
        app.persist(uuid, &next)?;
        *guard = next.clone();
        let view = Arc::new(next);
        *slot.view.write().unwrap_or_else(|e| e.into_inner()) = view.clone();
        Ok((out, view))
    })
    .await
    .map_err(|e| ApiError::internal(&e))?
}

fn view(app: &App, id: &str) -> Result<Arc<Campaign>, ApiError> {
    Ok(app.slot(id)?.view.read().unwrap_or_else(|e| e.into_inner()).clone())
}

fn require(token: &ApiToken, role: Role) -> Result<(), ApiError> {
    if token.role >= role {
        Ok(())
    } else {
        Err(ApiError::forbidden(match role {
            Role::Admin => "admin",
            Role::Editor => "editor",
            Role::Viewer => "viewer",
        }))
    }
}

/// Strict JSON body parsing; errors carry the path of the offending field.
fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let body: &[u8] = if body.iter().all(u8::is_ascii_whitespace) { b"{}" } else { body };
    let mut de = serde_json::Deserializer::from_slice(body);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let err = ApiError::bad_request("invalid_body", e.inner().to_string());
        if path == "." {
            err
        } else {
            err.at(path)
        }
    })?;
    de.end().map_err(|e| ApiError::bad_request("invalid_body", e.to_string()))?;
    Ok(value)
}

fn wants_csv(headers: &HeaderMap) -> bool {
    headers.get(header::ACCEPT).and_then(|v| v.to_str().ok()).is_some_and(|v| v.contains("text/csv"))
}

fn csv_response(text: String) -> Response {
    ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], text).into_response()
}

/// Body of `POST /tables/{id}/query`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryBody {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<Json_>,
    #[serde(default, rename = "numRows", skip_serializing_if = "Option::is_none")]
    pub num_rows: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cursor: Option<String>,
}

impl QueryBody {
    /// Checks the body and turns it into a datastore query.
    pub fn into_query(self) -> Result<Query, ApiError> {
        if self.columns.as_ref().is_some_and(Vec::is_empty) {
            return Err(ApiError::bad_request("invalid_body", "columns must not be empty").at("columns"));
        }
        let num_rows = match self.num_rows {
            Some(n) if n <= 0 => {
                return Err(ApiError::bad_request("invalid_body", "numRows must be positive").at("numRows"));
            }
            n => n.map(|n| n as usize),
        };
        let filter = match &self.filter {
            Some(f) => Some(FilterExpr::from_json(f).map_err(|e| {
                let path = if e.path.is_empty() { "filter".to_string() } else { format!("filter.{}", e.path) };
                ApiError::bad_request("malformed_filter", e.to_string()).at(path)
            })?),
            None => None,
        };
        Ok(Query { columns: self.columns, filter, num_rows, cursor: self.cursor })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordBody {
    record: Map<String, Json_>,
    #[serde(default)]
    form: Option<String>,
    #[serde(default)]
    source: Option<String>,
    #[serde(default)]
    parents: Vec<Uuid>,
    #[serde(default)]
    transform: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasurementBody {
    proposal_id: Uuid,
    #[serde(default)]
    y: Option<Vec<f64>>,
    #[serde(default)]
    fidelity: Option<f64>,
    #[serde(default)]
    expire: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepBody {
    #[serde(default)]
    steps: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Empty {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TokenBody {
    role: Role,
    org: String,
}

type AppState = State<Arc<App>>;
type Tok = Extension<ApiToken>;

async fn healthz() -> Json<Json_> {
    Json(json!({"status": "ok"}))
}

async fn list_tables(State(app): AppState) -> Result<Json<Json_>, ApiError> {
    Ok(Json(json!({ "tables": app.store.list_tables()? })))
}

async fn create_table(State(app): AppState, Extension(tok): Tok, body: Bytes) -> Result<Response, ApiError> {
    require(&tok, Role::Admin)?;
    let template: SchemaTemplate = parse(&body)?;
    let name = app.store.create_table(template)?;
    Ok((StatusCode::CREATED, Json(json!({ "name": name })), ).into_response())
}

async fn metadata(State(app): AppState, Path(id): Path<String>) -> Result<Json<Json_>, ApiError> {
    Ok(Json(serde_json::to_value(app.store.metadata(&id)?).expect("metadata serializes")))
}

async fn query_rows(
    State(app): AppState,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    let q = parse::<QueryBody>(&body)?.into_query()?;
    let rows = app.store.query(&id, &q)?;
    if wants_csv(&headers) {
        return Ok(csv_response(rows.to_csv()));
    }
    Ok(Json(serde_json::to_value(&rows).expect("rows serialize")).into_response())
}

async fn insert_record(
    State(app): AppState,
    Extension(tok): Tok,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    require(&tok, Role::Editor)?;
    let b: RecordBody = parse(&body)?;
    let lineage = Lineage {
        source: b.source.unwrap_or_else(|| "api".into()),
        parents: b.parents,
        transform: b.transform.unwrap_or_default(),
    };
    let stamp = app.store.insert(&id, b.form.as_deref(), &b.record, &tok.org, lineage)?;
    Ok((StatusCode::CREATED, Json(json!({ "provenance": stamp }))).into_response())
}

async fn register_form(State(app): AppState, Extension(tok): Tok, body: Bytes) -> Result<Response, ApiError> {
    require(&tok, Role::Admin)?;
    let form: TravelerForm = parse(&body)?;
    let id = form.form_id.clone();
    app.store.register_form(form)?;
    Ok((StatusCode::CREATED, Json(json!({ "form_id": id }))).into_response())
}

async fn create_token(State(app): AppState, Extension(tok): Tok, body: Bytes) -> Result<Response, ApiError> {
    require(&tok, Role::Admin)?;
    let b: TokenBody = parse(&body)?;
    let token = ApiToken { token: Uuid::new_v4().simple().to_string(), role: b.role, org: b.org };
    app.tokens.insert(token.clone());
    Ok((StatusCode::CREATED, Json(json!({"token": token.token, "role": token.role, "org": token.org}))).into_response())
}

async fn list_benchmarks() -> Json<Json_> {
    let list: Vec<Json_> = momf_core::benchmarks::registry()
        .iter()
        .map(|b| {
            json!({
                "name": b.name,
                "dim": b.dim,
                "any_dim": b.any_dim,
                "bounds": b.bounds,
                "objectives": b.objectives,
                "directions": b.directions,
                "optima": b.optima.iter().map(|o| json!({"objective": o.objective, "x": o.x, "value": o.value})).collect::<Vec<_>>(),
                "optimum_tolerance": b.optimum_tolerance,
            })
        })
        .collect();
    Json(json!({ "benchmarks": list }))
}

fn campaign_json(id: &str, c: &Campaign) -> Result<Json_, ApiError> {
    Ok(json!({
        "id": id,
        "phase": c.phase(),
        "config": c.config(),
        "problem": c.problem(),
        "summary": c.summary()?,
        "pending": c.pending(),
        "records": c.records(),
    }))
}

async fn list_campaigns(State(app): AppState) -> Json<Json_> {
    let ids: Vec<(Uuid, Arc<Slot>)> =
        app.campaigns.read().unwrap_or_else(|e| e.into_inner()).iter().map(|(k, v)| (*k, v.clone())).collect();
    let list: Vec<Json_> = ids
        .iter()
        .map(|(id, slot)| {
            let c = slot.view.read().unwrap_or_else(|e| e.into_inner()).clone();
            json!({"id": id.to_string(), "phase": c.phase(), "mode": c.config().mode, "benchmark": c.config().benchmark, "table": c.config().table})
        })
        .collect();
    Json(json!({ "campaigns": list }))
}

async fn create_campaign(State(app): AppState, Extension(tok): Tok, body: Bytes) -> Result<Response, ApiError> {
    require(&tok, Role::Editor)?;
    let config: CampaignConfig = parse(&body)?;
    let store = app.store.clone();
    let c = tokio::task::spawn_blocking(move || Campaign::new(config, Some(&store)))
        .await
        .map_err(|e| ApiError::internal(&e))??;
    let id = Uuid::new_v4();
    app.persist(id, &c)?;
    let body = campaign_json(&id.to_string(), &c)?;
    let slot = Arc::new(Slot { view: RwLock::new(Arc::new(c.clone())), state: Mutex::new(c) });
    app.campaigns.write().unwrap_or_else(|e| e.into_inner()).insert(id, slot);
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn get_campaign(State(app): AppState, Path(id): Path<String>) -> Result<Json<Json_>, ApiError> {
    let c = view(&app, &id)?;
    Ok(Json(campaign_json(&id, &c)?))
}

async fn propose(State(app): AppState, Extension(tok): Tok, Path(id): Path<String>, body: Bytes) -> Result<Json<Json_>, ApiError> {
    require(&tok, Role::Editor)?;
    parse::<Empty>(&body)?;
    let (proposals, c) = mutate(app, id, |c| c.propose()).await?;
    Ok(Json(json!({"proposals": proposals, "phase": c.phase()})))
}

async fn measurements(
    State(app): AppState,
    Extension(tok): Tok,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Json_>, ApiError> {
    require(&tok, Role::Editor)?;
    let b: MeasurementBody = parse(&body)?;
    if !b.expire && b.y.is_none() {
        return Err(ApiError::bad_request("invalid_body", "y is required unless expire is true").at("y"));
    }
    if b.expire && (b.y.is_some() || b.fidelity.is_some()) {
        return Err(ApiError::bad_request("invalid_body", "an expiry carries no measurement").at("expire"));
    }
    let (record, c) = mutate(app, id, move |c| match b.y {
        Some(y) => c.submit(b.proposal_id, &y, b.fidelity),
        None => c.expire(b.proposal_id),
    })
    .await?;
    Ok(Json(json!({"record": record, "phase": c.phase()})))
}

async fn step(State(app): AppState, Extension(tok): Tok, Path(id): Path<String>, body: Bytes) -> Result<Json<Json_>, ApiError> {
    require(&tok, Role::Editor)?;
    let b: StepBody = parse(&body)?;
    let steps = b.steps.unwrap_or(1);
    if steps == 0 {
        return Err(ApiError::bad_request("invalid_body", "steps must be positive").at("steps"));
    }
    let (records, c) = mutate(app, id, move |c| {
        let mut out = Vec::new();
        for _ in 0..steps {
            if c.is_finished() && !out.is_empty() {
                break;
            }
            match c.step()? {
                Some(r) => out.push(r),
                None => break,
            }
        }
        Ok(out)
    })
    .await?;
    Ok(Json(json!({"records": records, "phase": c.phase()})))
}

async fn diagnostics(State(app): AppState, Path(id): Path<String>) -> Result<Json<Json_>, ApiError> {
    let c = view(&app, &id)?;
    Ok(Json(serde_json::to_value(c.diagnostics()?).expect("diagnostics serialize")))
}

/// CSV text as JSON rows: numbers where a cell parses as one, null for
/// empty cells, strings otherwise.
pub fn csv_to_json(text: &str) -> Json_ {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let columns: Vec<String> = r.headers().map(|h| h.iter().map(str::to_string).collect()).unwrap_or_default();
    let rows: Vec<Json_> = r
        .records()
        .filter_map(Result::ok)
        .map(|rec| {
            Json_::Array(
                rec.iter()
                    .map(|cell| {
                        if cell.is_empty() {
                            Json_::Null
                        } else if let Ok(v) = cell.parse::<f64>() {
                            serde_json::Number::from_f64(v).map_or_else(|| json!(cell), Json_::Number)
                        } else {
                            json!(cell)
                        }
                    })
                    .collect(),
            )
        })
        .collect();
    json!({"columns": columns, "rows": rows})
}

async fn export(
    State(app): AppState,
    Path(id): Path<String>,
    RawQuery(raw): RawQuery,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let which = raw
        .as_deref()
        .unwrap_or("")
        .split('&')
        .find_map(|kv| kv.strip_prefix("which="))
        .ok_or_else(|| ApiError::bad_request("invalid_query", "missing ?which=").at("which"))?;
    let kind: ExportKind = which.parse().map_err(|e: String| ApiError::bad_request("invalid_query", e).at("which"))?;
    let c = view(&app, &id)?;
    let text = c.export_csv(kind)?;
    if wants_csv(&headers) {
        return Ok(csv_response(text));
    }
    let mut body = csv_to_json(&text);
    body["which"] = json!(kind.as_str());
    Ok(Json(body).into_response())
}

async fn fallback() -> ApiError {
    ApiError::not_found("no such route")
}

async fn authenticate(State(app): AppState, mut req: Request, next: Next) -> Response {
    if req.uri().path() == "/v1/healthz" {
        return next.run(req).await;
    }
    let token = req
        .headers()
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .and_then(|t| app.tokens.resolve(t.trim()));
    match token {
        Some(t) => {
            req.extensions_mut().insert(t);
            next.run(req).await
        }
        None => ApiError::unauthorized().into_response(),
    }
}

/// Maps framework-level statuses onto the service's status set.
async fn normalize(res: Response) -> Response {
    match res.status().as_u16() {
        200 | 201 | 400 | 401 | 403 | 404 | 500 => res,
        405 => ApiError::not_found("no such route for this method").into_response(),
        s if (400..500).contains(&s) => {
            let reason = res.status().canonical_reason().unwrap_or("bad request").to_lowercase();
            ApiError::bad_request("invalid_request", reason).into_response()
        }
        s => ApiError::internal(&format!("unexpected status {s}")).into_response(),
    }
}

pub fn router(app: Arc<App>) -> Router {
    Router::new()
        .route("/v1/healthz", get(healthz))
        .route("/v1/tables", get(list_tables).post(create_table))
        .route("/v1/tables/{id}/metadata", get(metadata))
        .route("/v1/tables/{id}/query", post(query_rows))
        .route("/v1/tables/{id}/records", post(insert_record))
        .route("/v1/forms", post(register_form))
        .route("/v1/tokens", post(create_token))
        .route("/v1/benchmarks", get(list_benchmarks))
        .route("/v1/campaigns", get(list_campaigns).post(create_campaign))
        .route("/v1/campaigns/{id}", get(get_campaign))
        .route("/v1/campaigns/{id}/propose", post(propose))
        .route("/v1/campaigns/{id}/measurements", post(measurements))
        .route("/v1/campaigns/{id}/step", post(step))
        .route("/v1/campaigns/{id}/diagnostics", get(diagnostics))
        .route("/v1/campaigns/{id}/export", get(export))
        .fallback(fallback)
        .layer(middleware::from_fn_with_state(app.clone(), authenticate))
        .layer(middleware::map_response(normalize))
        .with_state(app)
}

/// Server settings, usually from `MOMF_BIND`, `MOMF_TOKENS` and `MOMF_DATA_DIR`.
#[derive(Debug, Clone, PartialEq)]
pub struct ServeConfig {
    pub bind: SocketAddr,
    pub token_file: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
}

impl ServeConfig {
    pub fn from_env() -> Result<ServeConfig, String> {
        let bind = std::env::var("MOMF_BIND").unwrap_or_else(|_| "127.0.0.1:8080".into());
        Ok(ServeConfig {
            bind: bind.parse().map_err(|e| format!("MOMF_BIND {bind:?}: {e}"))?,
            token_file: std::env::var_os("MOMF_TOKENS").map(PathBuf::from),
            data_dir: std::env::var_os("MOMF_DATA_DIR").map(PathBuf::from),
        })
    }

    pub fn build_app(&self) -> Result<App, String> {
        let tokens = match &self.token_file {
            Some(p) => TokenStore::from_text(&fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?)?,
            None => TokenStore::default(),
        };
        let store = Store::open(StoreOptions { data_dir: self.data_dir.as_ref().map(|d| d.join("tables")), ..StoreOptions::default() })
            .map_err(|e| e.to_string())?;
        let app = App::new(store, tokens);
        match &self.data_dir {
            Some(d) => app.with_campaign_dir(d.join("campaigns")),
            None => Ok(app),
        }
    }
}

/// Serves until ctrl-c.
pub async fn serve(config: ServeConfig) -> Result<(), String> {
    let app = Arc::new(config.build_app()?);
    let listener = tokio::net::TcpListener::bind(config.bind).await.map_err(|e| format!("bind {}: {e}", config.bind))?;
    tracing::info!("listening on {}", config.bind);
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| e.to_string())
}
