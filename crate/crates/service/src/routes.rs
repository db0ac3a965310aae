use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use certsched_core::explain::{CorrectionAtom, ExplainConfig};
use certsched_core::scenario::{load_scenario, FilterParams};

use crate::error::ApiError;
use crate::session::{CorrectionOutcome, OrderRow, QueryKind, ScheduleSummary, Session};

type SessionCell = Arc<RwLock<Session>>;

#[derive(Default)]
pub struct AppState {
    pub cfg: ExplainConfig,
    sessions: RwLock<HashMap<String, SessionCell>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(cfg: ExplainConfig) -> Self {
        AppState {
            cfg,
            ..AppState::default()
        }
    }

    fn get(&self, id: &str) -> Result<SessionCell, ApiError> {
        self.sessions
            .read()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::session_not_found(id))
    }

    fn insert(&self, session: Session) -> String {
        let id = session.id.clone();
        self.sessions
            .write()
            .expect("session table lock")
            .insert(id.clone(), Arc::new(RwLock::new(session)));
        id
    }

    fn fresh_id(&self) -> String {
        format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed) + 1)
    }
}

/// Runs solver work off the async executor.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

#[derive(Debug, Deserialize)]
struct CreateParams {
    cloud_threshold_milli: Option<i64>,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    Query(params): Query<CreateParams>,
    body: String,
) -> Result<(StatusCode, Json<ScheduleSummary>), ApiError> {
    let scenario = load_scenario(&body)?;
    let filter = params
        .cloud_threshold_milli
        .map(FilterParams::with_threshold)
        .unwrap_or_default();
    let st = state.clone();
    let summary = blocking(move || {
        let session = Session::create(st.fresh_id(), scenario, &filter, st.cfg.clone())?;
        let summary = session.summary();
        st.insert(session);
        Ok(summary)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn get_schedule(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<ScheduleSummary>, ApiError> {
    let cell = state.get(&id)?;
    let s = cell.read().expect("session lock");
    Ok(Json(s.summary()))
}

async fn get_orders(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Vec<OrderRow>>, ApiError> {
    let cell = state.get(&id)?;
    blocking(move || Ok(Json(cell.read().expect("session lock").orders()?))).await
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryBody {
    changes: Option<Vec<CorrectionAtom>>,
}

fn parse_json<T: for<'de> Deserialize<'de> + Default>(body: &str) -> Result<T, ApiError> {
    if body.trim().is_empty() {
        return Ok(T::default());
    }
    serde_json::from_str(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_document", e.to_string()))
}

async fn explain(
    State(state): State<Arc<AppState>>,
    Path((id, kind, order)): Path<(String, String, String)>,
    body: String,
) -> Result<Json<Value>, ApiError> {
    let kind = QueryKind::parse(&kind).ok_or_else(|| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "unknown_query_kind",
            format!("query kind `{kind}` is not one of why, whynot, whatif"),
        )
        .with_field("kind")
    })?;
    let q: QueryBody = parse_json(&body)?;
    let cell = state.get(&id)?;
    blocking(move || {
        let s = cell.read().expect("session lock");
        Ok(Json(s.query(&order, kind, q.changes.as_deref())?))
    })
    .await
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorrectionBody {
    atoms: Vec<CorrectionAtom>,
}

async fn apply_corrections(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: String,
) -> Result<Json<CorrectionOutcome>, ApiError> {
    let b: CorrectionBody = serde_json::from_str(&body)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_atom", e.to_string()).with_field("atoms"))?;
    let cell = state.get(&id)?;
    blocking(move || {
        let mut s = cell.write().expect("session lock");
        Ok(Json(s.apply_correction(&b.atoms)?))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct ReportParams {
    seeds: Option<u64>,
}

async fn get_report(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(params): Query<ReportParams>,
) -> Result<Json<Value>, ApiError> {
    let cell = state.get(&id)?;
    let seeds: Vec<u64> = (0..params.seeds.unwrap_or(8)).collect();
    blocking(move || {
        let r = cell.read().expect("session lock").report(seeds)?;
        Ok(Json(serde_json::to_value(&r).map_err(|e| ApiError::internal(e.to_string()))?))
    })
    .await
}

async fn healthz() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/schedule", get(get_schedule))
        .route("/sessions/{id}/orders", get(get_orders))
        .route("/sessions/{id}/explain/{kind}/{order}", post(explain))
        .route("/sessions/{id}/corrections", post(apply_corrections))
        .route("/sessions/{id}/report", get(get_report))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}
