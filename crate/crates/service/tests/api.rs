use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use certsched_core::explain::ExplainConfig;
use certsched_core::scenario::{canonical_scenario, tiny_scenario};
use certsched_service::{router, AppState};

fn app() -> Router {
    router(Arc::new(AppState::new(ExplainConfig::default())))
}

async fn call(app: &Router, method: &str, uri: &str, body: impl Into<String>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.into()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

async fn canonical_session(app: &Router) -> String {
    let (st, v) = call(app, "POST", "/sessions", canonical_scenario().to_canonical_json()).await;
    assert_eq!(st, StatusCode::CREATED, "{v}");
    v["session_id"].as_str().unwrap().to_string()
}

fn statuses(v: &Value) -> Vec<(String, String)> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|r| (r["order_id"].as_str().unwrap().into(), r["status"].as_str().unwrap().into()))
        .collect()
}

fn count(rows: &[(String, String)], status: &str) -> usize {
    rows.iter().filter(|(_, s)| s == status).count()
}

#[tokio::test]
async fn healthz_reports_ok() {
    let (st, v) = call(&app(), "GET", "/healthz", "").await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["status"], "ok");
}

#[tokio::test]
async fn canonical_upload_schedules_one_order() {
    let app = app();
    let (st, v) = call(&app, "POST", "/sessions", canonical_scenario().to_canonical_json()).await;
    assert_eq!(st, StatusCode::CREATED);
    assert_eq!(v["n_scheduled"], 1);
    assert_eq!(v["n_orders"], 10);

    let id = v["session_id"].as_str().unwrap();
    let (st, sched) = call(&app, "GET", &format!("/sessions/{id}/schedule"), "").await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(sched, v);

    let (st, rows) = call(&app, "GET", &format!("/sessions/{id}/orders"), "").await;
    assert_eq!(st, StatusCode::OK);
    let rows = statuses(&rows);
    assert_eq!(rows.len(), 10);
    assert_eq!(count(&rows, "scheduled"), 1);
    assert_eq!(count(&rows, "tradeoff"), 2);
    assert_eq!(count(&rows, "infeasible"), 7);
}

#[tokio::test]
async fn duplicate_upload_creates_independent_sessions() {
    let app = app();
    let a = canonical_session(&app).await;
    let b = canonical_session(&app).await;
    assert_ne!(a, b);
}

#[tokio::test]
async fn malformed_and_invalid_documents_are_rejected() {
    let app = app();
    let (st, v) = call(&app, "POST", "/sessions", "{not json").await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "malformed_document");

    let mut doc: Value = serde_json::from_str(&canonical_scenario().to_canonical_json()).unwrap();
    doc["horizon_s"] = json!(-5);
    let (st, v) = call(&app, "POST", "/sessions", doc.to_string()).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "invalid_scenario");
    assert!(v["field"].is_string(), "{v}");
}

#[tokio::test]
async fn unknown_session_order_and_kind() {
    let app = app();
    let (st, v) = call(&app, "GET", "/sessions/nope/schedule", "").await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "session_not_found");

    let id = canonical_session(&app).await;
    let (st, v) = call(&app, "POST", &format!("/sessions/{id}/explain/whynot/ORD-99"), "").await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "order_not_found");

    let (st, v) = call(&app, "POST", &format!("/sessions/{id}/explain/how/ORD-01"), "").await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(v["field"], "kind");
}

fn scheduled_order(rows: &[(String, String)]) -> String {
    rows.iter().find(|(_, s)| s == "scheduled").unwrap().0.clone()
}

#[tokio::test]
async fn whynot_on_conjunction_cites_both_causes() {
    let app = app();
    let id = canonical_session(&app).await;
    let uri = format!("/sessions/{id}/explain/whynot/ORD-01");
    let (st, v) = call(&app, "POST", &uri, "").await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["case"], "infeasibility");
    assert_eq!(v["kinds"], json!(["no_downlink", "storage_upper_bound"]));
    let (_, again) = call(&app, "POST", &uri, "").await;
    assert_eq!(again, v);
}

#[tokio::test]
async fn why_lists_tight_and_dominance_and_mismatches_conflict() {
    let app = app();
    let id = canonical_session(&app).await;
    let (_, rows) = call(&app, "GET", &format!("/sessions/{id}/orders"), "").await;
    let sched = scheduled_order(&statuses(&rows));

    let (st, v) = call(&app, "POST", &format!("/sessions/{id}/explain/why/{sched}"), "").await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert!(v["tight"].is_array() && v["dominance"].is_array());

    let (st, v) = call(&app, "POST", &format!("/sessions/{id}/explain/why/ORD-01"), "").await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(v["code"], "not_scheduled");
    let (st, v) = call(&app, "POST", &format!("/sessions/{id}/explain/whynot/{sched}"), "").await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(v["code"], "already_scheduled");
}

#[tokio::test]
async fn whatif_with_empty_space_reports_no_correction() {
    let app = app();
    let id = canonical_session(&app).await;
    let (st, v) = call(&app, "POST", &format!("/sessions/{id}/explain/whatif/ORD-03"), r#"{"changes":[]}"#).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["case"], "no_correction_found");
    assert_eq!(v["order_id"], "ORD-03");
}

#[tokio::test]
async fn applying_cheapest_correction_schedules_order() {
    let app = app();
    let id = canonical_session(&app).await;
    let (st, w) = call(&app, "POST", &format!("/sessions/{id}/explain/whatif/ORD-06"), "").await;
    assert_eq!(st, StatusCode::OK, "{w}");
    assert_eq!(w["validated"], true);

    let body = json!({ "atoms": w["chosen"] }).to_string();
    let (st, out) = call(&app, "POST", &format!("/sessions/{id}/corrections"), body).await;
    assert_eq!(st, StatusCode::OK, "{out}");
    assert!(out["summary"]["schedule"]["assignments"]["ORD-06"].is_string(), "{out}");
    assert!(out["diff"]["newly_scheduled"].as_array().unwrap().contains(&json!("ORD-06")));

    let (_, rows) = call(&app, "GET", &format!("/sessions/{id}/orders"), "").await;
    assert!(statuses(&rows).contains(&("ORD-06".into(), "scheduled".into())));
}

#[tokio::test]
async fn noop_and_invalid_corrections() {
    let app = app();
    let id = canonical_session(&app).await;
    let uri = format!("/sessions/{id}/corrections");
    let (st, out) = call(&app, "POST", &uri, r#"{"atoms":[]}"#).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(out["diff"]["newly_scheduled"], json!([]));
    assert_eq!(out["diff"]["newly_unscheduled"], json!([]));
    assert_eq!(out["diff"]["moved"], json!([]));

    let bad = json!({"atoms": [{"kind": "add_storage_capacity", "satellite_id": "S9", "mb": 10, "cost_milli": 1}]});
    let (st, v) = call(&app, "POST", &uri, bad.to_string()).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
    assert_eq!(v["code"], "invalid_atom");

    let (st, _) = call(&app, "POST", &uri, r#"{"atoms":[{"kind":"teleport"}]}"#).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn exclusion_correction_reports_dropped_order() {
    let app = app();
    let id = canonical_session(&app).await;
    let (_, rows) = call(&app, "GET", &format!("/sessions/{id}/orders"), "").await;
    let sched = scheduled_order(&statuses(&rows));
    let body = json!({"atoms": [{"kind": "exclude_order", "order_id": sched, "cost_milli": 1}]});
    let (st, out) = call(&app, "POST", &format!("/sessions/{id}/corrections"), body.to_string()).await;
    assert_eq!(st, StatusCode::OK, "{out}");
    assert_eq!(out["diff"]["newly_unscheduled"], json!([sched]));

    let (st, r) = call(&app, "GET", &format!("/sessions/{id}/report?seeds=2"), "").await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(r["status"][&sched], "infeasible", "{}", r["status"]);
}

#[tokio::test]
async fn reports_for_canonical_and_tiny() {
    let app = app();
    let id = canonical_session(&app).await;
    let (st, r) = call(&app, "GET", &format!("/sessions/{id}/report"), "").await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(r["n_certificates"], 7);
    assert_eq!(r["counterfactual"], json!({"passed": 7, "total": 7}));
    assert_eq!(r["stability"]["pairs"].as_array().unwrap().len(), 28);
    assert_eq!(r["all_passed"], true);

    let (st, v) = call(&app, "POST", "/sessions", tiny_scenario().to_canonical_json()).await;
    assert_eq!(st, StatusCode::CREATED);
    let tid = v["session_id"].as_str().unwrap();
    let (_, r) = call(&app, "GET", &format!("/sessions/{tid}/report"), "").await;
    assert_eq!(r["n_certificates"], 0);
    assert_eq!(r["n_scheduled"], 2);
}
