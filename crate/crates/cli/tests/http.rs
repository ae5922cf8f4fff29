use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use itcsp::service::SessionManager;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> axum::Router {
    let mut m = SessionManager::new();
    m.add_dir(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")).unwrap();
    itcsp_cli::app(Arc::new(m))
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn create(app: &axum::Router, model: &str) -> (String, Value) {
    let (s, v) = call(app, "POST", "/sessions", Some(&json!({ "model": model }).to_string())).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    (v["id"].as_str().unwrap().to_string(), v)
}

#[tokio::test]
async fn models_are_listed() {
    let (s, v) = call(&app(), "GET", "/models", None).await;
    assert_eq!(s, StatusCode::OK);
    let ids: Vec<&str> = v.as_array().unwrap().iter().map(|m| m["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["chemical", "patrol"]);
}

#[tokio::test]
async fn a_patrol_session_walks_the_first_scenario() {
    let app = app();
    let (id, v) = create(&app, "patrol").await;
    assert_eq!(v["banner"], "Starting ITree Simulation...");
    let menu = &v["menu"];
    assert_eq!(menu["kind"], "choices");
    assert_eq!(menu["events"].as_array().unwrap().len(), 8);
    assert_eq!(menu["history_len"], 0);
    assert_eq!(menu["events"][0], json!({ "index": 1, "channel": "Reset_PatrolMod", "payload_text": "Din", "payload": "din" }));

    let (s, m) = call(&app, "POST", &format!("/sessions/{id}/choice"), Some(r#"{"index": 2}"#)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(m["events"].as_array().unwrap().len(), 1);
    assert_eq!(m["events"][0]["channel"], "Right_PatrolMod");
    assert_eq!(m["events"][0]["payload_text"], "(Dout,-2)");
    assert_eq!(m["history_len"], 1);
    assert_eq!(m["text"], "Events: (1) Right_PatrolMod (Dout,-2);");

    for _ in 0..2 {
        call(&app, "POST", &format!("/sessions/{id}/choice"), Some(r#"{"index": 1}"#)).await;
    }
    let (_, h) = call(&app, "GET", &format!("/sessions/{id}/history"), None).await;
    let texts: Vec<String> =
        h.as_array().unwrap().iter().map(|e| format!("{} {}", e["channel"].as_str().unwrap(), e["payload_text"].as_str().unwrap())).collect();
    assert_eq!(texts, ["Cal_PatrolMod (Din,-3)", "Right_PatrolMod (Dout,-2)", "Right_PatrolMod (Dout,-2)"]);

    let (s, m) = call(&app, "POST", &format!("/sessions/{id}/reset"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(m["events"].as_array().unwrap().len(), 8);
    let (_, h) = call(&app, "GET", &format!("/sessions/{id}/history"), None).await;
    assert_eq!(h, json!([]));
    let (s, m) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(m["history_len"], 0);
}

#[tokio::test]
async fn errors_map_to_status_codes() {
    let app = app();
    let (s, v) = call(&app, "POST", "/sessions", Some(r#"{"model": "nope"}"#)).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert!(v["error"].as_str().unwrap().contains("nope"));
    let (s, _) = call(&app, "POST", "/sessions", Some("{not json")).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, "POST", "/sessions", Some(r#"{"config": {}}"#)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, "POST", "/sessions/zzz/choice", Some(r#"{"index": 1}"#)).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, "GET", "/sessions/zzz/history", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let (id, _) = create(&app, "patrol").await;
    let (s, v) = call(&app, "POST", &format!("/sessions/{id}/choice"), Some(r#"{"index": 99}"#)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("99"));
    let (s, _) = call(&app, "POST", &format!("/sessions/{id}/choice"), Some(r#"{"index": "two"}"#)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, "POST", &format!("/sessions/{id}/choice"), Some("[")).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (_, m) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(m["events"].as_array().unwrap().len(), 8);
}

#[tokio::test]
async fn a_terminated_session_refuses_choices_but_keeps_history() {
    let app = app();
    let (id, v) = create(&app, "chemical").await;
    assert_eq!(v["menu"]["events"].as_array().unwrap().len(), 22);
    let mut last = Value::Null;
    for k in [1, 9, 1, 1] {
        let (s, m) = call(&app, "POST", &format!("/sessions/{id}/choice"), Some(&json!({ "index": k }).to_string())).await;
        assert_eq!(s, StatusCode::OK);
        last = m;
    }
    assert_eq!(last["kind"], "terminated");
    assert_eq!(last["events"], json!([]));
    let (s, v) = call(&app, "POST", &format!("/sessions/{id}/choice"), Some(r#"{"index": 1}"#)).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert!(v["error"].as_str().unwrap().contains("terminated"));
    let (_, h) = call(&app, "GET", &format!("/sessions/{id}/history"), None).await;
    assert_eq!(h.as_array().unwrap().len(), 4);
    assert_eq!(h[1]["payload"], json!({ "tuple": ["din", [
            { "record": "GasSensor", "fields": [0, 0] },
            { "record": "GasSensor", "fields": [1, 1] },
        ]] }));
}

#[tokio::test]
async fn config_overrides_are_accepted_as_object_or_list() {
    let app = app();
    for cfg in [json!({ "min_int": -2, "max_int": 2 }), json!(["min_int=-2", "max_int=2"])] {
        let (s, v) = call(&app, "POST", "/sessions", Some(&json!({ "model": "patrol", "config": cfg }).to_string())).await;
        assert_eq!(s, StatusCode::OK, "{v}");
        assert_eq!(v["menu"]["events"].as_array().unwrap().len(), 6);
    }
    let (s, _) = call(&app, "POST", "/sessions", Some(r#"{"model": "patrol", "config": {"max_int": 1}}"#)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, "POST", "/sessions", Some(r#"{"model": "patrol", "config": 3}"#)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}
