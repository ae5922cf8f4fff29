//! HTTP front end over [`SessionManager`] and the text output shared by the
//! command-line subcommands.

use std::io::Write;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value as Json_};

use itcsp::animator::{Menu, Scenario, Session};
use itcsp::service::{ServiceError, SessionManager};
use itcsp::ITree;

fn error(status: StatusCode, message: String) -> Response {
    (status, Json(json!({ "error": message }))).into_response()
}

fn reply<T: serde::Serialize>(r: Result<T, ServiceError>) -> Response {
    match r {
        Ok(v) => Json(v).into_response(),
        Err(e) => error(StatusCode::from_u16(e.status()).expect("status"), e.to_string()),
    }
}

fn body(b: Result<Json<Json_>, JsonRejection>) -> Result<Json_, Response> {
    b.map(|Json(v)| v).map_err(|e| error(StatusCode::BAD_REQUEST, e.body_text()))
}

/// `config` may be an object of settings or a list of `key=value` strings.
fn overrides(v: Option<&Json_>) -> Result<Vec<String>, String> {
    match v {
        None | Some(Json_::Null) => Ok(Vec::new()),
        Some(Json_::Object(m)) => Ok(m
            .iter()
            .map(|(k, v)| match v {
                Json_::String(s) => format!("{k}={s}"),
                v => format!("{k}={v}"),
            })
            .collect()),
        Some(Json_::Array(xs)) => xs
            .iter()
            .map(|x| x.as_str().map(str::to_string).ok_or_else(|| "config entries must be strings".to_string()))
            .collect(),
        Some(_) => Err("`config` must be an object or a list".into()),
    }
}

async fn create(State(m): State<Arc<SessionManager>>, b: Result<Json<Json_>, JsonRejection>) -> Response {
    let b = match body(b) {
        Ok(b) => b,
        Err(r) => return r,
    };
    let Some(model) = b.get("model").and_then(Json_::as_str) else {
        return error(StatusCode::BAD_REQUEST, "`model` is required".into());
    };
    let cfg = match overrides(b.get("config")) {
        Ok(c) => c,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let model = model.to_string();
    reply(tokio::task::spawn_blocking(move || m.create(&model, &cfg)).await.expect("create"))
}

async fn choice(
    State(m): State<Arc<SessionManager>>,
    Path(id): Path<String>,
    b: Result<Json<Json_>, JsonRejection>,
) -> Response {
    let b = match body(b) {
        Ok(b) => b,
        Err(r) => return r,
    };
    let Some(index) = b.get("index").and_then(Json_::as_u64) else {
        return error(StatusCode::BAD_REQUEST, "`index` must be a positive integer".into());
    };
    reply(tokio::task::spawn_blocking(move || m.choose(&id, index as usize)).await.expect("choose"))
}

async fn menu(State(m): State<Arc<SessionManager>>, Path(id): Path<String>) -> Response {
    reply(m.menu(&id))
}

async fn history(State(m): State<Arc<SessionManager>>, Path(id): Path<String>) -> Response {
    reply(m.history(&id))
}

async fn reset(State(m): State<Arc<SessionManager>>, Path(id): Path<String>) -> Response {
    reply(m.reset(&id))
}

async fn models(State(m): State<Arc<SessionManager>>) -> Response {
    Json(m.models()).into_response()
}

pub fn app(manager: Arc<SessionManager>) -> Router {
    Router::new()
        .route("/models", get(models))
        .route("/sessions", post(create))
        .route("/sessions/:id", get(menu))
        .route("/sessions/:id/choice", post(choice))
        .route("/sessions/:id/history", get(history))
        .route("/sessions/:id/reset", post(reset))
        .with_state(manager)
}

/// Prints the transcript an interactive run would show when the user picks
/// the events of `sc` in order. Returns whether every event was enabled.
pub fn replay_transcript(
    tree: ITree,
    banner: &str,
    sc: &Scenario,
    max_steps: usize,
    tau_budget: usize,
    out: &mut dyn Write,
) -> std::io::Result<bool> {
    let mut s = Session::start(tree, tau_budget);
    writeln!(out, "{banner}")?;
    for step in 0..max_steps {
        writeln!(out, "{}", s.menu().render())?;
        let Some(e) = sc.event_at(step) else {
            return Ok(true);
        };
        let Menu::Choices(_) = s.menu() else {
            return Ok(false);
        };
        let Some(k) = s.menu().events().iter().position(|x| x == e) else {
            writeln!(out, "Refused: {}", e.display())?;
            return Ok(false);
        };
        writeln!(out, "[Choose: 1-{}]: {}", s.menu().len(), k + 1)?;
        s.choose(k + 1).expect("enabled");
    }
    writeln!(out, "{}", s.menu().render())?;
    Ok(true)
}
