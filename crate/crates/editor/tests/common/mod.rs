#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use gridprobe::probe::ProbeRegistry;
use gridprobe::trajectory::LevelLibrary;
use gridprobe_editor::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

pub fn library() -> LevelLibrary {
    LevelLibrary::new([fixtures()])
}

pub fn app() -> Router {
    router(AppState::new(
        library(),
        Arc::new(ProbeRegistry::with_builtins()),
    ))
}

pub struct Reply {
    pub status: StatusCode,
    pub content_type: Option<String>,
    pub text: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("{e}: {}", self.text))
    }
}

pub async fn send(app: &Router, method: &str, uri: &str, body: Option<&Value>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let content_type = resp
        .headers()
        .get("content-type")
        .map(|v| v.to_str().unwrap().to_string());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    Reply {
        status,
        content_type,
        text: String::from_utf8(bytes.to_vec()).unwrap(),
    }
}

/// Send and require `expect`, returning the JSON body.
pub async fn ok(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<Value>,
    expect: StatusCode,
) -> Value {
    let r = send(app, method, uri, body.as_ref()).await;
    assert_eq!(r.status, expect, "{method} {uri}: {}", r.text);
    if r.text.is_empty() {
        Value::Null
    } else {
        r.json()
    }
}

pub async fn create(app: &Router, body: Value) -> String {
    let v = ok(
        app,
        "POST",
        "/api/sessions",
        Some(body),
        StatusCode::CREATED,
    )
    .await;
    v["id"].as_str().unwrap().to_string()
}

pub async fn record(app: &Router, level_file: &str, seed: u64) -> String {
    create(
        app,
        json!({ "mode": "record", "level_file": level_file, "seed": seed }),
    )
    .await
}

pub async fn state(app: &Router, id: &str) -> Value {
    ok(
        app,
        "GET",
        &format!("/api/sessions/{id}/state"),
        None,
        StatusCode::OK,
    )
    .await
}

pub async fn step(app: &Router, id: &str, action: Value) -> Value {
    ok(
        app,
        "POST",
        &format!("/api/sessions/{id}/step"),
        Some(json!({ "action": action })),
        StatusCode::OK,
    )
    .await
}
