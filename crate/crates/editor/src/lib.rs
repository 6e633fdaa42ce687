//! Local HTTP service behind the level editor and trajectory recorder.
//!
//! Sessions are either `edit` (a level being authored) or `record` (a live
//! world plus recorder). Requests on one session run one at a time; the
//! UI polls `GET /api/sessions/{id}/state` after every mutation. Exports go
//! through the library emitters, so downloaded files are byte-identical to
//! what the core crate writes.

pub mod error;
pub mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gridprobe::level::{parse_level, LevelSpec, META_KEYS};
use gridprobe::probe::{AnswerType, Category, ProbeRegistry};
use gridprobe::trajectory::{LevelLibrary, RecordSession};
use gridprobe::view::Serializer;
use gridprobe::world::{Action, Color, Condition, DoorState, ObjectKind, PlateEffect};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

pub use error::{ApiError, Detail};
pub use session::{Mode, Session, KEYMAP, PROBE_KEY, UNDO_KEY};

use session::{ActionRef, Body, OverlayRemoval, Placement, PlantBody};

/// The hand-written OpenAPI document served at `/api/openapi.json`.
pub const OPENAPI: &str = include_str!("../openapi.json");

/// Every route as (method, path template).
pub const ROUTES: [(&str, &str); 17] = [
    ("get", "/api/capabilities"),
    ("get", "/api/openapi.json"),
    ("get", "/api/sessions"),
    ("post", "/api/sessions"),
    ("delete", "/api/sessions/{id}"),
    ("get", "/api/sessions/{id}/state"),
    ("post", "/api/sessions/{id}/place"),
    ("post", "/api/sessions/{id}/overlays"),
    ("post", "/api/sessions/{id}/overlays/remove"),
    ("post", "/api/sessions/{id}/meta"),
    ("get", "/api/sessions/{id}/level"),
    ("post", "/api/sessions/{id}/step"),
    ("post", "/api/sessions/{id}/undo"),
    ("post", "/api/sessions/{id}/probes"),
    ("post", "/api/sessions/{id}/segments"),
    ("get", "/api/sessions/{id}/trajectory"),
    ("get", "/api/sessions/{id}/validation"),
];

pub const DEFAULT_PORT: u16 = 5050;
pub const PORT_ENV: &str = "GRIDPROBE_EDITOR_PORT";

type Shared = Arc<tokio::sync::Mutex<Session>>;

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    sessions: Mutex<HashMap<String, Shared>>,
    next_id: AtomicU64,
    levels: LevelLibrary,
    registry: Arc<ProbeRegistry>,
}

impl AppState {
    /// `levels` resolves `level_file` names; `registry` lists probe types.
    pub fn new(levels: LevelLibrary, registry: Arc<ProbeRegistry>) -> Self {
        Self {
            inner: Arc::new(Inner {
                sessions: Mutex::new(HashMap::new()),
                next_id: AtomicU64::new(1),
                levels,
                registry,
            }),
        }
    }

    fn session(&self, id: &str) -> Result<Shared, ApiError> {
        let map = self.inner.sessions.lock().expect("session map poisoned");
        map.get(id)
            .cloned()
            .ok_or_else(|| ApiError::NoSession(id.to_string()))
    }

    fn load_level(&self, name: &str) -> Result<LevelSpec, ApiError> {
        self.inner
            .levels
            .load(name)
            .map_err(|e| ApiError::rejected(e.to_string(), Vec::new()))
    }
}

pub fn router(state: AppState) -> Router {
    let s = "/api/sessions/{id}";
    Router::new()
        .route("/api/capabilities", get(capabilities))
        .route("/api/openapi.json", get(openapi))
        .route("/api/sessions", get(list_sessions).post(create_session))
        .route(s, axum::routing::delete(delete_session))
        .route(&format!("{s}/state"), get(get_state))
        .route(&format!("{s}/place"), post(place))
        .route(&format!("{s}/overlays"), post(add_overlay))
        .route(&format!("{s}/overlays/remove"), post(remove_overlays))
        .route(&format!("{s}/meta"), post(set_meta))
        .route(&format!("{s}/level"), get(export_level))
        .route(&format!("{s}/step"), post(step))
        .route(&format!("{s}/undo"), post(undo))
        .route(&format!("{s}/probes"), post(plant_probe))
        .route(&format!("{s}/segments"), post(next_segment))
        .route(&format!("{s}/trajectory"), get(export_trajectory))
        .route(&format!("{s}/validation"), get(validation))
        .with_state(state)
}

/// Port from `GRIDPROBE_EDITOR_PORT`, else the default.
pub fn port_from_env() -> Result<u16, String> {
    match std::env::var(PORT_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| format!("{PORT_ENV}={v:?} is not a port number")),
        Err(_) => Ok(DEFAULT_PORT),
    }
}

/// Bind and serve until the process is stopped.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

/// [`serve`] on a fresh multi-threaded runtime.
pub fn serve_blocking(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(serve(addr, state))
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let raw: &[u8] = if body.is_empty() { b"{}" } else { body };
    serde_json::from_slice(raw).map_err(|e| ApiError::BadRequest(format!("request body: {e}")))
}

/// Lock the session, run `f`, answer with the fresh state.
async fn mutate<T>(
    app: &AppState,
    id: &str,
    f: impl FnOnce(&mut Session) -> Result<T, ApiError>,
) -> Result<Json<Value>, ApiError> {
    let shared = app.session(id)?;
    let mut session = shared.lock().await;
    f(&mut session)?;
    Ok(Json(
        serde_json::to_value(session.state()).expect("state serializes"),
    ))
}

async fn capabilities(State(app): State<AppState>) -> Json<Value> {
    let registry = &app.inner.registry;
    let probe_types: Vec<Value> = registry
        .names()
        .map(|n| {
            let t = registry.get(n).expect("listed name");
            json!({ "name": n, "answer_type": t.answer_type().as_str() })
        })
        .collect();
    let keys: HashMap<u8, char> = KEYMAP.iter().map(|(k, a)| (a.code(), *k)).collect();
    Json(json!({
        "object_kinds": ObjectKind::ALL.iter().map(|k| json!({
            "name": k.name(),
            "code": k.code().to_string(),
            "portable": k.is_portable(),
            "testimony": k.is_testimony(),
        })).collect::<Vec<_>>(),
        "colors": Color::ALL.iter().map(|c| json!({ "name": c.name(), "code": c.code().to_string() })).collect::<Vec<_>>(),
        "terrain": [
            { "name": "wall", "code": "##" },
            { "name": "floor", "code": ".." },
            { "name": "agent", "code": "@." },
        ],
        "overlays": {
            "river": "river <col> <row> direction=<north|east|south|west> speed=<n>",
            "fire": "fire <col> <row> [active=false]",
            "flood": "flood <col> <row> rise_step=<n>",
            "plate": "plate <col> <row> effect=<continuous|trigger> link=<col>,<row>",
            "dark": "dark <col> <row>",
            "door": "door <col> <row> state=<open|closed|locked>",
            "wet": "wet <col> <row> condition=<wet|soaked> turns=<n>",
            "random": "random <c0> <r0> <c1> <r1> fill=<code> absent=<n> [swap=<code>:<n>,...]",
        },
        "door_states": ([DoorState::Open, DoorState::Closed, DoorState::Locked].map(DoorState::as_str)),
        "conditions": ([Condition::Dry, Condition::Wet, Condition::Soaked].map(Condition::as_str)),
        "plate_effects": ([PlateEffect::Continuous, PlateEffect::Trigger].map(PlateEffect::as_str)),
        "meta_keys": META_KEYS,
        "actions": Action::ALL.iter().map(|a| json!({
            "name": a.name(),
            "code": a.code(),
            "key": keys.get(&a.code()).map(char::to_string),
        })).collect::<Vec<_>>(),
        "undo_key": UNDO_KEY.to_string(),
        "probe_key": PROBE_KEY.to_string(),
        "probe_types": probe_types,
        "answer_types": AnswerType::ALL.map(AnswerType::as_str),
        "categories": Category::ALL.map(Category::as_str),
        "serializers": Serializer::ALL.map(Serializer::as_str),
    }))
}

async fn openapi() -> Response {
    ([(header::CONTENT_TYPE, "application/json")], OPENAPI).into_response()
}

async fn list_sessions(State(app): State<AppState>) -> Json<Value> {
    let shared: Vec<(String, Shared)> = {
        let map = app.inner.sessions.lock().expect("session map poisoned");
        map.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    };
    let mut out = Vec::new();
    for (id, s) in shared {
        let s = s.lock().await;
        out.push(json!({ "id": id, "mode": s.mode(), "dirty": s.dirty }));
    }
    out.sort_by(|a, b| a["id"].as_str().cmp(&b["id"].as_str()));
    Json(Value::Array(out))
}

#[derive(Debug, Deserialize)]
struct CreateBody {
    mode: Mode,
    /// Name resolved against the level library.
    level_file: Option<String>,
    /// Inline level text. Record sessions also need `level_file`, which is
    /// the name written into the trajectory.
    level: Option<String>,
    id: Option<String>,
    width: Option<usize>,
    height: Option<usize>,
    #[serde(default)]
    seed: u64,
}

fn inline_level(text: &str) -> Result<LevelSpec, ApiError> {
    parse_level(text).map_err(|e| {
        ApiError::rejected(
            "level text does not parse",
            vec![Detail {
                site: format!("line {}, column {}", e.line, e.column),
                col: None,
                row: None,
                message: e.kind.to_string(),
            }],
        )
    })
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateBody = parse_body(&body)?;
    let body = match req.mode {
        Mode::Edit => {
            let spec = match (&req.level, &req.level_file) {
                (Some(text), _) => inline_level(text)?,
                (None, Some(name)) => app.load_level(name)?,
                (None, None) => {
                    let (w, h) = (req.width.unwrap_or(9), req.height.unwrap_or(9));
                    if !(3..=64).contains(&w) || !(3..=64).contains(&h) {
                        return Err(ApiError::BadRequest(format!(
                            "a blank level needs sides in 3..=64, got {w}x{h}"
                        )));
                    }
                    LevelSpec::blank(req.id.as_deref().unwrap_or("untitled"), w, h)
                }
            };
            Body::Edit {
                spec,
                seed: req.seed,
            }
        }
        Mode::Record => {
            let name = req
                .level_file
                .clone()
                .ok_or_else(|| ApiError::BadRequest("a record session needs level_file".into()))?;
            let spec = match &req.level {
                Some(text) => inline_level(text)?,
                None => app.load_level(&name)?,
            };
            let rec = RecordSession::new(name, spec, req.seed)
                .map_err(|e| ApiError::rejected(e.to_string(), Vec::new()))?;
            Body::Record(Box::new(rec))
        }
    };
    let id = format!("s{}", app.inner.next_id.fetch_add(1, Ordering::Relaxed));
    let session = Session {
        id: id.clone(),
        body,
        dirty: false,
    };
    let state = serde_json::to_value(session.state()).expect("state serializes");
    app.inner
        .sessions
        .lock()
        .expect("session map poisoned")
        .insert(id, Arc::new(tokio::sync::Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(state)).into_response())
}

async fn delete_session(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<StatusCode, ApiError> {
    let removed = app
        .inner
        .sessions
        .lock()
        .expect("session map poisoned")
        .remove(&id);
    removed
        .map(|_| StatusCode::NO_CONTENT)
        .ok_or(ApiError::NoSession(id))
}

async fn get_state(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    mutate(&app, &id, |_| Ok(())).await
}

async fn place(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let p: Placement = parse_body(&body)?;
    mutate(&app, &id, |s| s.place(p)).await
}

#[derive(Deserialize)]
struct OverlayBody {
    line: String,
}

async fn add_overlay(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let b: OverlayBody = parse_body(&body)?;
    mutate(&app, &id, |s| s.add_overlay(&b.line)).await
}

async fn remove_overlays(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let r: OverlayRemoval = parse_body(&body)?;
    mutate(&app, &id, |s| s.remove_overlays(r)).await
}

#[derive(Deserialize)]
struct MetaBody {
    key: String,
    value: String,
}

async fn set_meta(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let m: MetaBody = parse_body(&body)?;
    mutate(&app, &id, |s| s.set_meta(&m.key, &m.value)).await
}

async fn export_level(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let shared = app.session(&id)?;
    let text = shared.lock().await.export_level()?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
}

#[derive(Deserialize)]
struct StepBody {
    action: ActionRef,
}

async fn step(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let b: StepBody = parse_body(&body)?;
    let action = b.action.resolve()?;
    mutate(&app, &id, |s| s.step(action)).await
}

async fn undo(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    mutate(&app, &id, Session::undo).await
}

async fn plant_probe(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let b: PlantBody = parse_body(&body)?;
    let shared = app.session(&id)?;
    let record = shared.lock().await.plant(b, &app.inner.registry)?;
    Ok((StatusCode::CREATED, Json(record)).into_response())
}

#[derive(Deserialize)]
struct SegmentBody {
    level_file: String,
    level: Option<String>,
    #[serde(default)]
    seed: u64,
}

async fn next_segment(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let b: SegmentBody = parse_body(&body)?;
    let spec = match &b.level {
        Some(text) => inline_level(text)?,
        None => app.load_level(&b.level_file)?,
    };
    mutate(&app, &id, |s| s.next_segment(b.level_file, spec, b.seed)).await
}

async fn export_trajectory(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let shared = app.session(&id)?;
    let text = shared.lock().await.export_trajectory()?;
    Ok(([(header::CONTENT_TYPE, "application/json")], text).into_response())
}

/// Constraint check without exporting.
async fn validation(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let shared = app.session(&id)?;
    let mut s = shared.lock().await;
    let spec = s.spec_mut()?;
    let details: Vec<Detail> = spec.violations().iter().map(Detail::from).collect();
    Ok(Json(
        json!({ "valid": details.is_empty(), "details": details }),
    ))
}
