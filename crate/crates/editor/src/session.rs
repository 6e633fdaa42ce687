//! Per-session state and the operations behind each endpoint. Nothing here
//! touches HTTP; handlers lock a session and call in.

use std::fmt;

use gridprobe::level::{
    emit_level, init_world, meta_pairs, overlay_text, parse_overlay_line, random_set_text,
    CellCode, LevelSpec, OverlayItem, OverlayLine, TextEntry,
};
use gridprobe::probe::{Category, ProbeRegistry, Query};
use gridprobe::trajectory::{PlantRequest, ProbeRecord, RecordSession};
use gridprobe::view::{event_sentence, world_map, Serializer};
use gridprobe::world::{Action, Condition, DoorState, Pos, Pose, TileOverlay, World};
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, Detail};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Edit,
    Record,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Edit => "edit",
            Self::Record => "record",
        })
    }
}

pub enum Body {
    Edit { spec: LevelSpec, seed: u64 },
    Record(Box<RecordSession>),
}

pub struct Session {
    pub id: String,
    pub body: Body,
    /// Changed since creation or the last export.
    pub dirty: bool,
}

/// Keyboard contract of the recorder. Undo and the probe panel are UI-side
/// keys with their own endpoints.
pub const KEYMAP: [(char, Action); 7] = [
    ('W', Action::Forward),
    ('A', Action::TurnLeft),
    ('D', Action::TurnRight),
    ('S', Action::Wait),
    ('G', Action::Pickup),
    ('F', Action::Drop),
    ('T', Action::Toggle),
];
pub const UNDO_KEY: char = 'Z';
pub const PROBE_KEY: char = 'P';

#[derive(Debug, Deserialize)]
pub struct Placement {
    pub col: usize,
    pub row: usize,
    pub code: String,
    pub text: Option<String>,
    pub accuracy: Option<f64>,
    pub state: Option<String>,
    pub condition: Option<String>,
    pub turns: Option<u32>,
}

#[derive(Debug, Deserialize)]
pub struct OverlayRemoval {
    pub col: usize,
    pub row: usize,
    pub kind: Option<String>,
}

/// An action as a name (`forward`), a recorder key (`W`) or a code (`2`).
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ActionRef {
    Code(u64),
    Name(String),
}

impl ActionRef {
    pub fn resolve(&self) -> Result<Action, ApiError> {
        let found = match self {
            Self::Code(c) => Action::from_code(*c),
            Self::Name(s) => Action::from_name(s).or_else(|| {
                let mut chars = s.chars();
                match (chars.next(), chars.next()) {
                    (Some(k), None) => KEYMAP
                        .iter()
                        .find(|(key, _)| key.eq_ignore_ascii_case(&k))
                        .map(|(_, a)| *a),
                    _ => None,
                }
            }),
        };
        found.ok_or_else(|| ApiError::BadRequest(format!("unknown action {self:?}")))
    }
}

#[derive(Debug, Default, Deserialize)]
pub struct PlantBody {
    pub probe_type: String,
    #[serde(default)]
    pub question: Option<String>,
    #[serde(default)]
    pub ground_truth: Option<String>,
    #[serde(default)]
    pub query: Option<Query>,
    #[serde(default)]
    pub category: Option<String>,
    /// Let the probe type pose its own question about the current state.
    #[serde(default)]
    pub generate: bool,
}

#[derive(Debug, Serialize)]
pub struct TextView {
    pub col: usize,
    pub row: usize,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct CellOverlay {
    pub col: usize,
    pub row: usize,
    #[serde(flatten)]
    pub overlay: TileOverlay,
}

#[derive(Debug, Serialize)]
pub struct LiveView {
    pub level_file: String,
    pub agent: Pose,
    pub inventory: Option<String>,
    pub step: u64,
    pub step_count: u64,
    pub segment: usize,
    pub segments: usize,
    pub can_undo: bool,
    pub last_event: Option<String>,
    pub overlays: Vec<CellOverlay>,
    pub probes: Vec<ProbeRecord>,
}

#[derive(Debug, Serialize)]
pub struct AuthoredView {
    pub grid: Vec<String>,
    pub meta: Vec<(String, String)>,
    pub overlays: Vec<String>,
    pub texts: Vec<TextView>,
    pub violations: Vec<Detail>,
    pub seed: u64,
}

/// Everything the UI draws. `map` is the omniscient grid and `observation`
/// the memory-serialized view the model would get. In edit mode both come
/// from a preview world and are absent while the level is invalid.
#[derive(Debug, Serialize)]
pub struct StateView {
    pub id: String,
    pub mode: Mode,
    pub dirty: bool,
    pub level_id: String,
    pub width: usize,
    pub height: usize,
    pub map: Option<Vec<String>>,
    pub observation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<AuthoredView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub live: Option<LiveView>,
}

fn observation_text(history: &[gridprobe::view::Observation]) -> Option<String> {
    Serializer::Memory.render(history).ok()
}

fn preview(world: &World) -> (Vec<String>, Option<String>) {
    let obs = gridprobe::view::observe(world, world.view_config());
    (world_map(world), observation_text(&[obs]))
}

fn overlays_of(world: &World) -> Vec<CellOverlay> {
    world
        .cells_iter()
        .flat_map(|(p, c)| {
            c.overlays.iter().map(move |o| CellOverlay {
                col: p.col,
                row: p.row,
                overlay: o.clone(),
            })
        })
        .collect()
}

impl Session {
    pub fn mode(&self) -> Mode {
        match self.body {
            Body::Edit { .. } => Mode::Edit,
            Body::Record(_) => Mode::Record,
        }
    }

    fn wrong(&self, expected: Mode) -> ApiError {
        ApiError::WrongMode {
            id: self.id.clone(),
            expected,
            actual: self.mode(),
        }
    }

    pub fn spec_mut(&mut self) -> Result<&mut LevelSpec, ApiError> {
        let wrong = self.wrong(Mode::Edit);
        match &mut self.body {
            Body::Edit { spec, .. } => Ok(spec),
            Body::Record(_) => Err(wrong),
        }
    }

    pub fn recorder(&mut self) -> Result<&mut RecordSession, ApiError> {
        let wrong = self.wrong(Mode::Record);
        match &mut self.body {
            Body::Record(r) => Ok(r),
            Body::Edit { .. } => Err(wrong),
        }
    }

    pub fn state(&self) -> StateView {
        match &self.body {
            Body::Edit { spec, seed } => {
                let violations: Vec<Detail> = spec.violations().iter().map(Detail::from).collect();
                let world = violations
                    .is_empty()
                    .then(|| init_world(spec, *seed).ok())
                    .flatten();
                let (map, observation) = match &world {
                    Some(w) => {
                        let (m, o) = preview(w);
                        (Some(m), o)
                    }
                    None => (None, None),
                };
                let canonical = spec.clone().canonicalized();
                let mut overlays: Vec<String> =
                    canonical.overlays.iter().map(overlay_text).collect();
                overlays.extend(canonical.randomized_sets.iter().map(random_set_text));
                StateView {
                    id: self.id.clone(),
                    mode: Mode::Edit,
                    dirty: self.dirty,
                    level_id: spec.id.clone(),
                    width: spec.width(),
                    height: spec.height(),
                    map,
                    observation,
                    level: Some(AuthoredView {
                        grid: spec
                            .grid
                            .iter()
                            .map(|r| r.iter().map(CellCode::as_str).collect::<Vec<_>>().join(" "))
                            .collect(),
                        meta: meta_pairs(spec)
                            .into_iter()
                            .map(|(k, v)| (k.to_string(), v))
                            .collect(),
                        overlays,
                        texts: canonical
                            .texts
                            .iter()
                            .map(|t| TextView {
                                col: t.pos.col,
                                row: t.pos.row,
                                text: t.text.clone(),
                                accuracy: t.accuracy,
                            })
                            .collect(),
                        violations,
                        seed: *seed,
                    }),
                    live: None,
                }
            }
            Body::Record(rec) => {
                let world = rec.world();
                let t = rec.finalize();
                let seg = t.segments.last().expect("a session has a segment");
                StateView {
                    id: self.id.clone(),
                    mode: Mode::Record,
                    dirty: self.dirty,
                    level_id: world.level_id().to_string(),
                    width: world.width(),
                    height: world.height(),
                    map: Some(world_map(world)),
                    observation: observation_text(rec.history()),
                    level: None,
                    live: Some(LiveView {
                        level_file: seg.level_file.clone(),
                        agent: world.agent(),
                        inventory: world.inventory().map(|o| o.describe()),
                        step: rec.step(),
                        step_count: world.step_count(),
                        segment: rec.segment(),
                        segments: t.segments.len(),
                        can_undo: !seg.actions.is_empty(),
                        last_event: world
                            .last_event()
                            .map(|e| event_sentence(e, world.agent().facing)),
                        overlays: overlays_of(world),
                        probes: t.probes,
                    }),
                }
            }
        }
    }

    pub fn place(&mut self, p: Placement) -> Result<(), ApiError> {
        let spec = self.spec_mut()?;
        let code = CellCode::parse(&p.code)
            .ok_or_else(|| ApiError::BadRequest(format!("unknown cell code {:?}", p.code)))?;
        let (w, h) = (spec.width(), spec.height());
        if p.col >= w || p.row >= h {
            return Err(ApiError::rejected(
                "placement outside the grid",
                vec![Detail::at_cell(
                    p.col,
                    p.row,
                    format!("the grid is {w}x{h}"),
                )],
            ));
        }
        let pos = Pos::new(p.col, p.row);
        let extras = p.text.is_some()
            || p.accuracy.is_some()
            || p.state.is_some()
            || p.condition.is_some()
            || p.turns.is_some();
        if spec.grid[p.row][p.col] == code && !extras {
            return Err(ApiError::rejected(
                "duplicate placement",
                vec![Detail::at_cell(
                    p.col,
                    p.row,
                    format!("cell already holds {}", code.as_str()),
                )],
            ));
        }
        let state = p
            .state
            .as_deref()
            .map(|s| {
                DoorState::parse(s)
                    .ok_or_else(|| ApiError::BadRequest(format!("unknown door state {s:?}")))
            })
            .transpose()?;
        let condition = p
            .condition
            .as_deref()
            .map(|s| {
                Condition::parse(s)
                    .ok_or_else(|| ApiError::BadRequest(format!("unknown condition {s:?}")))
            })
            .transpose()?;
        guarded(spec, "placement", |spec| {
            if code == CellCode::Agent {
                if let Some(old) = spec.agent_start() {
                    spec.grid[old.row][old.col] = CellCode::Floor;
                }
            }
            spec.grid[p.row][p.col] = code;
            // The new content replaces whatever object state the cell had.
            spec.overlays.retain(|o| {
                !(o.pos() == pos && matches!(o, OverlayLine::Door { .. } | OverlayLine::Wet { .. }))
            });
            spec.texts.retain(|t| t.pos != pos);
            if let Some(state) = state {
                spec.overlays.push(OverlayLine::Door { pos, state });
            }
            if condition.is_some() || p.turns.is_some() {
                let condition = condition.unwrap_or(Condition::Wet);
                let turns = p.turns.unwrap_or(0);
                spec.overlays.push(OverlayLine::Wet {
                    pos,
                    condition,
                    turns,
                });
            }
            if let Some(text) = p.text {
                spec.texts.push(TextEntry {
                    pos,
                    text,
                    accuracy: p.accuracy,
                });
            } else if p.accuracy.is_some() {
                return Err(ApiError::BadRequest("accuracy needs a text".into()));
            }
            Ok(())
        })?;
        self.dirty = true;
        Ok(())
    }

    pub fn add_overlay(&mut self, line: &str) -> Result<(), ApiError> {
        let spec = self.spec_mut()?;
        let item = parse_overlay_line(line)
            .map_err(|e| ApiError::BadRequest(format!("overlay {line:?}: {}", e.kind)))?;
        guarded(spec, "overlay", |spec| {
            match item {
                OverlayItem::Line(l) => spec.overlays.push(l),
                OverlayItem::Random(r) => spec.randomized_sets.push(r),
            }
            Ok(())
        })?;
        self.dirty = true;
        Ok(())
    }

    /// Drop every overlay anchored at the cell, or only those of one kind
    /// (`fire`, `door`, `random`, ...). Returns how many went.
    pub fn remove_overlays(&mut self, r: OverlayRemoval) -> Result<usize, ApiError> {
        let spec = self.spec_mut()?;
        let pos = Pos::new(r.col, r.row);
        let kind_matches = |text: &str| {
            r.kind
                .as_deref()
                .is_none_or(|k| text.split(' ').next() == Some(k))
        };
        let before = spec.overlays.len() + spec.randomized_sets.len();
        let mut removed = 0;
        guarded(spec, "overlay removal", |spec| {
            spec.overlays
                .retain(|o| !(o.pos() == pos && kind_matches(&overlay_text(o))));
            spec.randomized_sets
                .retain(|s| !(s.from == pos && kind_matches("random")));
            removed = before - spec.overlays.len() - spec.randomized_sets.len();
            if removed == 0 {
                return Err(ApiError::rejected(
                    "nothing to remove",
                    vec![Detail::at_cell(r.col, r.row, "no matching overlay")],
                ));
            }
            Ok(())
        })?;
        self.dirty = true;
        Ok(removed)
    }

    pub fn set_meta(&mut self, key: &str, value: &str) -> Result<(), ApiError> {
        let spec = self.spec_mut()?;
        guarded(spec, "meta change", |spec| {
            spec.set_meta(key, value).map_err(|e| {
                ApiError::rejected(
                    "meta change refused",
                    vec![Detail {
                        site: format!("meta key {key}"),
                        col: None,
                        row: None,
                        message: e.to_string(),
                    }],
                )
            })
        })?;
        self.dirty = true;
        Ok(())
    }

    /// Canonical level text, byte-identical to the library emitter.
    pub fn export_level(&mut self) -> Result<String, ApiError> {
        let spec = self.spec_mut()?;
        let text = emit_level(spec).map_err(|e| {
            ApiError::rejected(
                "level is invalid",
                e.violations.iter().map(Detail::from).collect(),
            )
        })?;
        self.dirty = false;
        Ok(text)
    }

    pub fn step(&mut self, action: Action) -> Result<(), ApiError> {
        self.recorder()?.append(action);
        self.dirty = true;
        Ok(())
    }

    pub fn undo(&mut self) -> Result<(), ApiError> {
        if !self.recorder()?.undo() {
            return Err(ApiError::rejected(
                "nothing to undo in this segment",
                Vec::new(),
            ));
        }
        self.dirty = true;
        Ok(())
    }

    pub fn plant(
        &mut self,
        body: PlantBody,
        registry: &ProbeRegistry,
    ) -> Result<ProbeRecord, ApiError> {
        let rec = self.recorder()?;
        let category = body
            .category
            .as_deref()
            .map(|c| {
                Category::parse(c)
                    .ok_or_else(|| ApiError::BadRequest(format!("unknown category {c:?}")))
            })
            .transpose()?;
        let req = if body.generate {
            let plugin = registry
                .get(&body.probe_type)
                .map_err(|e| ApiError::rejected(e.to_string(), Vec::new()))?;
            let g = plugin
                .generate(rec.world(), rec.history(), rec.step())
                .ok_or_else(|| {
                    ApiError::rejected(
                        format!("{} has nothing to ask about this state", body.probe_type),
                        Vec::new(),
                    )
                })?;
            let ground_truth = if g.query.is_some() {
                None
            } else {
                Some(g.truth.render())
            };
            PlantRequest {
                probe_type: body.probe_type,
                question: body.question.unwrap_or(g.question),
                ground_truth,
                query: g.query,
                category: category.or(Some(g.category)),
            }
        } else {
            PlantRequest {
                probe_type: body.probe_type,
                question: body
                    .question
                    .ok_or_else(|| ApiError::BadRequest("a probe needs a question".into()))?,
                ground_truth: body.ground_truth,
                query: body.query,
                category,
            }
        };
        let record = rec
            .plant(req, registry)
            .map_err(|e| ApiError::rejected(e.to_string(), Vec::new()))?
            .clone();
        self.dirty = true;
        Ok(record)
    }

    pub fn next_segment(
        &mut self,
        level_file: String,
        spec: LevelSpec,
        seed: u64,
    ) -> Result<(), ApiError> {
        self.recorder()?
            .next_segment(level_file, spec, seed)
            .map_err(|e| ApiError::rejected(e.to_string(), Vec::new()))?;
        self.dirty = true;
        Ok(())
    }

    /// Canonical trajectory JSON, as the library writes it.
    pub fn export_trajectory(&mut self) -> Result<String, ApiError> {
        let text = self.recorder()?.finalize().to_canonical_json();
        self.dirty = false;
        Ok(text)
    }
}

/// Apply `edit` to a copy and commit it only if it adds no violation.
fn guarded(
    spec: &mut LevelSpec,
    what: &str,
    edit: impl FnOnce(&mut LevelSpec) -> Result<(), ApiError>,
) -> Result<(), ApiError> {
    let before: Vec<String> = spec.violations().iter().map(ToString::to_string).collect();
    let mut next = spec.clone();
    edit(&mut next)?;
    let added: Vec<Detail> = next
        .violations()
        .iter()
        .filter(|v| !before.contains(&v.to_string()))
        .map(Detail::from)
        .collect();
    if !added.is_empty() {
        return Err(ApiError::rejected(
            format!("{what} would make the level invalid"),
            added,
        ));
    }
    *spec = next;
    Ok(())
}
