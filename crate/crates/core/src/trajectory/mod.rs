//! Trajectory files: action scripts per room segment with embedded probes,
//! deterministic replay, and a recording session with undo.
//!
//! ```json
//! {
//!   "probes": [
//!     {
//!       "ground_truth": "false",
//!       "metadata": {},
//!       "probe_type": "presence",
//!       "question": "Is the fire barrier at row 6 currently passable?",
//!       "segment": 0,
//!       "step": 12
//!     }
//!   ],
//!   "segments": [
//!     { "actions": [2, 2, 0, 2, 5], "level_file": "levels/c6.txt", "seed": 42 }
//!   ]
//! }
//! ```
//!
//! Canonical encoding is sorted keys with two-space indentation.

mod session;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub use session::{PlantRequest, RecordSession, SessionError};

use crate::level::{init_world, parse_level, LevelError, LevelSpec, ValidationError};
use crate::probe::{
    compute_ground_truth, AnswerType, Category, ConflictPolicy, GroundTruth, Probe, ProbeError,
    ProbeRegistry, ProbeSpec, Query,
};
use crate::view::{observe, Observation};
use crate::world::{Action, World};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub level_file: String,
    pub seed: u64,
    /// Raw action codes, kept as integers so out-of-range codes surface as
    /// validation errors with their position.
    pub actions: Vec<u64>,
}

impl Segment {
    pub fn decoded(&self) -> Result<Vec<Action>, u64> {
        self.actions
            .iter()
            .map(|&c| Action::from_code(c).ok_or(c))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub segment: usize,
    pub step: u64,
    pub probe_type: String,
    pub question: String,
    pub ground_truth: String,
    #[serde(default)]
    pub metadata: Map<String, Value>,
}

impl ProbeRecord {
    /// Stored query, re-evaluated at replay.
    pub fn query(&self) -> Result<Option<Query>, serde_json::Error> {
        self.metadata
            .get("query")
            .map(|q| serde_json::from_value(q.clone()))
            .transpose()
    }

    pub fn category(&self) -> Option<Category> {
        self.metadata
            .get("category")
            .and_then(Value::as_str)
            .and_then(Category::parse)
    }

    pub fn id(&self, index: usize) -> String {
        self.metadata.get("id").and_then(Value::as_str).map_or_else(
            || format!("s{}-t{}-p{index}", self.segment, self.step),
            str::to_string,
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub segments: Vec<Segment>,
    pub probes: Vec<ProbeRecord>,
}

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed trajectory JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("level file {0:?} not found")]
    MissingLevel(String),
    #[error("level file {file:?}: {source}")]
    BadLevel { file: String, source: LevelError },
    #[error("level {file:?} cannot be instantiated: {source}")]
    BadWorld {
        file: String,
        source: ValidationError,
    },
    #[error("segment {segment}, action {index}: code {code} is not an action")]
    BadAction {
        segment: usize,
        index: usize,
        code: u64,
    },
    #[error("probe {index}: segment {segment} does not exist")]
    ProbeSegment { index: usize, segment: usize },
    #[error("probe {index}: step {step} is beyond the {len} actions of segment {segment}")]
    ProbeStep {
        index: usize,
        segment: usize,
        step: u64,
        len: usize,
    },
    #[error("probe {index}: {source}")]
    ProbeType {
        index: usize,
        source: crate::probe::RegistryError,
    },
    #[error("probe {index}: ground truth {value:?} is not a valid {answer_type} answer")]
    ProbeTruth {
        index: usize,
        answer_type: AnswerType,
        value: String,
    },
    #[error("probe {index}: bad metadata: {message}")]
    ProbeMetadata { index: usize, message: String },
    #[error("probe {index}: {source}")]
    Probe { index: usize, source: ProbeError },
    #[error("trajectory has no segments")]
    Empty,
    #[error("segment {segment}: {source}")]
    InSegment {
        segment: usize,
        source: Box<TrajectoryError>,
    },
}

impl TrajectoryError {
    fn in_segment(self, segment: usize) -> Self {
        Self::InSegment {
            segment,
            source: Box::new(self),
        }
    }

    /// The error with any segment wrapper removed.
    pub fn root(&self) -> &Self {
        match self {
            Self::InSegment { source, .. } => source.root(),
            e => e,
        }
    }
}

impl Trajectory {
    pub fn from_json(text: &str) -> Result<Self, TrajectoryError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, TrajectoryError> {
        let text = fs::read_to_string(path).map_err(|source| TrajectoryError::Io {
            path: path.into(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Canonical text: sorted keys, two-space indent, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("trajectory serializes");
        let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), TrajectoryError> {
        fs::write(path, self.to_canonical_json()).map_err(|source| TrajectoryError::Io {
            path: path.into(),
            source,
        })
    }

    pub fn action_count(&self) -> usize {
        self.segments.iter().map(|s| s.actions.len()).sum()
    }

    /// Build the probe a record describes. Its answer type comes from the
    /// registered plugin.
    pub fn probe(&self, index: usize, registry: &ProbeRegistry) -> Result<Probe, TrajectoryError> {
        let rec = &self.probes[index];
        let plugin = registry
            .get(&rec.probe_type)
            .map_err(|source| TrajectoryError::ProbeType { index, source })?;
        let answer_type = plugin.answer_type();
        let meta_err = |message: String| TrajectoryError::ProbeMetadata { index, message };
        let category = match rec.metadata.get("category") {
            None => default_category(answer_type),
            Some(v) => v
                .as_str()
                .and_then(Category::parse)
                .ok_or_else(|| meta_err(format!("category {v} is not one of P, M, C, U, X")))?,
        };
        // The stored truth must read as an answer even when a query will
        // recompute it.
        let stored = GroundTruth::parse(answer_type, &rec.ground_truth).ok_or_else(|| {
            TrajectoryError::ProbeTruth {
                index,
                answer_type,
                value: rec.ground_truth.clone(),
            }
        })?;
        let spec = match rec.query().map_err(|e| meta_err(format!("query: {e}")))? {
            Some(q) => ProbeSpec::Query(q),
            None => ProbeSpec::Literal(stored),
        };
        let probe = Probe {
            id: rec.id(index),
            category,
            answer_type,
            question: rec.question.clone(),
            spec,
            conflict_policy: ConflictPolicy::default(),
            segment: rec.segment,
            step: rec.step,
        };
        probe
            .check()
            .map_err(|source| TrajectoryError::Probe { index, source })?;
        Ok(probe)
    }

    /// Structural checks plus level resolution. Returns the parsed levels,
    /// one per segment.
    pub fn validate(
        &self,
        levels: &LevelLibrary,
        registry: &ProbeRegistry,
    ) -> Result<Vec<LevelSpec>, TrajectoryError> {
        if self.segments.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        let mut specs = Vec::with_capacity(self.segments.len());
        for (s, seg) in self.segments.iter().enumerate() {
            if let Some((index, &code)) = seg
                .actions
                .iter()
                .enumerate()
                .find(|(_, c)| Action::from_code(**c).is_none())
            {
                return Err(TrajectoryError::BadAction {
                    segment: s,
                    index,
                    code,
                });
            }
            let spec = levels.load(&seg.level_file).map_err(|e| e.in_segment(s))?;
            init_world(&spec, seg.seed).map_err(|source| {
                TrajectoryError::BadWorld {
                    file: seg.level_file.clone(),
                    source,
                }
                .in_segment(s)
            })?;
            specs.push(spec);
        }
        for (index, rec) in self.probes.iter().enumerate() {
            let seg = self
                .segments
                .get(rec.segment)
                .ok_or(TrajectoryError::ProbeSegment {
                    index,
                    segment: rec.segment,
                })?;
            if rec.step > seg.actions.len() as u64 {
                return Err(TrajectoryError::ProbeStep {
                    index,
                    segment: rec.segment,
                    step: rec.step,
                    len: seg.actions.len(),
                });
            }
            self.probe(index, registry)?;
        }
        Ok(specs)
    }
}

fn default_category(t: AnswerType) -> Category {
    match t {
        AnswerType::Causal => Category::C,
        AnswerType::Uncertainty => Category::U,
        _ => Category::P,
    }
}

/// Finds level files by relative name. In-memory levels shadow files.
#[derive(Clone, Debug, Default)]
pub struct LevelLibrary {
    roots: Vec<PathBuf>,
    inline: BTreeMap<String, LevelSpec>,
}

impl LevelLibrary {
    pub fn new(roots: impl IntoIterator<Item = PathBuf>) -> Self {
        Self {
            roots: roots.into_iter().collect(),
            inline: BTreeMap::new(),
        }
    }

    /// Search the trajectory's directory, its parent, then the working
    /// directory.
    pub fn for_trajectory(path: &Path) -> Self {
        let mut roots = Vec::new();
        if let Some(dir) = path.parent() {
            roots.push(dir.to_path_buf());
            if let Some(up) = dir.parent() {
                roots.push(up.to_path_buf());
            }
        }
        roots.push(PathBuf::from("."));
        Self::new(roots)
    }

    pub fn insert(&mut self, name: impl Into<String>, spec: LevelSpec) {
        self.inline.insert(name.into(), spec);
    }

    pub fn resolve(&self, name: &str) -> Option<PathBuf> {
        let p = Path::new(name);
        if p.is_absolute() {
            return p.is_file().then(|| p.to_path_buf());
        }
        self.roots.iter().map(|r| r.join(p)).find(|c| c.is_file())
    }

    pub fn load(&self, name: &str) -> Result<LevelSpec, TrajectoryError> {
        if let Some(spec) = self.inline.get(name) {
            return Ok(spec.clone());
        }
        let path = self
            .resolve(name)
            .ok_or_else(|| TrajectoryError::MissingLevel(name.to_string()))?;
        let text = fs::read_to_string(&path).map_err(|source| TrajectoryError::Io {
            path: path.clone(),
            source,
        })?;
        parse_level(&text).map_err(|source| TrajectoryError::BadLevel {
            file: name.to_string(),
            source,
        })
    }
}

/// A probe surfacing at its recorded step.
#[derive(Clone, Debug, PartialEq)]
pub struct DueProbe {
    pub index: usize,
    pub probe: Probe,
    /// Truth at this step: the query re-evaluated, or the stored literal.
    pub truth: GroundTruth,
    /// The truth came from re-evaluating a stored query.
    pub recomputed: bool,
    /// Stored and recomputed truths disagree.
    pub drifted: bool,
}

/// State handed to the replay sink after initialization and after every
/// action.
pub struct ReplayStep<'a> {
    pub segment: usize,
    pub step: u64,
    /// Steps taken across all segments so far.
    pub global_step: u64,
    pub world: &'a World,
    /// Every observation so far across segments, the current one last.
    pub history: &'a [Observation],
    pub due: Vec<DueProbe>,
}

/// Replay every segment deterministically and call `sink` at each step.
/// Inventory carries over from one segment into the next.
pub fn replay(
    traj: &Trajectory,
    levels: &LevelLibrary,
    registry: &ProbeRegistry,
    mut sink: impl FnMut(ReplayStep<'_>),
) -> Result<World, TrajectoryError> {
    let specs = traj.validate(levels, registry)?;
    let probes: Vec<Probe> = (0..traj.probes.len())
        .map(|i| traj.probe(i, registry))
        .collect::<Result<_, _>>()?;
    let mut history: Vec<Observation> = Vec::new();
    let mut carried = None;
    let mut global_step = 0;
    let mut last = None;
    for (s, (seg, spec)) in traj.segments.iter().zip(&specs).enumerate() {
        let mut world = segment_world(spec, seg, carried.take())?;
        let actions = seg.decoded().expect("validated");
        for step in 0..=actions.len() {
            if step > 0 {
                world.step(actions[step - 1]);
                global_step += 1;
            }
            history.push(observe(&world, world.view_config()).with_segment(s));
            let mut due = Vec::new();
            for (index, (rec, probe)) in traj.probes.iter().zip(&probes).enumerate() {
                if rec.segment != s || rec.step != step as u64 {
                    continue;
                }
                let truth = compute_ground_truth(probe, &world, &history)
                    .map_err(|source| TrajectoryError::Probe { index, source })?;
                let recomputed = matches!(probe.spec, ProbeSpec::Query(_));
                let drifted = recomputed
                    && GroundTruth::parse(probe.answer_type, &rec.ground_truth)
                        != Some(truth.clone());
                due.push(DueProbe {
                    index,
                    probe: probe.clone(),
                    truth,
                    recomputed,
                    drifted,
                });
            }
            sink(ReplayStep {
                segment: s,
                step: step as u64,
                global_step,
                world: &world,
                history: &history,
                due,
            });
        }
        carried = world.inventory().cloned();
        last = Some(world);
    }
    Ok(last.expect("at least one segment"))
}

pub(crate) fn segment_world(
    spec: &LevelSpec,
    seg: &Segment,
    carried: Option<crate::world::WorldObject>,
) -> Result<World, TrajectoryError> {
    let mut world = init_world(spec, seg.seed).map_err(|source| TrajectoryError::BadWorld {
        file: seg.level_file.clone(),
        source,
    })?;
    if carried.is_some() {
        world.set_inventory(carried);
    }
    Ok(world)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::emit_level;

    fn library() -> LevelLibrary {
        let mut lib = LevelLibrary::default();
        lib.insert("room.txt", LevelSpec::blank("room", 6, 6));
        lib
    }

    fn traj(actions: Vec<u64>) -> Trajectory {
        Trajectory {
            segments: vec![Segment {
                level_file: "room.txt".into(),
                seed: 1,
                actions,
            }],
            probes: vec![],
        }
    }

    #[test]
    fn canonical_json_sorts_keys() {
        let t = traj(vec![2]);
        let text = t.to_canonical_json();
        let segs = text.find("\"segments\"").unwrap();
        let probes = text.find("\"probes\"").unwrap();
        assert!(probes < segs);
        assert!(text.find("\"actions\"").unwrap() < text.find("\"level_file\"").unwrap());
        assert_eq!(Trajectory::from_json(&text).unwrap(), t);
    }

    #[test]
    fn empty_actions_yield_initial_world_only() {
        let mut steps = 0;
        replay(
            &traj(vec![]),
            &library(),
            &ProbeRegistry::with_builtins(),
            |s| {
                assert!(s.due.is_empty());
                steps += 1;
            },
        )
        .unwrap();
        assert_eq!(steps, 1);
    }

    #[test]
    fn bad_action_code_is_reported_with_position() {
        let err = traj(vec![2, 9])
            .validate(&library(), &ProbeRegistry::with_builtins())
            .unwrap_err();
        assert!(matches!(
            err,
            TrajectoryError::BadAction {
                segment: 0,
                index: 1,
                code: 9
            }
        ));
    }

    #[test]
    fn unregistered_probe_type_fails_to_load() {
        let mut t = traj(vec![6]);
        t.probes.push(ProbeRecord {
            segment: 0,
            step: 1,
            probe_type: "spatial_relation".into(),
            question: "?".into(),
            ground_truth: "yes".into(),
            metadata: Map::new(),
        });
        let err = t
            .validate(&library(), &ProbeRegistry::with_builtins())
            .unwrap_err();
        assert!(matches!(err, TrajectoryError::ProbeType { index: 0, .. }));
    }

    #[test]
    fn probe_step_beyond_segment_is_rejected() {
        let mut t = traj(vec![6]);
        t.probes.push(ProbeRecord {
            segment: 0,
            step: 2,
            probe_type: "presence".into(),
            question: "?".into(),
            ground_truth: "no".into(),
            metadata: Map::new(),
        });
        let err = t
            .validate(&library(), &ProbeRegistry::with_builtins())
            .unwrap_err();
        assert!(matches!(
            err,
            TrajectoryError::ProbeStep {
                step: 2,
                len: 1,
                ..
            }
        ));
    }

    #[test]
    fn missing_level_file() {
        let lib = LevelLibrary::new([std::env::temp_dir().join("definitely-not-here")]);
        let err = traj(vec![])
            .validate(&lib, &ProbeRegistry::with_builtins())
            .unwrap_err();
        assert!(matches!(err, TrajectoryError::InSegment { segment: 0, .. }));
        assert!(matches!(err.root(), TrajectoryError::MissingLevel(_)));
    }

    #[test]
    fn levels_resolve_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("levels")).unwrap();
        fs::write(
            dir.path().join("levels/a.txt"),
            emit_level(&LevelSpec::blank("a", 5, 5)).unwrap(),
        )
        .unwrap();
        let lib = LevelLibrary::for_trajectory(&dir.path().join("trajectories/t.json"));
        assert_eq!(lib.load("levels/a.txt").unwrap().id, "a");
    }
}
