//! Live recording: step a world action by action, plant probes, undo within
//! the current segment, and emit a trajectory that replays to the same state.

use serde_json::{Map, Value};
use thiserror::Error;

use super::*;
use crate::world::{StepEvent, WorldObject};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("probe type {0:?} is not registered")]
    UnknownProbeType(String),
    #[error("a probe needs either a query or a literal ground truth, not both")]
    TruthSource,
    #[error("ground truth {value:?} is not a valid {answer_type} answer")]
    BadTruth {
        answer_type: AnswerType,
        value: String,
    },
    #[error("query answers {actual} but the probe type expects {expected}")]
    QueryType {
        expected: AnswerType,
        actual: AnswerType,
    },
    #[error(transparent)]
    Probe(#[from] ProbeError),
}

/// What to plant at the current step.
#[derive(Clone, Debug, Default)]
pub struct PlantRequest {
    pub probe_type: String,
    pub question: String,
    pub ground_truth: Option<String>,
    pub query: Option<Query>,
    pub category: Option<Category>,
}

pub struct RecordSession {
    levels: Vec<LevelSpec>,
    segments: Vec<Segment>,
    probes: Vec<ProbeRecord>,
    world: World,
    history: Vec<Observation>,
    /// Inventory the current segment started with.
    carried_in: Option<WorldObject>,
}

impl RecordSession {
    pub fn new(
        level_file: impl Into<String>,
        spec: LevelSpec,
        seed: u64,
    ) -> Result<Self, SessionError> {
        let seg = Segment {
            level_file: level_file.into(),
            seed,
            actions: Vec::new(),
        };
        let world = segment_world(&spec, &seg, None)?;
        let history = vec![observe(&world, world.view_config())];
        Ok(Self {
            levels: vec![spec],
            segments: vec![seg],
            probes: Vec::new(),
            world,
            history,
            carried_in: None,
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn history(&self) -> &[Observation] {
        &self.history
    }

    pub fn segment(&self) -> usize {
        self.segments.len() - 1
    }

    pub fn level(&self) -> &LevelSpec {
        self.levels.last().expect("non-empty")
    }

    /// Step within the current segment.
    pub fn step(&self) -> u64 {
        self.segments.last().map_or(0, |s| s.actions.len() as u64)
    }

    pub fn probes(&self) -> &[ProbeRecord] {
        &self.probes
    }

    pub fn append(&mut self, action: Action) -> StepEvent {
        let ev = self.world.step(action);
        self.segments
            .last_mut()
            .expect("non-empty")
            .actions
            .push(u64::from(action.code()));
        self.history
            .push(observe(&self.world, self.world.view_config()).with_segment(self.segment()));
        ev
    }

    /// Remove the last action of the current segment by replaying the rest.
    /// Probes planted after the restored step go with it. Returns `false`
    /// (and changes nothing) when the segment has no actions.
    pub fn undo(&mut self) -> bool {
        let s = self.segment();
        let seg = self.segments.last_mut().expect("non-empty");
        if seg.actions.pop().is_none() {
            return false;
        }
        let seg = seg.clone();
        let mut world = segment_world(self.level(), &seg, self.carried_in.clone())
            .expect("segment built before");
        for a in seg.decoded().expect("recorded actions are valid") {
            world.step(a);
        }
        self.world = world;
        self.history.pop();
        let step = seg.actions.len() as u64;
        self.probes.retain(|p| p.segment != s || p.step <= step);
        true
    }

    /// Record a probe at the current step. With a query, the truth is
    /// computed now and the query is kept for replay; otherwise the literal
    /// answer is stored as given.
    pub fn plant(
        &mut self,
        req: PlantRequest,
        registry: &ProbeRegistry,
    ) -> Result<&ProbeRecord, SessionError> {
        let plugin = registry
            .get(&req.probe_type)
            .map_err(|_| SessionError::UnknownProbeType(req.probe_type.clone()))?;
        let answer_type = plugin.answer_type();
        let mut metadata = Map::new();
        if let Some(c) = req.category {
            metadata.insert("category".into(), Value::String(c.as_str().into()));
        }
        let ground_truth = match (req.query, req.ground_truth) {
            (Some(q), None) => {
                if q.answer_type() != answer_type {
                    return Err(SessionError::QueryType {
                        expected: answer_type,
                        actual: q.answer_type(),
                    });
                }
                let probe = Probe {
                    id: String::new(),
                    category: req.category.unwrap_or(Category::P),
                    answer_type,
                    question: req.question.clone(),
                    spec: ProbeSpec::Query(q.clone()),
                    conflict_policy: ConflictPolicy::default(),
                    segment: self.segment(),
                    step: self.step(),
                };
                let truth = compute_ground_truth(&probe, &self.world, &self.history)?;
                metadata.insert(
                    "query".into(),
                    serde_json::to_value(&q).expect("query serializes"),
                );
                truth.render()
            }
            (None, Some(value)) => {
                if GroundTruth::parse(answer_type, &value).is_none() {
                    return Err(SessionError::BadTruth { answer_type, value });
                }
                value
            }
            _ => return Err(SessionError::TruthSource),
        };
        self.probes.push(ProbeRecord {
            segment: self.segment(),
            step: self.step(),
            probe_type: req.probe_type,
            question: req.question,
            ground_truth,
            metadata,
        });
        Ok(self.probes.last().expect("just pushed"))
    }

    /// Move to the next room. The carried item comes along.
    pub fn next_segment(
        &mut self,
        level_file: impl Into<String>,
        spec: LevelSpec,
        seed: u64,
    ) -> Result<(), SessionError> {
        let seg = Segment {
            level_file: level_file.into(),
            seed,
            actions: Vec::new(),
        };
        let carried = self.world.inventory().cloned();
        let world = segment_world(&spec, &seg, carried.clone())?;
        self.segments.push(seg);
        self.levels.push(spec);
        self.carried_in = carried;
        self.world = world;
        self.history
            .push(observe(&self.world, self.world.view_config()).with_segment(self.segment()));
        Ok(())
    }

    pub fn finalize(&self) -> Trajectory {
        Trajectory {
            segments: self.segments.clone(),
            probes: self.probes.clone(),
        }
    }
}
