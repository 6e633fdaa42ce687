//! Probes: questions about the world whose answers are computed from the
//! simulator state, plus the rule-based grader.
//!
//! A probe either carries a machine-checkable [`Query`] or a literal
//! [`GroundTruth`] recorded by a human operator. Queries are evaluated
//! against the true world and the agent's observation history; testimony
//! (notice boards, signposts) never feeds into a ground truth.

mod grade;
mod registry;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grade::{
    extract_answer, grade, is_abstention, normalize, parse_location, parse_value, Verdict,
};
pub use registry::{builtin_plugins, Generated, ProbePlugin, ProbeRegistry, RegistryError};

use crate::view::{observe, Observation};
use crate::world::{
    Action, Color, Condition, DoorState, ObjectKind, Pos, TileOverlay, World, WorldObject,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    /// Perceptual: read the current observation.
    P,
    /// Memory: track state across observations.
    M,
    /// Causal: forward-simulate mechanics.
    C,
    /// Uncertainty: abstain when evidence is insufficient.
    U,
    /// Compound: integrate across zones or segments.
    X,
}

impl Category {
    pub const ALL: [Category; 5] = [Self::P, Self::M, Self::C, Self::U, Self::X];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::P => "P",
            Self::M => "M",
            Self::C => "C",
            Self::U => "U",
            Self::X => "X",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerType {
    Presence,
    Count,
    State,
    Location,
    Causal,
    Uncertainty,
}

impl AnswerType {
    pub const ALL: [AnswerType; 6] = [
        Self::Presence,
        Self::Count,
        Self::State,
        Self::Location,
        Self::Causal,
        Self::Uncertainty,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Presence => "presence",
            Self::Count => "count",
            Self::State => "state",
            Self::Location => "location",
            Self::Causal => "causal",
            Self::Uncertainty => "uncertainty",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }

    /// Answer-format instruction appended to prompts.
    pub fn instruction(self) -> &'static str {
        match self {
            Self::Presence => "Answer yes or no.",
            Self::Count => "Answer with a single integer.",
            Self::State => "Answer with a single word or short phrase.",
            Self::Location => {
                "Answer as {\"steps_ahead\": <int>, \"lateral\": <int>} where lateral is negative to your left."
            }
            Self::Causal => "Answer with one of the listed outcomes.",
            Self::Uncertainty => "Answer concretely if the evidence allows it, otherwise answer \"can't determine\".",
        }
    }
}

impl fmt::Display for AnswerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The value a correct answer must match.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum GroundTruth {
    YesNo(bool),
    Count(u64),
    Attribute(String),
    Location { steps_ahead: i64, lateral: i64 },
    Causal(String),
    CannotDetermine,
}

pub const CANNOT_DETERMINE: &str = "CANNOT_DETERMINE";

impl GroundTruth {
    /// Canonical answer text; grading it against `self` is always correct.
    pub fn render(&self) -> String {
        match self {
            Self::YesNo(true) => "yes".into(),
            Self::YesNo(false) => "no".into(),
            Self::Count(n) => n.to_string(),
            Self::Attribute(s) | Self::Causal(s) => s.clone(),
            Self::Location {
                steps_ahead,
                lateral,
            } => {
                format!("{{\"steps_ahead\": {steps_ahead}, \"lateral\": {lateral}}}")
            }
            Self::CannotDetermine => CANNOT_DETERMINE.into(),
        }
    }

    /// Read a stored ground-truth string for a probe of the given type.
    pub fn parse(answer_type: AnswerType, s: &str) -> Option<GroundTruth> {
        let norm = normalize(s);
        if norm == "cannot_determine" || is_abstention(&norm) {
            return Some(Self::CannotDetermine);
        }
        match answer_type {
            AnswerType::Presence => grade::parse_yes_no(&norm).map(Self::YesNo),
            AnswerType::Count => grade::parse_count(&norm).map(Self::Count),
            AnswerType::State => (!norm.is_empty()).then_some(Self::Attribute(norm)),
            AnswerType::Causal => (!norm.is_empty()).then_some(Self::Causal(norm)),
            AnswerType::Location => {
                parse_location(s).map(|(steps_ahead, lateral)| Self::Location {
                    steps_ahead,
                    lateral,
                })
            }
            AnswerType::Uncertainty => {
                if let Some(b) = grade::exact_yes_no(&norm) {
                    Some(Self::YesNo(b))
                } else if let Ok(n) = norm.parse() {
                    Some(Self::Count(n))
                } else {
                    (!norm.is_empty()).then_some(Self::Attribute(norm))
                }
            }
        }
    }

    pub fn is_cannot_determine(&self) -> bool {
        matches!(self, Self::CannotDetermine)
    }

    /// Whether this value is a legal truth for the answer type.
    pub fn fits(&self, answer_type: AnswerType) -> bool {
        match (answer_type, self) {
            (_, Self::CannotDetermine) => true,
            (AnswerType::Presence, Self::YesNo(_)) => true,
            (AnswerType::Count, Self::Count(_)) => true,
            (AnswerType::State, Self::Attribute(_)) => true,
            (AnswerType::Location, Self::Location { .. }) => true,
            (AnswerType::Causal, Self::Causal(_)) => true,
            (AnswerType::Uncertainty, Self::YesNo(_) | Self::Count(_) | Self::Attribute(_)) => true,
            _ => false,
        }
    }
}

impl fmt::Display for GroundTruth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Object selector. Unset fields match anything.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectPattern {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ObjectKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Color>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub door_state: Option<DoorState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<Condition>,
}

impl ObjectPattern {
    pub fn of(kind: ObjectKind, color: Color) -> Self {
        Self {
            kind: Some(kind),
            color: Some(color),
            ..Self::default()
        }
    }

    pub fn kind(kind: ObjectKind) -> Self {
        Self {
            kind: Some(kind),
            ..Self::default()
        }
    }

    pub fn matches(&self, o: &WorldObject) -> bool {
        self.kind.is_none_or(|k| k == o.kind)
            && self.color.is_none_or(|c| c == o.color)
            && self.door_state.is_none_or(|s| Some(s) == o.door_state)
            && self.condition.is_none_or(|c| c == o.condition)
    }
}

impl fmt::Display for ObjectPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut words = Vec::new();
        if let Some(s) = self.door_state {
            words.push(s.as_str());
        }
        if let Some(c) = self.condition {
            words.push(c.as_str());
        }
        if let Some(c) = self.color {
            words.push(c.name());
        }
        words.push(self.kind.map_or("object", ObjectKind::name));
        f.write_str(&words.join(" "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// The current field of view (the agent's own cell excluded).
    Fov,
    /// Every cell of the current level plus the carried item.
    Room,
}

/// Which cell or object a state query reads.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "by", rename_all = "snake_case")]
pub enum Subject {
    Ego {
        ahead: i64,
        lateral: i64,
    },
    Cell {
        pos: Pos,
    },
    /// The unique matching object in the level.
    Object {
        pattern: ObjectPattern,
    },
    Carried,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Color,
    Kind,
    DoorState,
    Condition,
    /// `blue ball` or `empty`.
    Contents,
}

/// Outcome read after a forward simulation. Every variant has a fixed,
/// enumerated answer vocabulary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    /// `passable` or `blocked` for the agent.
    Passable { pos: Pos },
    /// `open`, `closed` or `locked`.
    DoorState { pos: Pos },
    /// `burning` or `extinguished` (`none` without a fire tile).
    Fire { pos: Pos },
    /// `reached` if the agent stands on `pos`, else `not reached`.
    AgentAt { pos: Pos },
    /// `blue ball` or `empty`.
    Contents { pos: Pos },
}

impl Outcome {
    pub fn options(&self) -> &'static [&'static str] {
        match self {
            Self::Passable { .. } => &["passable", "blocked"],
            Self::DoorState { .. } => &["open", "closed", "locked"],
            Self::Fire { .. } => &["burning", "extinguished", "none"],
            Self::AgentAt { .. } => &["reached", "not reached"],
            Self::Contents { .. } => &[],
        }
    }

    pub fn read(&self, world: &World) -> Result<String, ProbeError> {
        Ok(match self {
            Self::Passable { pos } => if world.passable(*pos) {
                "passable"
            } else {
                "blocked"
            }
            .to_string(),
            Self::DoorState { pos } => world
                .object_at(*pos)
                .and_then(|o| o.door_state)
                .ok_or(ProbeError::NotADoor(*pos))?
                .as_str()
                .to_string(),
            Self::Fire { pos } => {
                let cell = world.cell(*pos).ok_or(ProbeError::OutOfBounds(*pos))?;
                match cell.overlays.iter().find_map(|o| match o {
                    TileOverlay::Fire { active } => Some(*active),
                    _ => None,
                }) {
                    Some(true) => "burning",
                    Some(false) => "extinguished",
                    None => "none",
                }
                .to_string()
            }
            Self::AgentAt { pos } => if world.agent().pos() == *pos {
                "reached"
            } else {
                "not reached"
            }
            .to_string(),
            Self::Contents { pos } => contents(world.object_at(*pos)),
        })
    }
}

/// Facts whose answer depends on what the agent has seen.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "fact", rename_all = "snake_case")]
pub enum UncertainFact {
    /// Current contents of one cell.
    CellContents { pos: Pos },
    /// Whether a matching object is currently inside the rectangle.
    RegionPresence {
        from: Pos,
        to: Pos,
        target: ObjectPattern,
    },
}

/// Machine-checkable question specification.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Query {
    Presence {
        target: ObjectPattern,
        scope: Scope,
    },
    Count {
        target: ObjectPattern,
        scope: Scope,
    },
    State {
        subject: Subject,
        attribute: Attribute,
    },
    Location {
        target: ObjectPattern,
        scope: Scope,
    },
    /// Distinct cells, across every segment so far, in which a matching
    /// object has been observed.
    Seen {
        target: ObjectPattern,
    },
    /// Presence or count as observed at an earlier step of the current
    /// segment. The inner query must use the field-of-view scope.
    Recall {
        step: u64,
        query: Box<Query>,
    },
    Causal {
        script: Vec<Action>,
        outcome: Outcome,
    },
    Uncertainty {
        fact: UncertainFact,
    },
}

impl Query {
    pub fn answer_type(&self) -> AnswerType {
        match self {
            Self::Presence { .. } => AnswerType::Presence,
            Self::Count { .. } | Self::Seen { .. } => AnswerType::Count,
            Self::State { .. } => AnswerType::State,
            Self::Location { .. } => AnswerType::Location,
            Self::Recall { query, .. } => query.answer_type(),
            Self::Causal { .. } => AnswerType::Causal,
            Self::Uncertainty { .. } => AnswerType::Uncertainty,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictPolicy {
    /// Direct observation is the only source of truth; testimony is ignored.
    #[default]
    ObservationFirst,
}

/// Where a probe's truth comes from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeSpec {
    Query(Query),
    Literal(GroundTruth),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probe {
    pub id: String,
    pub category: Category,
    pub answer_type: AnswerType,
    pub question: String,
    pub spec: ProbeSpec,
    #[serde(default)]
    pub conflict_policy: ConflictPolicy,
    pub segment: usize,
    pub step: u64,
}

impl Probe {
    pub fn check(&self) -> Result<(), ProbeError> {
        match &self.spec {
            ProbeSpec::Query(q) if q.answer_type() != self.answer_type => {
                Err(ProbeError::TypeMismatch {
                    declared: self.answer_type,
                    actual: q.answer_type(),
                })
            }
            ProbeSpec::Literal(t) if !t.fits(self.answer_type) => {
                Err(ProbeError::LiteralMismatch {
                    declared: self.answer_type,
                    value: t.render(),
                })
            }
            _ => Ok(()),
        }
    }

    /// Question text with the answer-format instruction for a prompt.
    pub fn prompt_question(&self) -> String {
        let mut q = format!("{} {}", self.question, self.answer_type.instruction());
        if let ProbeSpec::Query(Query::Causal { outcome, .. }) = &self.spec {
            if !outcome.options().is_empty() {
                q.push_str(&format!(" Outcomes: {}.", outcome.options().join(", ")));
            }
        }
        q
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProbeError {
    #[error("no {0} exists in the queried scope")]
    NoSuchObject(ObjectPattern),
    #[error("{count} objects match {pattern}; the question is ambiguous")]
    Ambiguous {
        pattern: ObjectPattern,
        count: usize,
    },
    #[error("cell {0} holds no object")]
    EmptyCell(Pos),
    #[error("object at {0} is not a door")]
    NotADoor(Pos),
    #[error("cell {0} is outside the level")]
    OutOfBounds(Pos),
    #[error("egocentric cell (ahead {ahead}, lateral {lateral}) is outside the level")]
    EgoOutOfBounds { ahead: i64, lateral: i64 },
    #[error("the agent carries nothing")]
    NothingCarried,
    #[error("no observation recorded at step {0} of the current segment")]
    NoObservation(u64),
    #[error("recall queries must read the field of view")]
    RecallScope,
    #[error("probe declares {declared} but its query answers {actual}")]
    TypeMismatch {
        declared: AnswerType,
        actual: AnswerType,
    },
    #[error("literal {value:?} is not a valid {declared} answer")]
    LiteralMismatch { declared: AnswerType, value: String },
}

fn contents(o: Option<&WorldObject>) -> String {
    o.map_or_else(|| "empty".to_string(), WorldObject::describe)
}

/// Truth for `probe` at the current world state. `history` holds the
/// observations so far, the current one last.
pub fn compute_ground_truth(
    probe: &Probe,
    world: &World,
    history: &[Observation],
) -> Result<GroundTruth, ProbeError> {
    probe.check()?;
    match &probe.spec {
        ProbeSpec::Literal(t) => Ok(t.clone()),
        ProbeSpec::Query(q) => evaluate(q, world, history),
    }
}

/// Evaluate a query against the world and observation history.
pub fn evaluate(
    query: &Query,
    world: &World,
    history: &[Observation],
) -> Result<GroundTruth, ProbeError> {
    match query {
        Query::Presence { target, scope } => {
            Ok(GroundTruth::YesNo(count(world, target, *scope) > 0))
        }
        Query::Count { target, scope } => {
            Ok(GroundTruth::Count(count(world, target, *scope) as u64))
        }
        Query::State { subject, attribute } => state(world, subject, *attribute),
        Query::Location { target, scope } => {
            let pose = world.agent();
            let found: Vec<Pos> = match scope {
                Scope::Fov => {
                    let obs = observe(world, world.view_config());
                    obs.visible_objects()
                        .filter(|(_, _, _, o)| target.matches(o))
                        .map(|(_, _, p, _)| p)
                        .collect()
                }
                Scope::Room => world
                    .objects()
                    .filter(|(_, o)| target.matches(o))
                    .map(|(p, _)| p)
                    .collect(),
            };
            match found.as_slice() {
                [] => Err(ProbeError::NoSuchObject(target.clone())),
                [p] => {
                    let (steps_ahead, lateral) = pose.abs_to_ego(*p);
                    Ok(GroundTruth::Location {
                        steps_ahead,
                        lateral,
                    })
                }
                _ => Err(ProbeError::Ambiguous {
                    pattern: target.clone(),
                    count: found.len(),
                }),
            }
        }
        Query::Seen { target } => {
            let mut cells = BTreeSet::new();
            for obs in history {
                for (_, _, pos, o) in obs.visible_objects() {
                    if target.matches(o) {
                        cells.insert((obs.segment, pos));
                    }
                }
            }
            Ok(GroundTruth::Count(cells.len() as u64))
        }
        Query::Recall { step, query } => {
            let segment = history.last().map_or(0, |o| o.segment);
            let obs = history
                .iter()
                .rev()
                .find(|o| o.segment == segment && o.step == *step)
                .ok_or(ProbeError::NoObservation(*step))?;
            let n = |target: &ObjectPattern| {
                obs.visible_objects()
                    .filter(|(_, _, _, o)| target.matches(o))
                    .count()
            };
            match query.as_ref() {
                Query::Presence {
                    target,
                    scope: Scope::Fov,
                } => Ok(GroundTruth::YesNo(n(target) > 0)),
                Query::Count {
                    target,
                    scope: Scope::Fov,
                } => Ok(GroundTruth::Count(n(target) as u64)),
                _ => Err(ProbeError::RecallScope),
            }
        }
        Query::Causal { script, outcome } => {
            Ok(GroundTruth::Causal(outcome.read(&world.simulate(script))?))
        }
        Query::Uncertainty { fact } => Ok(uncertain(world, history, fact)),
    }
}

fn count(world: &World, target: &ObjectPattern, scope: Scope) -> usize {
    match scope {
        Scope::Fov => {
            let obs = observe(world, world.view_config());
            obs.visible_objects()
                .filter(|(_, _, _, o)| target.matches(o))
                .count()
        }
        Scope::Room => {
            world.objects().filter(|(_, o)| target.matches(o)).count()
                + usize::from(world.inventory().is_some_and(|o| target.matches(o)))
        }
    }
}

fn state(
    world: &World,
    subject: &Subject,
    attribute: Attribute,
) -> Result<GroundTruth, ProbeError> {
    let (pos, obj) = match subject {
        Subject::Ego { ahead, lateral } => {
            let pos = world
                .agent()
                .ego_to_abs(*ahead, *lateral)
                .filter(|p| world.in_bounds(*p))
                .ok_or(ProbeError::EgoOutOfBounds {
                    ahead: *ahead,
                    lateral: *lateral,
                })?;
            (Some(pos), world.object_at(pos))
        }
        Subject::Cell { pos } => {
            if !world.in_bounds(*pos) {
                return Err(ProbeError::OutOfBounds(*pos));
            }
            (Some(*pos), world.object_at(*pos))
        }
        Subject::Object { pattern } => {
            let found: Vec<(Pos, &WorldObject)> = world
                .objects()
                .filter(|(_, o)| pattern.matches(o))
                .collect();
            match found.as_slice() {
                [] => return Err(ProbeError::NoSuchObject(pattern.clone())),
                [(p, o)] => (Some(*p), Some(*o)),
                _ => {
                    return Err(ProbeError::Ambiguous {
                        pattern: pattern.clone(),
                        count: found.len(),
                    })
                }
            }
        }
        Subject::Carried => (
            None,
            Some(world.inventory().ok_or(ProbeError::NothingCarried)?),
        ),
    };
    if attribute == Attribute::Contents {
        return Ok(GroundTruth::Attribute(contents(obj)));
    }
    let obj = obj.ok_or_else(|| ProbeError::EmptyCell(pos.unwrap_or_default()))?;
    let value = match attribute {
        Attribute::Color => obj.color.name().to_string(),
        Attribute::Kind => obj.kind.name().to_string(),
        Attribute::DoorState => obj
            .door_state
            .ok_or(ProbeError::NotADoor(pos.unwrap_or_default()))?
            .as_str()
            .to_string(),
        Attribute::Condition => obj.condition.as_str().to_string(),
        Attribute::Contents => unreachable!(),
    };
    Ok(GroundTruth::Attribute(value))
}

/// Mechanics tiles under which a change to a cell follows from rules the
/// agent has been told about.
fn on_mechanics(world: &World, pos: Pos) -> bool {
    world.cell(pos).is_some_and(|c| {
        c.overlays.iter().any(|o| {
            matches!(
                o,
                TileOverlay::River { .. }
                    | TileOverlay::Fire { .. }
                    | TileOverlay::Flood { .. }
                    | TileOverlay::PressurePlate { .. }
            )
        })
    })
}

/// A cell's current contents are determinable iff it was observed during the
/// current segment and either its contents are unchanged since the last
/// observation or it sits on a mechanics tile.
pub fn determinable(world: &World, history: &[Observation], pos: Pos) -> bool {
    let segment = history.last().map_or(0, |o| o.segment);
    let last_seen = history
        .iter()
        .rev()
        .filter(|o| o.segment == segment)
        .find_map(|o| {
            let (a, l) = o.pose.abs_to_ego(pos);
            if (a, l) == (0, 0) {
                return None;
            }
            o.get(a, l)
        });
    let Some(seen) = last_seen else { return false };
    seen.cell.object.as_ref() == world.object_at(pos) || on_mechanics(world, pos)
}

fn uncertain(world: &World, history: &[Observation], fact: &UncertainFact) -> GroundTruth {
    match fact {
        UncertainFact::CellContents { pos } => {
            if determinable(world, history, *pos) {
                GroundTruth::Attribute(contents(world.object_at(*pos)))
            } else {
                GroundTruth::CannotDetermine
            }
        }
        UncertainFact::RegionPresence { from, to, target } => {
            let mut all_known = true;
            for row in from.row.min(to.row)..=from.row.max(to.row) {
                for col in from.col.min(to.col)..=from.col.max(to.col) {
                    let pos = Pos::new(col, row);
                    if determinable(world, history, pos) {
                        if world.object_at(pos).is_some_and(|o| target.matches(o)) {
                            return GroundTruth::YesNo(true);
                        }
                    } else {
                        all_known = false;
                    }
                }
            }
            if all_known {
                GroundTruth::YesNo(false)
            } else {
                GroundTruth::CannotDetermine
            }
        }
    }
}
