//! Probe-type plugins. Each type knows how to pose a question about the
//! current state and how to judge a response; trajectories name their probe
//! types and loading fails for names nobody registered.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use super::*;
use crate::view::{ego_label, observe};
use crate::world::Action;

/// A question produced by a plugin, with its truth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generated {
    pub question: String,
    pub truth: GroundTruth,
    pub category: Category,
    /// The query behind the truth, when there is one, so replays can
    /// re-evaluate it.
    pub query: Option<Query>,
}

pub trait ProbePlugin: Send + Sync {
    fn name(&self) -> &str;

    fn answer_type(&self) -> AnswerType;

    /// Pose a question about the state at `step`. `history` holds the
    /// observations so far, the current one last. `None` when the state
    /// offers nothing to ask about.
    fn generate(&self, world: &World, history: &[Observation], step: u64) -> Option<Generated>;

    fn evaluate(&self, truth: &GroundTruth, response: &str) -> Verdict {
        grade(response, truth, self.answer_type())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("probe type {0:?} is already registered")]
    Duplicate(String),
    #[error("probe type {0:?} is not registered")]
    Unknown(String),
}

#[derive(Clone, Default)]
pub struct ProbeRegistry {
    plugins: BTreeMap<String, Arc<dyn ProbePlugin>>,
}

impl std::fmt::Debug for ProbeRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.plugins.keys()).finish()
    }
}

impl ProbeRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The six built-in types, named after their answer types.
    pub fn with_builtins() -> Self {
        let mut r = Self::default();
        for p in builtin_plugins() {
            r.register(p).expect("builtin names are distinct");
        }
        r
    }

    pub fn register(&mut self, plugin: Arc<dyn ProbePlugin>) -> Result<(), RegistryError> {
        let name = plugin.name().to_string();
        if self.plugins.contains_key(&name) {
            return Err(RegistryError::Duplicate(name));
        }
        self.plugins.insert(name, plugin);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Arc<dyn ProbePlugin>, RegistryError> {
        self.plugins
            .get(name)
            .ok_or_else(|| RegistryError::Unknown(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.plugins.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> + '_ {
        self.plugins.keys().map(String::as_str)
    }
}

pub fn builtin_plugins() -> Vec<Arc<dyn ProbePlugin>> {
    vec![
        Arc::new(Builtin(AnswerType::Presence)),
        Arc::new(Builtin(AnswerType::Count)),
        Arc::new(Builtin(AnswerType::State)),
        Arc::new(Builtin(AnswerType::Location)),
        Arc::new(Builtin(AnswerType::Causal)),
        Arc::new(Builtin(AnswerType::Uncertainty)),
    ]
}

struct Builtin(AnswerType);

fn generated(
    question: String,
    category: Category,
    query: Query,
    world: &World,
    history: &[Observation],
) -> Option<Generated> {
    let truth = evaluate(&query, world, history).ok()?;
    Some(Generated {
        question,
        truth,
        category,
        query: Some(query),
    })
}

impl ProbePlugin for Builtin {
    fn name(&self) -> &str {
        self.0.as_str()
    }

    fn answer_type(&self) -> AnswerType {
        self.0
    }

    fn generate(&self, world: &World, history: &[Observation], _step: u64) -> Option<Generated> {
        let obs = observe(world, world.view_config());
        let visible: Vec<(i64, i64, &WorldObject)> = obs
            .visible_objects()
            .map(|(a, l, _, o)| (a, l, o))
            .collect();
        let first = visible
            .first()
            .map(|(a, l, o)| (*a, *l, ObjectPattern::of(o.kind, o.color)));
        match self.0 {
            AnswerType::Presence => {
                let target =
                    first.map_or(ObjectPattern::of(ObjectKind::Box, Color::Purple), |f| f.2);
                let q = format!("Is there a {target} in your current field of view?");
                generated(
                    q,
                    Category::P,
                    Query::Presence {
                        target,
                        scope: Scope::Fov,
                    },
                    world,
                    history,
                )
            }
            AnswerType::Count => {
                let mut tally: BTreeMap<(ObjectKind, Color), usize> = BTreeMap::new();
                for (_, _, o) in &visible {
                    *tally.entry((o.kind, o.color)).or_default() += 1;
                }
                let ((kind, color), _) = tally
                    .into_iter()
                    .max_by_key(|(k, n)| (*n, std::cmp::Reverse(*k)))?;
                let target = ObjectPattern::of(kind, color);
                let q = format!("How many {target}s do you see?");
                generated(
                    q,
                    Category::P,
                    Query::Count {
                        target,
                        scope: Scope::Fov,
                    },
                    world,
                    history,
                )
            }
            AnswerType::State => {
                let (ahead, lateral, pattern) = first?;
                let q = format!(
                    "What color is the {} at {}?",
                    pattern.kind.map_or("object", ObjectKind::name),
                    ego_label(ahead, lateral)
                );
                let subject = Subject::Ego { ahead, lateral };
                generated(
                    q,
                    Category::P,
                    Query::State {
                        subject,
                        attribute: Attribute::Color,
                    },
                    world,
                    history,
                )
            }
            AnswerType::Location => {
                let unique = visible.iter().find(|(_, _, o)| {
                    visible
                        .iter()
                        .filter(|(_, _, p)| p.kind == o.kind && p.color == o.color)
                        .count()
                        == 1
                })?;
                let target = ObjectPattern::of(unique.2.kind, unique.2.color);
                let q = format!("Where is the {target} relative to you?");
                generated(
                    q,
                    Category::P,
                    Query::Location {
                        target,
                        scope: Scope::Fov,
                    },
                    world,
                    history,
                )
            }
            AnswerType::Causal => {
                let pose = world.agent();
                let ahead = pose.ego_to_abs(1, 0).filter(|p| world.in_bounds(*p))?;
                let q = "If you move forward once, will you reach the cell directly ahead of you?"
                    .to_string();
                let query = Query::Causal {
                    script: vec![Action::Forward],
                    outcome: Outcome::AgentAt { pos: ahead },
                };
                generated(q, Category::C, query, world, history)
            }
            AnswerType::Uncertainty => {
                let behind = world
                    .agent()
                    .ego_to_abs(-1, 0)
                    .filter(|p| world.in_bounds(*p))?;
                let q = "What is on the cell directly behind you right now?".to_string();
                let query = Query::Uncertainty {
                    fact: UncertainFact::CellContents { pos: behind },
                };
                generated(q, Category::U, query, world, history)
            }
        }
    }
}
