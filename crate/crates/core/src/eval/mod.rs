//! Evaluation harness: run a model over a fixed trajectory under the
//! isolated (`CtrlStatic`) or in-dialogue (`InNav`) protocol, grade every
//! probe, and persist one JSONL record per answer.

pub mod adapter;
pub mod metrics;
pub mod prompt;

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::probe::{Category, GroundTruth, Probe, ProbeRegistry, Verdict};
use crate::trajectory::{replay, LevelLibrary, Trajectory, TrajectoryError};
use crate::view::{Observation, Serializer};
use crate::world::World;

pub use adapter::{
    complete_with_retry, AdapterError, ChatRequest, Completion, DecodingConfig, FixedAdapter,
    HttpAdapter, Message, ModelAdapter, OracleAdapter, ProbeTag, RetryPolicy, Role, StaleAdapter,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "ctrlstatic")]
    CtrlStatic,
    #[serde(rename = "innav")]
    InNav,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CtrlStatic => "ctrlstatic",
            Self::InNav => "innav",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ctrlstatic" | "ctrl_static" | "ctrl-static" => Some(Self::CtrlStatic),
            "innav" | "in_nav" | "in-nav" => Some(Self::InNav),
            _ => None,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One graded answer. Schema version 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub schema_version: u32,
    pub run_id: String,
    pub model: String,
    pub trajectory_id: String,
    /// Seed of the trajectory's first segment; identifies the episode.
    pub seed: u64,
    pub probe_id: String,
    pub protocol: Protocol,
    pub serializer: Serializer,
    pub category: Category,
    pub probe_type: String,
    pub level: String,
    pub segment: usize,
    pub step: u64,
    pub quintile: u8,
    pub question: String,
    pub ground_truth: String,
    pub model_output: Option<String>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub attempts: u32,
    pub latency_ms: u64,
    pub prompt_version: String,
}

/// Fifth of the segment the step falls in, 1 through 5.
pub fn quintile(step: u64, segment_len: usize) -> u8 {
    if segment_len == 0 {
        return 1;
    }
    let q = (5 * step).div_ceil(segment_len as u64);
    q.clamp(1, 5) as u8
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub run_id: String,
    pub trajectory_id: String,
    pub serializer: Serializer,
    pub decoding: DecodingConfig,
    pub retry: RetryPolicy,
    /// Upper bound on concurrent requests for isolated probes.
    pub parallelism: usize,
}

impl RunConfig {
    pub fn new(trajectory_id: impl Into<String>, serializer: Serializer) -> Self {
        Self {
            run_id: "run".into(),
            trajectory_id: trajectory_id.into(),
            serializer,
            decoding: DecodingConfig::default(),
            retry: RetryPolicy::default(),
            parallelism: 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("cannot render observation: {0}")]
    View(#[from] crate::view::ViewError),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("results file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("results file {path}, line {line}: {source}")]
    Json {
        path: String,
        line: usize,
        source: serde_json::Error,
    },
}

/// Everything needed to ask one probe, captured during replay.
struct Pending {
    index: usize,
    probe: Probe,
    truth: GroundTruth,
    probe_type: String,
    level: String,
    segment_len: usize,
    worlds: Vec<World>,
    history: Vec<Observation>,
}

fn collect(
    traj: &Trajectory,
    levels: &LevelLibrary,
    registry: &ProbeRegistry,
) -> Result<Vec<Pending>, EvalError> {
    let mut worlds: Vec<World> = Vec::new();
    let mut out = Vec::new();
    replay(traj, levels, registry, |s| {
        worlds.push(s.world.clone());
        for due in s.due {
            out.push(Pending {
                index: due.index,
                probe_type: traj.probes[due.index].probe_type.clone(),
                level: s.world.level_id().to_string(),
                segment_len: traj.segments[s.segment].actions.len(),
                probe: due.probe,
                truth: due.truth,
                worlds: worlds.clone(),
                history: s.history.to_vec(),
            });
        }
    })?;
    Ok(out)
}

fn record(
    cfg: &RunConfig,
    traj: &Trajectory,
    adapter: &dyn ModelAdapter,
    registry: &ProbeRegistry,
    protocol: Protocol,
    p: &Pending,
    done: Completion,
) -> EvalRecord {
    let (model_output, verdict, failure) = match done.result {
        Ok(text) => {
            let v = registry
                .get(&p.probe_type)
                .map_or(Verdict::Unparseable, |pl| pl.evaluate(&p.truth, &text));
            (Some(text), v, None)
        }
        Err(e) => (None, Verdict::TransportFailure, Some(e.to_string())),
    };
    EvalRecord {
        schema_version: SCHEMA_VERSION,
        run_id: cfg.run_id.clone(),
        model: adapter.model_id().to_string(),
        trajectory_id: cfg.trajectory_id.clone(),
        seed: traj.segments.first().map_or(0, |s| s.seed),
        probe_id: p.probe.id.clone(),
        protocol,
        serializer: cfg.serializer,
        category: p.probe.category,
        probe_type: p.probe_type.clone(),
        level: p.level.clone(),
        segment: p.probe.segment,
        step: p.probe.step,
        quintile: quintile(p.probe.step, p.segment_len),
        question: p.probe.question.clone(),
        ground_truth: p.truth.render(),
        model_output,
        verdict,
        failure,
        attempts: done.attempts,
        latency_ms: done.latency_ms,
        prompt_version: prompt::PROMPT_VERSION.to_string(),
    }
}

/// Ask every probe in its own self-contained prompt. Requests run
/// concurrently up to `cfg.parallelism`; records come back in probe order.
pub fn run_ctrl_static(
    traj: &Trajectory,
    levels: &LevelLibrary,
    registry: &ProbeRegistry,
    cfg: &RunConfig,
    adapter: &dyn ModelAdapter,
) -> Result<Vec<EvalRecord>, EvalError> {
    let mut pending = collect(traj, levels, registry)?;
    pending.sort_by_key(|p| p.index);
    let requests: Vec<ChatRequest> = pending
        .iter()
        .map(|p| {
            let obs = prompt::render_static(cfg.serializer, &p.history)?;
            Ok(ChatRequest {
                messages: prompt::ctrl_static(&obs, &p.probe),
                decoding: cfg.decoding.clone(),
            })
        })
        .collect::<Result<_, EvalError>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism.max(1))
        .build()
        .map_err(|e| EvalError::Pool(e.to_string()))?;
    let completions: Vec<Completion> = pool.install(|| {
        pending
            .par_iter()
            .zip(&requests)
            .map(|(p, req)| {
                let tag = ProbeTag {
                    probe: &p.probe,
                    worlds: &p.worlds,
                    history: &p.history,
                };
                complete_with_retry(adapter, req, &tag, &cfg.retry)
            })
            .collect()
    });
    Ok(pending
        .iter()
        .zip(completions)
        .map(|(p, c)| record(cfg, traj, adapter, registry, Protocol::CtrlStatic, p, c))
        .collect())
}

/// Replay the trajectory as one growing conversation: each action and the
/// observation it produced are appended as turns, probes are asked inline
/// at their steps and the model's answers stay in the dialogue.
pub fn run_in_nav(
    traj: &Trajectory,
    levels: &LevelLibrary,
    registry: &ProbeRegistry,
    cfg: &RunConfig,
    adapter: &dyn ModelAdapter,
) -> Result<Vec<EvalRecord>, EvalError> {
    let mut turns: Vec<(Vec<Message>, Vec<Pending>)> = Vec::new();
    let mut worlds: Vec<World> = Vec::new();
    let mut view_err = None;
    replay(traj, levels, registry, |s| {
        worlds.push(s.world.clone());
        let action = if s.step > 0 {
            s.world.history().last().copied()
        } else {
            None
        };
        let msgs = match prompt::in_nav_step(cfg.serializer, s.history, action) {
            Ok(m) => m,
            Err(e) => {
                view_err.get_or_insert(e);
                Vec::new()
            }
        };
        let due = s
            .due
            .into_iter()
            .map(|d| Pending {
                index: d.index,
                probe_type: traj.probes[d.index].probe_type.clone(),
                level: s.world.level_id().to_string(),
                segment_len: traj.segments[s.segment].actions.len(),
                probe: d.probe,
                truth: d.truth,
                worlds: worlds.clone(),
                history: s.history.to_vec(),
            })
            .collect();
        turns.push((msgs, due));
    })?;
    if let Some(e) = view_err {
        return Err(e.into());
    }
    let mut conversation = vec![Message::system(prompt::SYSTEM_IN_NAV)];
    let mut out = Vec::new();
    for (msgs, mut due) in turns {
        conversation.extend(msgs);
        due.sort_by_key(|p| p.index);
        for p in due {
            conversation.push(Message::user(prompt::in_nav_question(&p.probe)));
            let req = ChatRequest {
                messages: conversation.clone(),
                decoding: cfg.decoding.clone(),
            };
            let tag = ProbeTag {
                probe: &p.probe,
                worlds: &p.worlds,
                history: &p.history,
            };
            let done = complete_with_retry(adapter, &req, &tag, &cfg.retry);
            let reply = match &done.result {
                Ok(text) => text.clone(),
                Err(_) => prompt::NO_REPLY.to_string(),
            };
            conversation.push(Message::assistant(reply));
            out.push(record(
                cfg,
                traj,
                adapter,
                registry,
                Protocol::InNav,
                &p,
                done,
            ));
        }
    }
    Ok(out)
}

/// Append records to a JSONL file, one object per line.
pub fn append_jsonl(path: &Path, records: &[EvalRecord]) -> Result<(), EvalError> {
    let io = |source| EvalError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io)?;
    let mut w = std::io::BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("records serialize");
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_jsonl(path: &Path) -> Result<Vec<EvalRecord>, EvalError> {
    let p = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| EvalError::Io {
        path: p.clone(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| EvalError::Io {
            path: p.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|source| EvalError::Json {
            path: p.clone(),
            line: i + 1,
            source,
        })?;
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quintile_bounds() {
        assert_eq!(quintile(0, 10), 1);
        assert_eq!(quintile(2, 10), 1);
        assert_eq!(quintile(3, 10), 2);
        assert_eq!(quintile(10, 10), 5);
        assert_eq!(quintile(99, 10), 5);
        assert_eq!(quintile(3, 0), 1);
    }

    #[test]
    fn protocol_names() {
        for p in [Protocol::CtrlStatic, Protocol::InNav] {
            assert_eq!(Protocol::parse(p.as_str()), Some(p));
        }
        assert_eq!(
            serde_json::to_string(&Protocol::InNav).unwrap(),
            "\"innav\""
        );
    }
}
