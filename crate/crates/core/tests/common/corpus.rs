//! Malformed inputs with the position each must be reported at.

use gridprobe::level::LevelErrorKind;
use gridprobe::trajectory::TrajectoryError;

pub const BASE: &str = "[META]
agent_start=1,1
id=base

[GRID]
## ## ## ## ##
## @. .. .. ##
## .. rD .. ##
## .. .. eN ##
## ## ## ## ##

[OVERLAYS]
door 2 2 state=locked

[TEXTS]
3 3 \"hello\"
";

fn with(from: &str, to: &str) -> String {
    assert!(BASE.contains(from), "{from}");
    BASE.replacen(from, to, 1)
}

pub type LevelCheck = fn(&LevelErrorKind) -> bool;

/// Broken variants of [`BASE`] with the 1-based line of the fault.
pub fn levels() -> Vec<(String, usize, LevelCheck)> {
    vec![
        (with("[META]", "[META]\ncolour=red"), 2, |k| {
            matches!(k, LevelErrorKind::UnknownMetaKey(_))
        }),
        (with("[OVERLAYS]", "[OVERLAY]"), 12, |k| {
            matches!(k, LevelErrorKind::UnknownSection(_))
        }),
        (format!("stray\n{BASE}"), 1, |k| {
            matches!(k, LevelErrorKind::NoSection)
        }),
        (with("id=base", "id=base\nmax_steps=lots"), 4, |k| {
            matches!(k, LevelErrorKind::BadValue { .. })
        }),
        (with("## .. rD .. ##", "## .. rD .. .. ##"), 8, |k| {
            matches!(k, LevelErrorKind::Ragged { .. })
        }),
        (with("## .. rD .. ##", "## .. rDx .. ##"), 8, |k| {
            matches!(k, LevelErrorKind::BadCellWidth(_))
        }),
        (with("## .. rD .. ##", "## .. zD .. ##"), 8, |k| {
            matches!(k, LevelErrorKind::UnknownCode(_))
        }),
        (with("## @. .. .. ##", "## .. .. .. ##"), 5, |k| {
            matches!(k, LevelErrorKind::MissingAgent)
        }),
        (with("## .. .. eN ##", "## @. .. eN ##"), 9, |k| {
            matches!(k, LevelErrorKind::MultipleAgents)
        }),
        (with("## .. rD .. ##", ".. .. rD .. ##"), 8, |k| {
            matches!(k, LevelErrorKind::PerimeterNotWall)
        }),
        (with("door 2 2", "fire 0 0\ndoor 2 2"), 13, |k| {
            matches!(k, LevelErrorKind::OnWall)
        }),
        (with("door 2 2", "fire 9 9\ndoor 2 2"), 13, |k| {
            matches!(k, LevelErrorKind::OutOfBounds { .. })
        }),
        (
            with("door 2 2", "plate 1 2 effect=trigger link=3,2\ndoor 2 2"),
            13,
            |k| matches!(k, LevelErrorKind::DanglingLink(_)),
        ),
        (with("door 2 2", "dark 1 2\ndark 1 2\ndoor 2 2"), 14, |k| {
            matches!(k, LevelErrorKind::DuplicateOverlay(_))
        }),
        (
            with("door 2 2", "river 1 2 direction=up speed=1\ndoor 2 2"),
            13,
            |k| matches!(k, LevelErrorKind::BadValue { .. }),
        ),
        (
            with("door 2 2 state=locked", "door 3 2 state=locked"),
            13,
            |k| matches!(k, LevelErrorKind::NoSuchObject { .. }),
        ),
        (
            with("3 3 \"hello\"", "3 3 accuracy=0.5 \"hello\""),
            16,
            |k| matches!(k, LevelErrorKind::BadAccuracy),
        ),
        (with("3 3 \"hello\"", "2 3 \"hello\""), 16, |k| {
            matches!(k, LevelErrorKind::StrayText)
        }),
        (with("3 3 \"hello\"", "3 3 \"hello"), 16, |k| {
            matches!(k, LevelErrorKind::Malformed(_))
        }),
        (with("[TEXTS]\n3 3 \"hello\"\n", "[TEXTS]\n"), 9, |k| {
            matches!(k, LevelErrorKind::MissingText)
        }),
        (
            with("door 2 2", "random 1 1 3 3 absent=20 fill=bB\ndoor 2 2"),
            13,
            |k| matches!(k, LevelErrorKind::PoolTooSmall { .. }),
        ),
        (
            with("door 2 2", "wet 2 2 condition=wet turns=2\ndoor 2 2"),
            13,
            |k| matches!(k, LevelErrorKind::NoSuchObject { .. }),
        ),
        (with("agent_start=1,1", "agent_start=2,1"), 2, |k| {
            matches!(k, LevelErrorKind::AgentMismatch { .. })
        }),
    ]
}

/// Where a trajectory error says the fault is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Position {
    Json { line: usize },
    Segment(usize),
    Action { segment: usize, index: usize },
    Probe(usize),
    Document,
}

pub fn position(e: &TrajectoryError) -> Option<Position> {
    Some(match e {
        TrajectoryError::Json(j) if j.line() > 0 => Position::Json { line: j.line() },
        TrajectoryError::InSegment { segment, .. } => Position::Segment(*segment),
        TrajectoryError::BadAction { segment, index, .. } => Position::Action {
            segment: *segment,
            index: *index,
        },
        TrajectoryError::ProbeSegment { index, .. }
        | TrajectoryError::ProbeStep { index, .. }
        | TrajectoryError::ProbeType { index, .. }
        | TrajectoryError::ProbeTruth { index, .. }
        | TrajectoryError::ProbeMetadata { index, .. }
        | TrajectoryError::Probe { index, .. } => Position::Probe(*index),
        TrajectoryError::Empty => Position::Document,
        _ => return None,
    })
}

/// Broken variants of a fixture trajectory's JSON, each with the position
/// it must be reported at.
pub fn trajectories(base: &str) -> Vec<(String, Position)> {
    let edit = |f: &dyn Fn(&mut serde_json::Value)| {
        let mut v: serde_json::Value = serde_json::from_str(base).unwrap();
        f(&mut v);
        serde_json::to_string_pretty(&v).unwrap()
    };
    let line_of = |needle: &str| base.lines().position(|l| l.contains(needle)).expect(needle) + 1;
    let seed_line = line_of("\"seed\"");
    let first_segment = line_of("\"segment\"");
    vec![
        ("hello".into(), Position::Json { line: 1 }),
        (
            base.replacen("\"seed\": 1", "\"seed\": one", 1),
            Position::Json { line: seed_line },
        ),
        (
            base.replacen("\"seed\": 1", "\"seed\": -1", 1),
            Position::Json { line: seed_line },
        ),
        (
            base.replacen("\"segment\": 0", "\"segment\": \"0\"", 1),
            Position::Json {
                line: first_segment,
            },
        ),
        (
            base.replacen("\"segment\": 0", "\"segment\": 0, \"segment\": 0", 1),
            Position::Json {
                line: first_segment,
            },
        ),
        (
            base.replacen(",\n      \"seed\": 1", "", 1),
            Position::Json { line: seed_line },
        ),
        (
            edit(&|v| v["segments"][0]["actions"][2] = 11.into()),
            Position::Action {
                segment: 0,
                index: 2,
            },
        ),
        (
            edit(&|v| v["segments"][0]["level_file"] = "levels/nowhere.txt".into()),
            Position::Segment(0),
        ),
        (
            edit(&|v| v["probes"][4]["step"] = 99.into()),
            Position::Probe(4),
        ),
        (
            edit(&|v| v["probes"][2]["segment"] = 1.into()),
            Position::Probe(2),
        ),
        (
            edit(&|v| v["probes"][0]["probe_type"] = "telepathy".into()),
            Position::Probe(0),
        ),
        (
            edit(&|v| v["probes"][0]["ground_truth"] = "many".into()),
            Position::Probe(0),
        ),
        (
            edit(&|v| v["probes"][1]["metadata"]["query"] = "north".into()),
            Position::Probe(1),
        ),
        (
            edit(&|v| v["probes"][3]["metadata"]["category"] = 7.into()),
            Position::Probe(3),
        ),
        (
            edit(&|v| v["segments"] = serde_json::json!([])),
            Position::Document,
        ),
    ]
}
