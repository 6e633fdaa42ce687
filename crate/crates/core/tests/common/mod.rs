#![allow(dead_code)]

pub mod corpus;
pub mod gen;
pub mod oracles;

use std::path::{Path, PathBuf};

use gridprobe::level::{parse_level, LevelSpec};
use gridprobe::trajectory::{LevelLibrary, Trajectory};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn level(name: &str) -> LevelSpec {
    let path = fixtures().join("levels").join(format!("{name}.txt"));
    parse_level(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

pub fn level_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(fixtures().join("levels"))
        .unwrap()
        .map(|e| {
            e.unwrap()
                .path()
                .file_stem()
                .unwrap()
                .to_string_lossy()
                .into_owned()
        })
        .collect();
    names.sort();
    names
}

/// Every fixture trajectory with its id and a level library rooted at it.
pub fn trajectories() -> Vec<(String, Trajectory, LevelLibrary)> {
    let dir = fixtures().join("trajectories");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let id = p.file_stem().unwrap().to_string_lossy().into_owned();
            let t = Trajectory::load(&p).unwrap();
            (id, t, LevelLibrary::for_trajectory(&p))
        })
        .collect()
}

pub fn trajectory(id: &str) -> (Trajectory, LevelLibrary) {
    let p = fixtures().join("trajectories").join(format!("{id}.json"));
    (
        Trajectory::load(&p).unwrap(),
        LevelLibrary::for_trajectory(&p),
    )
}

use gridprobe::eval::{EvalRecord, Protocol};
use gridprobe::probe::{Category, Verdict};
use gridprobe::view::Serializer;

/// A graded record with neutral defaults; tests override what they vary.
pub fn record(
    protocol: Protocol,
    trajectory: &str,
    seed: u64,
    probe: &str,
    verdict: Verdict,
) -> EvalRecord {
    EvalRecord {
        schema_version: 1,
        run_id: "synthetic".into(),
        model: "model-a".into(),
        trajectory_id: trajectory.into(),
        seed,
        probe_id: probe.into(),
        protocol,
        serializer: Serializer::Symbolic,
        category: Category::P,
        probe_type: "count".into(),
        level: "level".into(),
        segment: 0,
        step: 0,
        quintile: 1,
        question: String::new(),
        ground_truth: "1".into(),
        model_output: Some(String::new()),
        verdict,
        failure: None,
        attempts: 1,
        latency_ms: 0,
        prompt_version: "1".into(),
    }
}

/// Paired logs over `episodes` episodes of `per` probes each, with exactly
/// `nav` and `ctrl` hallucinations in total under each protocol.
pub fn paired_logs(episodes: usize, per: usize, nav: usize, ctrl: usize) -> Vec<EvalRecord> {
    let mut out = Vec::new();
    for (protocol, bad) in [(Protocol::InNav, nav), (Protocol::CtrlStatic, ctrl)] {
        for i in 0..episodes * per {
            let (ep, p) = (i % episodes, i / episodes);
            let v = if i < bad {
                Verdict::Hallucinated
            } else {
                Verdict::Correct
            };
            out.push(record(
                protocol,
                &format!("traj{ep}"),
                ep as u64,
                &format!("p{p}"),
                v,
            ));
        }
    }
    out
}

/// Records whose per-quintile rate is `base + slope * (q - 1)` percent.
pub fn planted(base: f64, slope: f64, per: usize) -> Vec<EvalRecord> {
    let mut out = Vec::new();
    for q in 1..=5u8 {
        let bad = ((base + slope * f64::from(q - 1)) / 100.0 * per as f64).round() as usize;
        for i in 0..per {
            let v = if i < bad {
                Verdict::Hallucinated
            } else {
                Verdict::Correct
            };
            let mut r = record(Protocol::CtrlStatic, "t", 1, &format!("q{q}-{i}"), v);
            r.quintile = q;
            out.push(r);
        }
    }
    out
}

/// Pooling every probe favours grid; weighting each episode equally
/// favours symbolic. Grid: episodes at 1/1 and 0/9 (mean 0.5, pooled 0.1).
/// Symbolic: 3/10 and 3/10 (mean 0.3, pooled 0.3).
pub fn simpson_records() -> Vec<EvalRecord> {
    let mut out = Vec::new();
    let mut add = |ser: Serializer, ep: u64, bad: usize, total: usize| {
        for i in 0..total {
            let v = if i < bad {
                Verdict::Hallucinated
            } else {
                Verdict::Correct
            };
            let mut r = record(
                Protocol::CtrlStatic,
                &format!("e{ep}"),
                ep,
                &format!("p{i}"),
                v,
            );
            r.serializer = ser;
            out.push(r);
        }
    };
    add(Serializer::Grid, 1, 1, 1);
    add(Serializer::Grid, 2, 0, 9);
    add(Serializer::Symbolic, 1, 3, 10);
    add(Serializer::Symbolic, 2, 3, 10);
    out
}
