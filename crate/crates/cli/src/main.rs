mod args;

use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use args::{
    Cli, Command, EvalCmd, LevelCmd, LevelRoots, ProtocolArg, ReportArgs, RunArgs, SerializerArg,
    TrajectoryCmd,
};
use clap::Parser;
use gridprobe::eval::metrics::{
    depth_slope, hallucination_rate, hard_subset, nav_effect, rate_table, serializer_comparison,
    GroupKey, HardSubsetRule, Tally,
};
use gridprobe::eval::{
    append_jsonl, read_jsonl, run_ctrl_static, run_in_nav, DecodingConfig, EvalRecord,
    FixedAdapter, HttpAdapter, ModelAdapter, OracleAdapter, Protocol, RetryPolicy, RunConfig,
    StaleAdapter,
};
use gridprobe::level::{emit_level, init_world, parse_level};
use gridprobe::probe::ProbeRegistry;
use gridprobe::trajectory::{replay, LevelLibrary, Trajectory};
use gridprobe::view::{observe, world_map, Serializer};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Level(cmd) => level(cmd),
        Command::Trajectory(cmd) => trajectory(cmd),
        Command::Eval(EvalCmd::Run(a)) => eval_run(a),
        Command::Eval(EvalCmd::Report(a)) => eval_report(a),
        Command::Serve(a) => {
            let port = match a.port {
                Some(p) => p,
                None => gridprobe_editor::port_from_env().map_err(anyhow::Error::msg)?,
            };
            let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, port));
            let state = gridprobe_editor::AppState::new(
                LevelLibrary::new([a.levels]),
                Arc::new(ProbeRegistry::with_builtins()),
            );
            eprintln!("editor API on http://{addr}");
            gridprobe_editor::serve_blocking(addr, state)
                .with_context(|| format!("serving on {addr}"))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn serializer(s: SerializerArg) -> Serializer {
    match s {
        SerializerArg::Symbolic => Serializer::Symbolic,
        SerializerArg::Grid => Serializer::Grid,
        SerializerArg::Memory => Serializer::Memory,
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn level(cmd: LevelCmd) -> Result<ExitCode> {
    match cmd {
        LevelCmd::Validate { files } => {
            if files.is_empty() {
                bail!("no level files given");
            }
            let mut failed = 0;
            for f in &files {
                let checked = parse_level(&read(f)?)
                    .map_err(|e| e.to_string())
                    .and_then(|spec| spec.validate().map(|_| spec).map_err(|e| e.to_string()));
                match checked {
                    Ok(spec) => println!(
                        "ok    {} ({}, {}x{})",
                        f.display(),
                        spec.id,
                        spec.width(),
                        spec.height()
                    ),
                    Err(e) => {
                        failed += 1;
                        println!("FAIL  {}: {e}", f.display());
                    }
                }
            }
            Ok(if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        LevelCmd::Emit { file } => {
            let spec = parse_level(&read(&file)?).with_context(|| file.display().to_string())?;
            print!("{}", emit_level(&spec)?);
            Ok(ExitCode::SUCCESS)
        }
        LevelCmd::Render {
            file,
            seed,
            serializer: s,
            map,
        } => {
            let spec = parse_level(&read(&file)?).with_context(|| file.display().to_string())?;
            let world = init_world(&spec, seed)?;
            if map {
                for row in world_map(&world) {
                    println!("{row}");
                }
            } else {
                let obs = observe(&world, world.view_config());
                println!("{}", serializer(s).render(&[obs])?);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn library(file: &Path, roots: &LevelRoots) -> LevelLibrary {
    let mut dirs: Vec<PathBuf> = roots.levels.clone();
    if let Some(dir) = file.parent() {
        dirs.push(dir.to_path_buf());
        if let Some(up) = dir.parent() {
            dirs.push(up.to_path_buf());
        }
    }
    dirs.push(PathBuf::from("."));
    LevelLibrary::new(dirs)
}

fn trajectory(cmd: TrajectoryCmd) -> Result<ExitCode> {
    let reg = ProbeRegistry::with_builtins();
    match cmd {
        TrajectoryCmd::Validate { files, roots } => {
            if files.is_empty() {
                bail!("no trajectory files given");
            }
            let mut failed = 0;
            for f in &files {
                let checked = Trajectory::load(f)
                    .and_then(|t| t.validate(&library(f, &roots), &reg).map(|_| t));
                match checked {
                    Ok(t) => println!(
                        "ok    {} ({} segments, {} actions, {} probes)",
                        f.display(),
                        t.segments.len(),
                        t.action_count(),
                        t.probes.len()
                    ),
                    Err(e) => {
                        failed += 1;
                        println!("FAIL  {}: {e}", f.display());
                    }
                }
            }
            Ok(if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        TrajectoryCmd::Replay { file, roots, show } => {
            let t = Trajectory::load(&file)?;
            let lib = library(&file, &roots);
            let mut drifted = 0;
            let mut shown = Ok(());
            let last = replay(&t, &lib, &reg, |s| {
                if let Some(fmt) = show {
                    match serializer(fmt).render(s.history) {
                        Ok(text) => println!("--- segment {} step {}\n{text}", s.segment, s.step),
                        Err(e) => shown = Err(e),
                    }
                }
                for d in s.due {
                    let stored = &t.probes[d.index].ground_truth;
                    let mark = if d.drifted {
                        drifted += 1;
                        "DRIFT"
                    } else {
                        "ok"
                    };
                    println!(
                        "{mark:5} probe {} segment {} step {}: {} -> {} (stored {stored})",
                        d.index,
                        s.segment,
                        s.step,
                        d.probe.question,
                        d.truth.render()
                    );
                }
            })?;
            shown?;
            println!(
                "final {} at step {} digest {}",
                last.level_id(),
                last.step_count(),
                last.digest()
            );
            Ok(if drifted == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn adapter(model: &str) -> Result<Box<dyn ModelAdapter>> {
    Ok(match model.split_once(':') {
        _ if model == "oracle" => Box::new(OracleAdapter),
        Some(("stale", lag)) => Box::new(StaleAdapter::new(
            lag.parse().context("stale:<lag> needs a number")?,
        )),
        Some(("fixed", reply)) => Box::new(FixedAdapter {
            reply: reply.to_string(),
        }),
        _ => Box::new(HttpAdapter::from_env(model)),
    })
}

fn eval_run(a: RunArgs) -> Result<ExitCode> {
    let reg = ProbeRegistry::with_builtins();
    let model = adapter(&a.model)?;
    let protocol = match a.protocol {
        ProtocolArg::Ctrlstatic => Protocol::CtrlStatic,
        ProtocolArg::Innav => Protocol::InNav,
    };
    let mut total = Tally::default();
    for file in &a.trajectories {
        let t = Trajectory::load(file)?;
        let id = file
            .file_stem()
            .map_or_else(|| "trajectory".into(), |s| s.to_string_lossy().into_owned());
        let mut cfg = RunConfig::new(id.clone(), serializer(a.serializer));
        cfg.run_id = a.run_id.clone();
        cfg.parallelism = a.parallelism;
        cfg.decoding = DecodingConfig {
            temperature: a.temperature,
            max_answer_tokens: a.max_answer_tokens,
            thinking_budget: a.thinking_budget,
            reasoning_effort: a.reasoning_effort.clone(),
        };
        cfg.retry = RetryPolicy {
            max_attempts: a.max_attempts.max(1),
            ..RetryPolicy::default()
        };
        let lib = library(file, &a.roots);
        let records = match protocol {
            Protocol::CtrlStatic => run_ctrl_static(&t, &lib, &reg, &cfg, model.as_ref()),
            Protocol::InNav => run_in_nav(&t, &lib, &reg, &cfg, model.as_ref()),
        }
        .with_context(|| file.display().to_string())?;
        append_jsonl(&a.out, &records)?;
        let tally = Tally::of(&records);
        total.merge(&tally);
        println!("{id}: {}", summary(&tally));
    }
    println!("total: {}", summary(&total));
    Ok(ExitCode::SUCCESS)
}

fn summary(t: &Tally) -> String {
    let rate = t
        .rate()
        .map_or_else(|| "n/a".into(), |r| format!("{:.1}%", 100.0 * r));
    format!(
        "{} graded, {} hallucinated ({rate}), {} unparseable, {} transport failures",
        t.graded(),
        t.hallucinated,
        t.unparseable,
        t.transport_failure
    )
}

fn eval_report(a: ReportArgs) -> Result<ExitCode> {
    let mut records: Vec<EvalRecord> = Vec::new();
    for f in &a.results {
        records.extend(read_jsonl(f)?);
    }
    let keys = GroupKey::parse_list(&a.group_by)?;
    let rows = hallucination_rate(&records, &keys);
    let mut json = serde_json::Map::new();
    if a.json {
        json.insert("rates".into(), serde_json::to_value(&rows)?);
    } else {
        let header: Vec<&str> = keys.iter().map(|k| k.as_str()).collect();
        println!(
            "{:<40} {:>8} {:>8} {:>7} {:>7}",
            if header.is_empty() {
                "all".into()
            } else {
                header.join(",")
            },
            "graded",
            "halluc",
            "unparse",
            "rate%"
        );
        for r in &rows {
            let key = if r.key.is_empty() {
                "all".into()
            } else {
                r.key.join(",")
            };
            println!(
                "{key:<40} {:>8} {:>8} {:>7} {:>7.1}",
                r.tally.graded(),
                r.tally.hallucinated,
                r.tally.unparseable,
                100.0 * r.rate
            );
        }
    }
    if a.naveff {
        let effects = nav_effect(&records, &keys)?;
        if a.json {
            json.insert("naveff".into(), serde_json::to_value(&effects)?);
        } else {
            println!("\nin-dialogue effect (pp, 95% bootstrap interval)");
            for e in &effects {
                let key = if e.key.is_empty() {
                    "all".into()
                } else {
                    e.key.join(",")
                };
                println!(
                    "{key:<40} innav {:>5.1} ctrlstatic {:>5.1} effect {:>+6.1} [{:+.1}, {:+.1}] over {} episodes{}",
                    e.in_nav,
                    e.ctrl_static,
                    e.naveff,
                    e.ci_low,
                    e.ci_high,
                    e.episodes,
                    if e.significant() { " *" } else { "" }
                );
            }
        }
    }
    if a.depth {
        let slope = depth_slope(&records)?;
        if a.json {
            json.insert("depth_slope".into(), slope.into());
        } else {
            println!("\ndepth slope: {slope:+.2} pp per quintile");
        }
    }
    if a.hard_subset {
        let hard = hard_subset(&rate_table(&records), HardSubsetRule::default())?;
        if a.json {
            json.insert("hard_subset".into(), serde_json::to_value(&hard)?);
        } else {
            println!("\nhard subset ({} pairs)", hard.len());
            for (level, ser) in &hard {
                println!("{level} {ser}");
            }
        }
    }
    if a.serializers {
        let cmp = serializer_comparison(&records)?;
        if a.json {
            json.insert("serializers".into(), serde_json::to_value(&cmp)?);
        } else {
            println!("\nserializer comparison");
            for c in &cmp {
                let rates: Vec<String> = c
                    .rates
                    .iter()
                    .map(|(s, r)| format!("{} {:.1}%", s.as_str(), 100.0 * r))
                    .collect();
                println!(
                    "{} {}: {} -> {}{}",
                    c.model,
                    c.level,
                    rates.join(", "),
                    c.winner.as_str(),
                    if c.tie { " (tie)" } else { "" }
                );
            }
        }
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&json)?);
    }
    Ok(ExitCode::SUCCESS)
}
