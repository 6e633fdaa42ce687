use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "gridprobe",
    version,
    about = "Gridworld simulator with hallucination labels by construction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Level files: check, canonicalize, render.
    #[command(subcommand)]
    Level(LevelCmd),
    /// Trajectory files: check and replay.
    #[command(subcommand)]
    Trajectory(TrajectoryCmd),
    /// Ask models the probes of a trajectory and summarize results.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Run the editor and recorder HTTP API on localhost.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum LevelCmd {
    /// Parse and check every constraint; exit 1 if any file fails.
    Validate { files: Vec<PathBuf> },
    /// Print the canonical form of a level.
    Emit { file: PathBuf },
    /// Print the initial observation of a level.
    Render {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SerializerArg::Grid)]
        serializer: SerializerArg,
        /// Print the whole map instead of the agent's view.
        #[arg(long)]
        map: bool,
    },
}

#[derive(Debug, Args)]
pub struct LevelRoots {
    /// Extra directories to resolve `level_file` names against. The
    /// trajectory's directory and its parent are always searched.
    #[arg(long = "levels")]
    pub levels: Vec<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum TrajectoryCmd {
    /// Structural checks and level resolution.
    Validate {
        files: Vec<PathBuf>,
        #[command(flatten)]
        roots: LevelRoots,
    },
    /// Replay deterministically, re-check every probe truth and print the
    /// final state fingerprint. Exit 1 when a stored truth drifted.
    Replay {
        file: PathBuf,
        #[command(flatten)]
        roots: LevelRoots,
        /// Print the observation at every step in this format.
        #[arg(long, value_enum)]
        show: Option<SerializerArg>,
    },
}

#[derive(Debug, Subcommand)]
pub enum EvalCmd {
    Run(RunArgs),
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long = "trajectory", required = true)]
    pub trajectories: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub serializer: SerializerArg,
    #[arg(long, value_enum)]
    pub protocol: ProtocolArg,
    /// Endpoint model id, or a scripted model: `oracle`, `stale:<lag>`,
    /// `fixed:<reply>`.
    #[arg(long)]
    pub model: String,
    /// Results file; records are appended as JSON lines.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub roots: LevelRoots,
    #[arg(long, default_value = "run")]
    pub run_id: String,
    #[arg(long, default_value_t = 4)]
    pub parallelism: usize,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 256)]
    pub max_answer_tokens: u32,
    #[arg(long, default_value_t = 16_384)]
    pub thinking_budget: u32,
    #[arg(long)]
    pub reasoning_effort: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub max_attempts: u32,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// One or more results files.
    #[arg(long = "results", required = true)]
    pub results: Vec<PathBuf>,
    /// Comma-separated keys: model, protocol, serializer, category,
    /// probe_type, level, quintile.
    #[arg(long, default_value = "")]
    pub group_by: String,
    /// Also report the in-dialogue effect (in-dialogue minus isolated
    /// rate) with a bootstrap interval.
    #[arg(long)]
    pub naveff: bool,
    /// Also report the slope of the rate over trajectory-depth quintiles.
    #[arg(long)]
    pub depth: bool,
    /// Also report (level, serializer) pairs hard for at least 5 models.
    #[arg(long)]
    pub hard_subset: bool,
    /// Also compare serializers per (model, level), episodes weighted
    /// equally.
    #[arg(long)]
    pub serializers: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Port on 127.0.0.1. Defaults to GRIDPROBE_EDITOR_PORT, then 5050.
    #[arg(long)]
    pub port: Option<u16>,
    /// Directory `level_file` names are resolved against.
    #[arg(long, default_value = ".")]
    pub levels: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SerializerArg {
    Symbolic,
    Grid,
    Memory,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ProtocolArg {
    #[value(alias = "ctrl-static")]
    Ctrlstatic,
    #[value(alias = "in-nav")]
    Innav,
}
