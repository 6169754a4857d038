//! `preload` — command-line harness around the planning and simulation
//! library: plan single instances, replay sessions, compare strategies,
//! sweep chunk sizes, and generate synthetic fixtures.
//!
//! Exit codes, for scripting: 0 success (including `--help`/`--version`),
//! 1 usage or input error, 2 planning was infeasible and the report shows
//! the safe fallback plan instead. Equal inputs and seeds produce
//! byte-identical reports.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use preload_core::exec::ExecMode;
use preload_core::model::StrategyId;
use preload_core::planner::{BitrateRule, RolloutPolicy};

#[derive(Parser)]
#[command(name = "preload", version, about = "Plan and simulate short-video preloading")]
struct Cli {
    /// TOML file with [weights], [planner], and [sim] defaults; flags
    /// override it. Falls back to $PRELOAD_CONFIG when unset.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

/// Planner knobs; unset flags fall back to the config file, then defaults.
#[derive(Args, Clone, Copy, Default)]
struct PlannerFlags {
    /// Unacquired chunks ahead of the playhead to plan over.
    #[arg(long)]
    horizon: Option<usize>,
    /// Tree-search iteration budget.
    #[arg(long)]
    simulations: Option<u32>,
    /// UCT exploration constant.
    #[arg(long)]
    exploration: Option<f64>,
    /// Rollout policy of the tree search.
    #[arg(long, value_enum)]
    rollout: Option<RolloutArg>,
    /// Seed for the planner's tie-breaking.
    #[arg(long)]
    seed: Option<u64>,
    /// Optional wall-clock cap per planning call (trades reproducibility).
    #[arg(long)]
    time_budget_ms: Option<u64>,
    /// Quality reward weight.
    #[arg(long)]
    w_quality: Option<f64>,
    /// Quality-variation penalty weight.
    #[arg(long)]
    w_variation: Option<f64>,
    /// Stall penalty weight, per second.
    #[arg(long)]
    w_stall: Option<f64>,
    /// Bandwidth penalty weight, per megabit.
    #[arg(long)]
    w_bandwidth: Option<f64>,
}

/// Session-simulator knobs.
#[derive(Args, Clone, Copy, Default)]
struct SimFlags {
    /// Replan at least this often, ms.
    #[arg(long)]
    replan_ms: Option<u64>,
    /// Startup allowance at session start and after swipes, ms.
    #[arg(long)]
    startup_ms: Option<u64>,
    /// Lookahead window of the fixed-next-k strategy.
    #[arg(long)]
    next_k: Option<usize>,
    /// Bitrate rule of the fixed-next-k strategy.
    #[arg(long, value_enum)]
    bitrate_rule: Option<BitrateRuleArg>,
    /// Root seed for per-session randomness.
    #[arg(long)]
    master_seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one instance from a fresh session start and print the chosen
    /// plan with its predicted schedule.
    Plan {
        /// Feed manifest (JSON).
        #[arg(long, value_name = "PATH")]
        manifest: PathBuf,
        /// Bandwidth trace (CSV: timestamp_ms,throughput_kbps).
        #[arg(long, value_name = "PATH")]
        bandwidth: PathBuf,
        #[arg(long, value_enum, default_value_t = PlanStrategyArg::Mcts)]
        strategy: PlanStrategyArg,
        /// Cap on the plan space the brute-force modes will enumerate.
        #[arg(long)]
        enumeration_limit: Option<u128>,
        #[command(flatten)]
        planner: PlannerFlags,
        #[command(flatten)]
        sim: SimFlags,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
        /// Write the report here instead of stdout.
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Replay viewer sessions against one strategy and report per-session
    /// metrics.
    Simulate {
        #[arg(long, value_name = "PATH")]
        manifest: PathBuf,
        #[arg(long, value_name = "PATH")]
        bandwidth: PathBuf,
        /// Session traces (CSV: trace_id,video_id,watch_ms).
        #[arg(long, value_name = "PATH")]
        sessions: PathBuf,
        #[arg(long, value_enum, default_value_t = StrategyArg::Mcts)]
        strategy: StrategyArg,
        /// Run only the trace with this id.
        #[arg(long)]
        trace_id: Option<String>,
        #[command(flatten)]
        planner: PlannerFlags,
        #[command(flatten)]
        sim: SimFlags,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Run several strategies over the same sessions and tabulate means and
    /// ratios against the first strategy.
    Compare {
        #[arg(long, value_name = "PATH")]
        manifest: PathBuf,
        #[arg(long, value_name = "PATH")]
        bandwidth: PathBuf,
        #[arg(long, value_name = "PATH")]
        sessions: PathBuf,
        /// Comma-separated strategies; the first is the ratio baseline.
        #[arg(long, value_enum, value_delimiter = ',', required = true)]
        strategies: Vec<StrategyArg>,
        #[command(flatten)]
        planner: PlannerFlags,
        #[command(flatten)]
        sim: SimFlags,
        #[arg(long, value_enum, default_value_t = ExecArg::Parallel)]
        exec: ExecArg,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Replay the same sessions with every chunk's payload scaled by each
    /// factor and report mean stall and byte waste per scale.
    Sweep {
        #[arg(long, value_name = "PATH")]
        manifest: PathBuf,
        #[arg(long, value_name = "PATH")]
        bandwidth: PathBuf,
        #[arg(long, value_name = "PATH")]
        sessions: PathBuf,
        #[arg(long, value_enum, default_value_t = StrategyArg::FixedNextK)]
        strategy: StrategyArg,
        /// Comma-separated payload scale factors.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.7, 0.5, 0.3])]
        scales: Vec<f64>,
        #[command(flatten)]
        planner: PlannerFlags,
        #[command(flatten)]
        sim: SimFlags,
        #[arg(long, value_enum, default_value_t = ExecArg::Parallel)]
        exec: ExecArg,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic fixture set: manifest.json, bandwidth.csv, and
    /// sessions.csv. Equal flags and seed give byte-identical files.
    Gen {
        /// Directory the three files are written into (created if missing).
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 5)]
        videos: u32,
        #[arg(long, default_value_t = 8)]
        chunks_per_video: u32,
        #[arg(long, default_value_t = 1000)]
        playout_ms: u64,
        /// Pixel rungs only; omit the generated variant.
        #[arg(long)]
        no_prompt: bool,
        /// Uniform per-variant size jitter (0.1 = ±10%).
        #[arg(long, default_value_t = 0.0)]
        size_jitter: f64,
        /// Bandwidth shape: constant:KBPS, step:LOW,HIGH,PERIOD_MS,
        /// sawtooth:MIN,MAX,PERIOD_MS,STEP_MS, or
        /// randomwalk:START,MIN,MAX,STEP_MS,MAX_DELTA_KBPS.
        #[arg(long, default_value = "constant:1000")]
        pattern: String,
        /// Length of the bandwidth trace, ms.
        #[arg(long, default_value_t = 120_000)]
        duration_ms: u64,
        #[arg(long, default_value_t = 20)]
        sessions: u32,
        /// Probability a viewer watches a video to the end.
        #[arg(long, default_value_t = 0.35)]
        full_watch: f64,
        /// Probability the session continues past each video.
        #[arg(long, default_value_t = 0.85)]
        continue_prob: f64,
        /// Swipes never happen before this much content has played, ms.
        #[arg(long, default_value_t = 500)]
        min_watch_ms: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlanStrategyArg {
    /// UCT tree search.
    Mcts,
    /// Exhaustive enumeration with admissibility pruning (guarded).
    Bruteforce,
    /// Exhaustive enumeration without pruning (guarded).
    BruteforceExhaustive,
    /// Greedy in-order baseline.
    Sequential,
    /// Fixed next-k pixel-only baseline.
    FixedNextK,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Mcts,
    Sequential,
    FixedNextK,
    /// Mcts over the feed with generated variants stripped.
    HybridOff,
}

impl From<StrategyArg> for StrategyId {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Mcts => StrategyId::Mcts,
            StrategyArg::Sequential => StrategyId::Sequential,
            StrategyArg::FixedNextK => StrategyId::FixedNextK,
            StrategyArg::HybridOff => StrategyId::HybridOff,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    /// Human-readable (plan only).
    Text,
    Csv,
    /// Aggregate JSON object.
    JsonSummary,
    /// The simulator's processed-event log (simulate, single trace).
    EventLog,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExecArg {
    Sequential,
    Parallel,
}

impl From<ExecArg> for ExecMode {
    fn from(e: ExecArg) -> Self {
        match e {
            ExecArg::Sequential => ExecMode::Sequential,
            ExecArg::Parallel => ExecMode::Parallel,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RolloutArg {
    Greedy,
    Random,
}

impl From<RolloutArg> for RolloutPolicy {
    fn from(r: RolloutArg) -> Self {
        match r {
            RolloutArg::Greedy => RolloutPolicy::Greedy,
            RolloutArg::Random => RolloutPolicy::Random,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BitrateRuleArg {
    /// Highest rung whose download keeps up with playback.
    HighestFitting,
    /// Always the lowest rung.
    Lowest,
}

impl From<BitrateRuleArg> for BitrateRule {
    fn from(r: BitrateRuleArg) -> Self {
        match r {
            BitrateRuleArg::HighestFitting => BitrateRule::HighestFitting,
            BitrateRuleArg::Lowest => BitrateRule::Lowest,
        }
    }
}

/// An error with the exit code it maps to. Everything user-facing funnels
/// through here so codes stay consistent.
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }
}

impl From<preload_core::traceio::TraceIoError> for CliError {
    fn from(e: preload_core::traceio::TraceIoError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<preload_core::planner::PlanError> for CliError {
    fn from(e: preload_core::planner::PlanError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<preload_core::sim::SimError> for CliError {
    fn from(e: preload_core::sim::SimError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<preload_core::timeline::TimelineError> for CliError {
    fn from(e: preload_core::timeline::TimelineError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let asked = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if asked { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
