//! Config resolution: built-in defaults, then the TOML file (from `--config`
//! or `$PRELOAD_CONFIG`), then command-line flags, later layers winning.
//!
//! The file mirrors the library's knobs section by section; every key is
//! optional:
//!
//! ```toml
//! [weights]
//! quality = 1.0
//! variation = 1.0
//! stall = 3.0
//! bandwidth = 0.3
//!
//! [planner]
//! horizon_chunks = 8
//! simulations = 10000
//! exploration = 1.0
//! rollout = "greedy"        # or "random"
//! seed = 0
//! # time_budget_ms = 50
//!
//! [sim]
//! replan_interval_ms = 500
//! startup_delay_ms = 200
//! fixed_next_k = 3
//! bitrate_rule = "highest_fitting"  # or "lowest"
//! master_seed = 0
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use preload_core::planner::{BitrateRule, RolloutPolicy};
use preload_core::sim::SimConfig;

use crate::{CliError, PlannerFlags, SimFlags};

pub const CONFIG_ENV_VAR: &str = "PRELOAD_CONFIG";

#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    weights: WeightsSection,
    planner: PlannerSection,
    sim: SimSection,
}

#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct WeightsSection {
    quality: Option<f64>,
    variation: Option<f64>,
    stall: Option<f64>,
    bandwidth: Option<f64>,
}

#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PlannerSection {
    horizon_chunks: Option<usize>,
    simulations: Option<u32>,
    exploration: Option<f64>,
    rollout: Option<RolloutPolicy>,
    seed: Option<u64>,
    time_budget_ms: Option<u64>,
}

#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimSection {
    replan_interval_ms: Option<u64>,
    startup_delay_ms: Option<u64>,
    fixed_next_k: Option<usize>,
    bitrate_rule: Option<BitrateRule>,
    master_seed: Option<u64>,
}

/// Everything a command needs to run, fully resolved. The planner config is
/// carried inside the sim config so a session plans and scores with the same
/// weights.
pub struct Resolved {
    pub sim: SimConfig,
}

fn load_file(explicit: Option<&Path>) -> Result<FileConfig, CliError> {
    let path: Option<PathBuf> = match explicit {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from),
    };
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::input(format!("config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::input(format!("config {}: {e}", path.display())))
}

macro_rules! take {
    ($dst:expr, $($src:expr),+ $(,)?) => {
        $(if let Some(v) = $src { $dst = v.into(); })+
    };
}

/// Resolves the effective configuration for one command invocation.
pub fn resolve(
    config_path: Option<&Path>,
    planner_flags: &PlannerFlags,
    sim_flags: &SimFlags,
) -> Result<Resolved, CliError> {
    let file = load_file(config_path)?;
    let mut sim = SimConfig::default();

    take!(sim.planner.weights.quality, file.weights.quality, planner_flags.w_quality);
    take!(sim.planner.weights.variation, file.weights.variation, planner_flags.w_variation);
    take!(sim.planner.weights.stall, file.weights.stall, planner_flags.w_stall);
    take!(sim.planner.weights.bandwidth, file.weights.bandwidth, planner_flags.w_bandwidth);

    take!(sim.planner.horizon_chunks, file.planner.horizon_chunks, planner_flags.horizon);
    take!(sim.planner.simulations, file.planner.simulations, planner_flags.simulations);
    take!(sim.planner.exploration, file.planner.exploration, planner_flags.exploration);
    take!(sim.planner.rollout, file.planner.rollout, planner_flags.rollout);
    take!(sim.planner.seed, file.planner.seed, planner_flags.seed);
    if let Some(ms) = file.planner.time_budget_ms {
        sim.planner.time_budget_ms = Some(ms);
    }
    if let Some(ms) = planner_flags.time_budget_ms {
        sim.planner.time_budget_ms = Some(ms);
    }

    take!(sim.replan_interval_ms, file.sim.replan_interval_ms, sim_flags.replan_ms);
    take!(sim.startup_delay_ms, file.sim.startup_delay_ms, sim_flags.startup_ms);
    take!(sim.fixed_next_k, file.sim.fixed_next_k, sim_flags.next_k);
    take!(sim.bitrate_rule, file.sim.bitrate_rule, sim_flags.bitrate_rule);
    take!(sim.master_seed, file.sim.master_seed, sim_flags.master_seed);

    sim.planner
        .weights
        .validate()
        .map_err(|e| CliError::input(e.to_string()))?;
    Ok(Resolved { sim })
}
