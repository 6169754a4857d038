//! Fan-out over strategy × trace grids, and the chunk-size sweep.
//!
//! Every session's RNG seed is derived from (master seed, trace id,
//! strategy), so results are independent of execution order and identical
//! under [`ExecMode::Sequential`] and [`ExecMode::Parallel`].

use serde::{Deserialize, Serialize};

use crate::exec::{map_items, ExecMode};
use crate::model::{BandwidthModel, DeviceModel, Feed, SessionTrace, StrategyId};

use super::engine::run_session;
use super::{SessionMetrics, SimConfig, SimError};

/// splitmix64 finalizer: one cheap, well-mixed step from seed to seed.
pub(super) fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a, folded through the mixer so short ids spread over all 64 bits.
fn hash_str(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
    }
    mix(h)
}

fn strategy_tag(strategy: StrategyId) -> u64 {
    match strategy {
        StrategyId::Mcts => 1,
        StrategyId::Sequential => 2,
        StrategyId::FixedNextK => 3,
        StrategyId::HybridOff => 4,
    }
}

/// The seed a session runs under. A function of the master seed, the trace
/// id, and the strategy — never of batch position — so adding a strategy to
/// a comparison or reordering traces does not perturb existing results.
pub fn derive_seed(master_seed: u64, trace_id: &str, strategy: StrategyId) -> u64 {
    mix(mix(master_seed ^ hash_str(trace_id)) ^ strategy_tag(strategy))
}

/// Session means for one strategy, or those means as ratios to a baseline.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub stall_ms: f64,
    pub wasted_bytes: f64,
    pub downloaded_bytes: f64,
    pub mean_quality: f64,
    pub quality_switches: f64,
    pub qoe: f64,
}

/// One strategy's results over the trace set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrategyReport {
    pub strategy: StrategyId,
    pub mean: AggregateMetrics,
    /// Means normalized by the first strategy's (1.0 on the baseline row).
    pub ratio: AggregateMetrics,
    /// Per-session rows, in trace order.
    pub sessions: Vec<SessionMetrics>,
}

/// Side-by-side strategy comparison over a common trace set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<StrategyReport>,
}

/// Mean stall and byte totals at one chunk-size scale.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub scale: f64,
    pub mean_stall_ms: f64,
    pub mean_wasted_bytes: f64,
    pub mean_downloaded_bytes: f64,
}

/// Runs every strategy over every trace and tabulates means and ratios
/// against the first strategy given.
pub fn compare_strategies(
    feed: &Feed,
    device: &DeviceModel,
    bw: &BandwidthModel,
    traces: &[SessionTrace],
    strategies: &[StrategyId],
    cfg: &SimConfig,
    mode: ExecMode,
) -> Result<ComparisonReport, SimError> {
    if strategies.is_empty() {
        return Err(SimError::Config("no strategies to compare".into()));
    }
    if traces.is_empty() {
        return Err(SimError::Config("no traces to run".into()));
    }
    let jobs: Vec<(StrategyId, &SessionTrace)> = strategies
        .iter()
        .flat_map(|&s| traces.iter().map(move |t| (s, t)))
        .collect();
    let results = map_items(mode, jobs, |(strategy, trace)| {
        run_session(feed, device, bw, trace, strategy, cfg).map(|(metrics, _)| metrics)
    });

    let mut rows = Vec::with_capacity(strategies.len());
    let mut results = results.into_iter();
    for &strategy in strategies {
        let sessions: Vec<SessionMetrics> =
            results.by_ref().take(traces.len()).collect::<Result<_, _>>()?;
        let mean = aggregate(&sessions);
        rows.push(StrategyReport { strategy, mean, ratio: AggregateMetrics::default(), sessions });
    }
    let base = rows[0].mean;
    for row in &mut rows {
        row.ratio = AggregateMetrics {
            stall_ms: ratio(row.mean.stall_ms, base.stall_ms),
            wasted_bytes: ratio(row.mean.wasted_bytes, base.wasted_bytes),
            downloaded_bytes: ratio(row.mean.downloaded_bytes, base.downloaded_bytes),
            mean_quality: ratio(row.mean.mean_quality, base.mean_quality),
            quality_switches: ratio(row.mean.quality_switches, base.quality_switches),
            qoe: ratio(row.mean.qoe, base.qoe),
        };
    }
    Ok(ComparisonReport { rows })
}

/// Replays the same sessions with every variant's payload scaled by each
/// factor, holding qualities and session seeds fixed: what a smaller (or
/// fatter) representation does to stall and byte waste, all else equal.
pub fn chunk_size_sweep(
    feed: &Feed,
    device: &DeviceModel,
    bw: &BandwidthModel,
    traces: &[SessionTrace],
    strategy: StrategyId,
    scales: &[f64],
    cfg: &SimConfig,
    mode: ExecMode,
) -> Result<Vec<SweepRow>, SimError> {
    if traces.is_empty() {
        return Err(SimError::Config("no traces to run".into()));
    }
    for &s in scales {
        if !s.is_finite() || s <= 0.0 {
            return Err(SimError::Config(format!("scale {s} (must be finite and > 0)")));
        }
    }
    let feeds: Vec<Feed> = scales.iter().map(|&s| feed.scaled_sizes(s)).collect();
    let jobs: Vec<(usize, &SessionTrace)> = (0..scales.len())
        .flat_map(|i| traces.iter().map(move |t| (i, t)))
        .collect();
    let results = map_items(mode, jobs, |(i, trace)| {
        run_session(&feeds[i], device, bw, trace, strategy, cfg).map(|(metrics, _)| metrics)
    });

    let mut rows = Vec::with_capacity(scales.len());
    let mut results = results.into_iter();
    for &scale in scales {
        let sessions: Vec<SessionMetrics> =
            results.by_ref().take(traces.len()).collect::<Result<_, _>>()?;
        let mean = aggregate(&sessions);
        rows.push(SweepRow {
            scale,
            mean_stall_ms: mean.stall_ms,
            mean_wasted_bytes: mean.wasted_bytes,
            mean_downloaded_bytes: mean.downloaded_bytes,
        });
    }
    Ok(rows)
}

fn aggregate(sessions: &[SessionMetrics]) -> AggregateMetrics {
    let n = sessions.len() as f64;
    let sum = |f: fn(&SessionMetrics) -> f64| sessions.iter().map(f).sum::<f64>() / n;
    AggregateMetrics {
        stall_ms: sum(|s| s.total_stall_ms as f64),
        wasted_bytes: sum(|s| s.wasted_bytes as f64),
        downloaded_bytes: sum(|s| s.downloaded_bytes as f64),
        mean_quality: sum(|s| s.mean_quality),
        quality_switches: sum(|s| s.quality_switches as f64),
        qoe: sum(|s| s.qoe),
    }
}

/// `x / base`, with the 0/0 case pinned to 1.0 (equal is equal).
fn ratio(x: f64, base: f64) -> f64 {
    if base == 0.0 {
        if x == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        x / base
    }
}
