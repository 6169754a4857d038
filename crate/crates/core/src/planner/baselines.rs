//! Reference planners the tree search is judged against.
//!
//! Both baselines download strictly in playback order, which is what keeps
//! them simple — and what costs them: an in-order schedule can start a long
//! neural decode only after everything before it has downloaded, so it fits
//! fewer generated chunks than a reordered one (see
//! `tests/timeline_tables.rs`).

use serde::{Deserialize, Serialize};

use super::{
    predict_bandwidth, EvalContext, Ext, PlanError, PlanOutcome, PlannerConfig, SearchStats,
};
use crate::model::{BandwidthModel, DeviceModel, Feed, Plan};
use crate::timeline::{duration_for_bytes, PlaybackState};

/// How the fixed-lookahead baseline picks a bitrate rung.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitrateRule {
    /// Highest rung whose predicted download time fits within the chunk's
    /// playout time (i.e. the download keeps up with real-time playback);
    /// the lowest rung when none does.
    #[default]
    HighestFitting,
    /// Always the lowest rung.
    Lowest,
}

/// Slot of the fallback variant among a horizon chunk's usable variants:
/// the lowest-bitrate pixel rung, or the smallest variant if the device
/// decodes no pixel rung at all.
fn safe_slot(ctx: &EvalContext, h: usize) -> usize {
    let variants = &ctx.horizon[h].variants;
    variants
        .iter()
        .enumerate()
        .filter(|(_, v)| v.bitrate_kbps.is_some())
        .min_by_key(|(_, v)| v.bitrate_kbps)
        .or_else(|| variants.iter().enumerate().min_by_key(|(_, v)| v.size_bytes))
        .map(|(slot, _)| slot)
        .expect("horizon chunks have at least one variant")
}

/// Greedy in-order planner: walks the horizon in playback order and keeps,
/// per chunk, the admissible variant whose extended prefix scores best,
/// falling back to the safe rung when no variant is admissible. Never skips
/// or reorders a chunk.
pub fn plan_sequential_baseline(
    feed: &Feed,
    device: &DeviceModel,
    bw: &BandwidthModel,
    state: &PlaybackState,
    cfg: &PlannerConfig,
) -> Result<PlanOutcome, PlanError> {
    let predicted = predict_bandwidth(bw, state.now);
    let ctx = EvalContext::new(feed, device, state, cfg.weights, cfg.horizon_chunks);
    let mut stats = SearchStats { horizon: ctx.horizon_len() as u32, ..SearchStats::default() };
    let mut steps: Vec<Ext> = Vec::with_capacity(ctx.horizon_len());
    for h in 0..ctx.horizon_len() {
        let mut best: Option<(usize, f64)> = None;
        for v in 0..ctx.horizon[h].variants.len() {
            steps.push((h, v));
            let eval = ctx.eval(&steps, &predicted);
            steps.pop();
            stats.prefix_evaluations += 1;
            if eval.compute_stall_free && best.map_or(true, |(_, u)| eval.utility > u) {
                best = Some((v, eval.utility));
            }
        }
        let slot = best.map(|(v, _)| v).unwrap_or_else(|| safe_slot(&ctx, h));
        steps.push((h, slot));
    }
    if !steps.is_empty() {
        stats.complete_plans = 1;
    }
    let utility = if steps.is_empty() { 0.0 } else { ctx.eval(&steps, &predicted).utility };
    Ok(PlanOutcome { plan: ctx.to_plan(&steps), utility, stats })
}

/// Fixed-lookahead baseline: the next `k` unacquired chunks of the current
/// video plus the first unacquired chunk of the video after it, pixel rungs
/// only, rung chosen by `rule` under predicted bandwidth. This is the
/// classic computation-blind preloader: it never touches generated variants
/// and never reorders.
pub fn plan_fixed_nextk_baseline(
    feed: &Feed,
    device: &DeviceModel,
    bw: &BandwidthModel,
    state: &PlaybackState,
    cfg: &PlannerConfig,
    k: usize,
    rule: BitrateRule,
) -> Result<PlanOutcome, PlanError> {
    let predicted = predict_bandwidth(bw, state.now);
    // The window must reach the next video's head even when the current
    // video has many chunks left, so the horizon is uncapped.
    let ctx = EvalContext::new(feed, device, state, cfg.weights, usize::MAX);
    let mut stats = SearchStats { horizon: ctx.horizon_len() as u32, ..SearchStats::default() };
    let mut steps: Vec<Ext> = Vec::new();
    if let Some(first) = ctx.horizon.first() {
        let current_video = first.chunk.video_index;
        let mut in_current = 0;
        for (h, hc) in ctx.horizon.iter().enumerate() {
            let take = if hc.chunk.video_index == current_video {
                in_current += 1;
                in_current <= k
            } else {
                // First unacquired chunk of the immediately following video.
                hc.chunk.video_index == current_video + 1
                    && steps.last().map_or(true, |&(prev, _)| {
                        ctx.horizon[prev].chunk.video_index == current_video
                    })
            };
            if take {
                steps.push((h, pick_rung(&ctx, h, &predicted, rule)));
            }
            if hc.chunk.video_index > current_video {
                break;
            }
        }
    }
    stats.prefix_evaluations = if steps.is_empty() { 0 } else { 1 };
    let utility = if steps.is_empty() { 0.0 } else { ctx.eval(&steps, &predicted).utility };
    Ok(PlanOutcome { plan: ctx.to_plan(&steps), utility, stats })
}

/// Rung slot for one chunk under the bitrate rule.
fn pick_rung(ctx: &EvalContext, h: usize, predicted: &BandwidthModel, rule: BitrateRule) -> usize {
    let chunk = &ctx.horizon[h];
    let mut lowest: Option<(usize, u32)> = None;
    let mut fitting: Option<(usize, u32)> = None;
    for (slot, v) in chunk.variants.iter().enumerate() {
        let Some(kbps) = v.bitrate_kbps else { continue };
        if lowest.map_or(true, |(_, b)| kbps < b) {
            lowest = Some((slot, kbps));
        }
        let fits = duration_for_bytes(v.size_bytes, predicted, 0) <= chunk.playout_ms;
        if fits && fitting.map_or(true, |(_, b)| kbps > b) {
            fitting = Some((slot, kbps));
        }
    }
    match rule {
        BitrateRule::HighestFitting => fitting.or(lowest),
        BitrateRule::Lowest => lowest,
    }
    .map(|(slot, _)| slot)
    .unwrap_or_else(|| safe_slot(ctx, h))
}

/// Last-resort plan used when a planner reports that nothing is admissible:
/// the safe rung of every horizon chunk, strictly in playback order. May
/// stall; never surprises.
pub fn fallback_plan(
    feed: &Feed,
    device: &DeviceModel,
    state: &PlaybackState,
    horizon_chunks: usize,
) -> Plan {
    let ctx = EvalContext::new(feed, device, state, Default::default(), horizon_chunks);
    let steps: Vec<Ext> = (0..ctx.horizon_len()).map(|h| (h, safe_slot(&ctx, h))).collect();
    ctx.to_plan(&steps)
}
