//! Download planners: a UCT tree search over (chunk, variant) download
//! sequences, a guarded exhaustive enumerator for small instances, and two
//! baselines.
//!
//! All planners share the same ground rules:
//!
//! - They look at most [`PlannerConfig::horizon_chunks`] unacquired chunks
//!   ahead of the playhead (crossing video boundaries, assuming the viewer
//!   watches through).
//! - They plan against a *predicted* bandwidth: the harmonic mean of the
//!   most recent throughput samples, held constant
//!   (see [`predict_bandwidth`]).
//! - A download sequence is admissible only if every prefix of it, evaluated
//!   with unplanned chunks assumed punctual, is free of
//!   computation-attributed stall. Network-attributed stall is allowed (a
//!   slow link may make it unavoidable) and is priced by the utility's stall
//!   term instead.
//!
//! The admissibility rule is what makes download *order* matter: moving a
//! neural-decoded chunk earlier in the sequence starts its long decode
//! sooner, which can be the difference between a dead end and a plan that
//! fits one more generated chunk (see the golden tables in
//! `tests/timeline_tables.rs`).

mod baselines;
mod bruteforce;
mod search;

pub use baselines::{fallback_plan, plan_fixed_nextk_baseline, plan_sequential_baseline, BitrateRule};
pub use bruteforce::{
    enumeration_size, exact_optimum, plan_bruteforce, BruteForceMode, DEFAULT_ENUMERATION_LIMIT,
};
pub use search::{plan_mcts, uct_value, SearchStats};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    BandwidthModel, Bytes, ChunkId, DeviceModel, Feed, ModelError, Ms, Plan, PlanStep, UnitId,
    Weights,
};
use crate::scoring::{chunk_score, ChunkMetrics};
use crate::timeline::{duration_for_bytes, PlayPosition, PlaybackState, TimelineError};

/// How rollouts pick among feasible continuations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RolloutPolicy {
    /// Extend with the candidate of highest marginal utility (ties broken
    /// randomly).
    #[default]
    Greedy,
    /// Extend with a uniformly random feasible candidate.
    Random,
}

/// Knobs shared by the planners.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// How many unacquired chunks ahead of the playhead to plan for.
    pub horizon_chunks: usize,
    /// Tree-search iteration budget.
    pub simulations: u32,
    /// Exploration constant in the UCT rule.
    pub exploration: f64,
    pub rollout: RolloutPolicy,
    /// Seed for all stochastic tie-breaking; equal seeds give equal plans.
    pub seed: u64,
    /// Optional wall-clock cap for the tree search. `None` (the default)
    /// runs the full simulation budget, which keeps results reproducible;
    /// with a cap, the number of iterations that fit varies run to run.
    pub time_budget_ms: Option<u64>,
    pub weights: Weights,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            horizon_chunks: 8,
            simulations: 10_000,
            exploration: 1.0,
            rollout: RolloutPolicy::Greedy,
            seed: 0,
            time_budget_ms: None,
            weights: Weights::default(),
        }
    }
}

/// A plan plus the utility the planner expects from it.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanOutcome {
    pub plan: Plan,
    /// Utility of the plan under predicted bandwidth.
    pub utility: f64,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    /// Not a single (chunk, variant) download is admissible from this state:
    /// anything the planner could fetch would miss its deadline on decode.
    #[error("every candidate download leads to computation stall; no admissible plan exists")]
    InfeasibleAllPruned,
    /// The exhaustive enumerator refuses spaces it cannot finish.
    #[error("enumeration space of {size} plans exceeds the limit of {limit}")]
    SpaceTooLarge { size: u128, limit: u128 },
    #[error(transparent)]
    Timeline(#[from] TimelineError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How many trailing throughput samples the predictor averages.
pub const PREDICTION_WINDOW: usize = 5;

/// Predicted bandwidth at `now`: the harmonic mean of the last
/// [`PREDICTION_WINDOW`] samples at or before `now`, held constant. The
/// harmonic mean is the right average for transfer times (a transfer's
/// duration sums per-byte costs, which are reciprocal rates), and it is
/// deliberately pessimistic after a dip. Floors at 1 kbps.
pub fn predict_bandwidth(bw: &BandwidthModel, now: Ms) -> BandwidthModel {
    let samples = bw.samples();
    let upto = samples.partition_point(|s| s.at_ms <= now).max(1);
    let window = &samples[upto.saturating_sub(PREDICTION_WINDOW)..upto];
    let inv_sum: f64 = window.iter().map(|s| 1.0 / s.kbps as f64).sum();
    let mean = (window.len() as f64 / inv_sum).floor() as u64;
    BandwidthModel::constant(mean.max(1))
}

/// One plannable chunk ahead of the playhead.
#[derive(Clone, Debug)]
pub(crate) struct HorizonChunk {
    pub chunk: ChunkId,
    pub playout_ms: Ms,
    /// Variants the device can decode, as (index into the chunk's variant
    /// list, size, quality, decode latency, unit).
    pub variants: Vec<VariantInfo>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct VariantInfo {
    pub index: usize,
    pub size_bytes: Bytes,
    pub quality: f64,
    pub decode_ms: Ms,
    pub unit: UnitId,
    /// `Some` for pixel variants; `None` for generated ones.
    pub bitrate_kbps: Option<u32>,
}

/// The next `horizon` unacquired chunks in playback order, with variants the
/// device cannot decode already filtered out.
pub(crate) fn collect_horizon(
    feed: &Feed,
    device: &DeviceModel,
    state: &PlaybackState,
    horizon: usize,
) -> Vec<HorizonChunk> {
    let mut out = Vec::new();
    let mut pos = state.next_unplayed(feed);
    while let Some(id) = pos {
        if out.len() == horizon {
            break;
        }
        if !state.is_acquired(id) {
            let chunk = feed.chunk(id).expect("walk stays in the feed");
            let variants: Vec<VariantInfo> = chunk
                .variants
                .iter()
                .enumerate()
                .filter(|(_, v)| device.has_unit(v.decode_unit))
                .map(|(index, v)| VariantInfo {
                    index,
                    size_bytes: v.size_bytes,
                    quality: v.quality,
                    decode_ms: v.decode_latency_ms,
                    unit: v.decode_unit,
                    bitrate_kbps: v.codec.bitrate_kbps(),
                })
                .collect();
            if !variants.is_empty() {
                out.push(HorizonChunk { chunk: id, playout_ms: chunk.playout_ms, variants });
            }
        }
        pos = feed.next_chunk(id);
    }
    out
}

/// A planner-internal step: indices into the horizon rather than the feed.
pub(crate) type Ext = (usize, usize); // (horizon index, variant slot)

/// Precomputed instance data shared by every prefix evaluation in one
/// planning call. Evaluations here mirror `timeline::evaluate_plan` +
/// `scoring::plan_utility` exactly (a property test holds them together) but
/// skip re-validation and map lookups, since the planners evaluate many
/// thousands of prefixes per call.
pub(crate) struct EvalContext {
    pub horizon: Vec<HorizonChunk>,
    /// Playback-order walk from the next unplayed chunk through the last
    /// horizon chunk: (playout_ms, horizon index if plannable, video index,
    /// chunk index within its video).
    chain: Vec<ChainEntry>,
    /// Deadline of the first chain entry.
    first_deadline: Ms,
    net_free: Ms,
    vd_free: Ms,
    na_free: Ms,
    prev_quality: Option<f64>,
    weights: Weights,
}

#[derive(Clone, Copy, Debug)]
struct ChainEntry {
    playout_ms: Ms,
    horizon_idx: Option<usize>,
    video_index: u32,
    chunk_index: u32,
}

/// Everything a prefix evaluation produces.
#[derive(Clone, Debug)]
pub(crate) struct PrefixEval {
    /// Per horizon chunk: (download_end, decode_end) when placed. Only the
    /// differential tests against the public evaluator read these.
    #[cfg_attr(not(test), allow(dead_code))]
    pub placed: Vec<Option<(Ms, Ms)>>,
    /// Per horizon chunk: its stall against the deadline chain (0 when
    /// unplaced).
    pub stalls: Vec<Ms>,
    pub utility: f64,
    pub compute_stall_free: bool,
    /// Stall (any cause) summed over placed chunks.
    #[cfg_attr(not(test), allow(dead_code))]
    pub total_stall_ms: Ms,
}

impl EvalContext {
    pub fn new(
        feed: &Feed,
        device: &DeviceModel,
        state: &PlaybackState,
        weights: Weights,
        horizon: usize,
    ) -> Self {
        let horizon = collect_horizon(feed, device, state, horizon);
        let mut chain = Vec::new();
        if let (Some(start), Some(last)) = (state.next_unplayed(feed), horizon.last()) {
            let last = last.chunk;
            let mut pos = Some(start);
            while let Some(id) = pos {
                let chunk = feed.chunk(id).expect("walk stays in the feed");
                let horizon_idx = horizon.iter().position(|h| h.chunk == id);
                chain.push(ChainEntry {
                    playout_ms: chunk.playout_ms,
                    horizon_idx,
                    video_index: id.video_index,
                    chunk_index: id.chunk_index,
                });
                if id == last {
                    break;
                }
                pos = feed.next_chunk(id);
            }
        }
        let first_deadline = match &state.position {
            PlayPosition::Playing(p) => {
                let playout = feed.chunk(p.chunk).map(|c| c.playout_ms).unwrap_or(0);
                state.now + playout.saturating_sub(p.elapsed_ms)
            }
            _ => state.now + state.startup_delay_ms,
        };
        EvalContext {
            horizon,
            chain,
            first_deadline,
            net_free: state.now.max(state.network_free_at),
            vd_free: state.unit_free_at.get(&UnitId::VideoDecoder).copied().unwrap_or(0),
            na_free: state.unit_free_at.get(&UnitId::NeuralAccel).copied().unwrap_or(0),
            prev_quality: state.prev_quality,
            weights,
        }
    }

    pub fn horizon_len(&self) -> usize {
        self.horizon.len()
    }

    /// For each horizon chunk, its position in the deadline chain. A placed
    /// chunk's deadline — and so its stall — is final once every horizon
    /// chunk at an earlier chain position is placed too (unplanned chunks at
    /// earlier positions are permanently assumed punctual).
    pub fn chain_positions(&self) -> Vec<usize> {
        let mut out = vec![0; self.horizon.len()];
        for (pos, entry) in self.chain.iter().enumerate() {
            if let Some(h) = entry.horizon_idx {
                out[h] = pos;
            }
        }
        out
    }

    /// Full evaluation of a download sequence over the horizon, under `bw`.
    pub fn eval(&self, steps: &[Ext], bw: &BandwidthModel) -> PrefixEval {
        // Downloads: serial in step order; decodes: FIFO per unit in
        // download-completion order.
        let mut placed: Vec<Option<(Ms, Ms)>> = vec![None; self.horizon.len()];
        let mut cursor = self.net_free;
        let mut vd_tail = self.vd_free;
        let mut na_tail = self.na_free;
        for &(h, v) in steps {
            let info = self.horizon[h].variants[v];
            cursor += duration_for_bytes(info.size_bytes, bw, cursor);
            let tail = match info.unit {
                UnitId::NeuralAccel => &mut na_tail,
                _ => &mut vd_tail,
            };
            let decode_end = cursor.max(*tail) + info.decode_ms;
            *tail = decode_end;
            placed[h] = Some((cursor, decode_end));
        }

        // Deadline chain; variants looked up per placed chunk.
        let variant_of = |h: usize| -> VariantInfo {
            let v = steps.iter().find(|&&(hh, _)| hh == h).expect("placed").1;
            self.horizon[h].variants[v]
        };
        let mut deadline = self.first_deadline;
        let mut utility = 0.0;
        let mut total_stall = 0;
        let mut compute_stall_free = true;
        let mut stalls = vec![0; self.horizon.len()];
        let mut prev: Option<(usize, f64)> = None; // (chain position, quality)
        let mut first_scored = true;
        for (pos, entry) in self.chain.iter().enumerate() {
            let start = match entry.horizon_idx.and_then(|h| placed[h].map(|p| (h, p))) {
                Some((h, (download_end, decode_end))) => {
                    let info = variant_of(h);
                    let stall = decode_end.saturating_sub(deadline);
                    stalls[h] = stall;
                    let compute_stall = if download_end <= deadline {
                        stall
                    } else {
                        decode_end.saturating_sub(download_end).saturating_sub(info.decode_ms)
                    };
                    if compute_stall > 0 {
                        compute_stall_free = false;
                    }
                    total_stall += stall;
                    let reference = match prev {
                        Some((p, q)) if p + 1 == pos && self.chain[p].video_index == entry.video_index => {
                            Some(q)
                        }
                        _ if first_scored && entry.chunk_index > 0 => self.prev_quality,
                        _ => None,
                    };
                    utility += chunk_score(
                        &ChunkMetrics {
                            chunk: ChunkId::new(entry.video_index, entry.chunk_index),
                            quality: info.quality,
                            prev_quality: reference,
                            stall_ms: stall,
                            size_bytes: info.size_bytes,
                        },
                        &self.weights,
                    );
                    first_scored = false;
                    prev = Some((pos, info.quality));
                    decode_end.max(deadline)
                }
                None => deadline,
            };
            deadline = start + entry.playout_ms;
        }
        PrefixEval { placed, stalls, utility, compute_stall_free, total_stall_ms: total_stall }
    }

    /// All admissible one-step extensions of `steps`, with the utility of
    /// each extended prefix, in (horizon, variant) order. `scratch` is the
    /// reusable step buffer; it is restored before returning. Returns the
    /// number of prefix evaluations performed.
    pub fn feasible_extensions(
        &self,
        scratch: &mut Vec<Ext>,
        bw: &BandwidthModel,
        out: &mut Vec<(Ext, f64)>,
    ) -> u64 {
        out.clear();
        let mut placed = vec![false; self.horizon.len()];
        for &(h, _) in scratch.iter() {
            placed[h] = true;
        }
        let mut evals = 0;
        for h in 0..self.horizon.len() {
            if placed[h] {
                continue;
            }
            for v in 0..self.horizon[h].variants.len() {
                scratch.push((h, v));
                let eval = self.eval(scratch, bw);
                scratch.pop();
                evals += 1;
                if eval.compute_stall_free {
                    out.push(((h, v), eval.utility));
                }
            }
        }
        evals
    }

    /// Translates internal steps into a feed-level plan.
    pub fn to_plan(&self, steps: &[Ext]) -> Plan {
        Plan::new(
            steps
                .iter()
                .map(|&(h, v)| PlanStep {
                    chunk: self.horizon[h].chunk,
                    variant_index: self.horizon[h].variants[v].index,
                })
                .collect(),
        )
    }
}

/// Orders complete plans: higher utility first, ties broken toward the
/// lexicographically smaller step sequence so equal-utility searches are
/// reproducible.
pub(crate) fn better_plan(
    utility_a: f64,
    steps_a: &[Ext],
    utility_b: f64,
    steps_b: &[Ext],
) -> bool {
    if utility_a != utility_b {
        return utility_a > utility_b;
    }
    steps_a < steps_b
}

/// A pixel-only feed view for ablations: every generated variant removed.
/// Returns the stripped feed plus, per chunk, the stripped-index → original
/// variant-index table needed to translate plans back. Errors with
/// [`ModelError::EmptyFeed`] if some chunk has only generated variants.
pub fn strip_prompt_variants(feed: &Feed) -> Result<(Feed, Vec<Vec<Vec<usize>>>), ModelError> {
    let mut stripped = feed.clone();
    let mut maps = Vec::with_capacity(feed.videos.len());
    for video in &mut stripped.videos {
        let mut video_map = Vec::with_capacity(video.chunks.len());
        for chunk in &mut video.chunks {
            let keep: Vec<usize> = chunk
                .variants
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.codec.is_prompt())
                .map(|(i, _)| i)
                .collect();
            if keep.is_empty() {
                return Err(ModelError::EmptyFeed);
            }
            chunk.variants = keep.iter().map(|&i| chunk.variants[i].clone()).collect();
            video_map.push(keep);
        }
        maps.push(video_map);
    }
    Ok((stripped, maps))
}

/// Rewrites a plan made against the stripped feed so its variant indices
/// refer to the original feed.
pub fn remap_stripped_plan(plan: &Plan, maps: &[Vec<Vec<usize>>]) -> Plan {
    Plan::new(
        plan.steps
            .iter()
            .map(|s| PlanStep {
                chunk: s.chunk,
                variant_index: maps[s.chunk.video_index as usize][s.chunk.chunk_index as usize]
                    [s.variant_index],
            })
            .collect(),
    )
}
