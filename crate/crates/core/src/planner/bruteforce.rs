//! Exhaustive planners for small instances.
//!
//! These exist to keep the tree search honest: on instances small enough to
//! enumerate, the search should land on the same utility the enumerator
//! proves optimal. They refuse instances they cannot finish — the space of
//! download sequences grows as H! × Π|variants| and passes 10^9 by eight
//! chunks of six variants — rather than silently taking hours.

use super::{
    better_plan, collect_horizon, predict_bandwidth, EvalContext, Ext, PlanError, PlanOutcome,
    PlannerConfig, SearchStats,
};
use crate::model::{BandwidthModel, DeviceModel, Feed};
use crate::timeline::PlaybackState;

/// Largest enumeration the exhaustive planner attempts by default.
pub const DEFAULT_ENUMERATION_LIMIT: u128 = 10_000_000;

/// What the exhaustive planner enumerates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BruteForceMode {
    /// Only admissible sequences — the same space the tree search explores.
    /// Dead ends (prefixes with no admissible extension) compete as partial
    /// plans; any complete plan outranks them.
    Pruned,
    /// Every download order and variant assignment, including plans with
    /// computation stall; stall is merely priced by the utility. Useful as
    /// an unconstrained reference bound.
    Exhaustive,
}

/// The number of complete plans over the current horizon: every download
/// order times every variant assignment, saturating at `u128::MAX`.
pub fn enumeration_size(
    feed: &Feed,
    device: &DeviceModel,
    state: &PlaybackState,
    horizon_chunks: usize,
) -> u128 {
    let horizon = collect_horizon(feed, device, state, horizon_chunks);
    let mut size: u128 = 1;
    for (i, hc) in horizon.iter().enumerate() {
        size = size
            .saturating_mul(i as u128 + 1)
            .saturating_mul(hc.variants.len() as u128);
    }
    size
}

/// Depth-first enumeration of the whole plan space, refusing instances whose
/// [`enumeration_size`] exceeds `limit` (default
/// [`DEFAULT_ENUMERATION_LIMIT`]) with [`PlanError::SpaceTooLarge`].
pub fn plan_bruteforce(
    feed: &Feed,
    device: &DeviceModel,
    bw: &BandwidthModel,
    state: &PlaybackState,
    cfg: &PlannerConfig,
    mode: BruteForceMode,
    limit: Option<u128>,
) -> Result<PlanOutcome, PlanError> {
    let limit = limit.unwrap_or(DEFAULT_ENUMERATION_LIMIT);
    let size = enumeration_size(feed, device, state, cfg.horizon_chunks);
    if size > limit {
        return Err(PlanError::SpaceTooLarge { size, limit });
    }
    let predicted = predict_bandwidth(bw, state.now);
    let ctx = EvalContext::new(feed, device, state, cfg.weights, cfg.horizon_chunks);
    let mut enumerator = Enumerator::new(&ctx, &predicted);
    if ctx.horizon_len() > 0 {
        let mut steps = Vec::with_capacity(ctx.horizon_len());
        match mode {
            BruteForceMode::Pruned => enumerator.dfs_pruned(&mut steps),
            BruteForceMode::Exhaustive => {
                let mut free = vec![true; ctx.horizon_len()];
                enumerator.dfs_exhaustive(&mut steps, &mut free);
            }
        }
    }
    enumerator.finish(&ctx)
}

/// Branch-and-bound over the admissible space: provably utility-optimal, no
/// size guard, exponential worst case. Meant for freezing ground truth on
/// fixture-sized instances, not for production planning.
///
/// The bound exploits two facts. A placed chunk's download and decode times
/// never move when the sequence is extended, so its quality and byte terms
/// are exact. Its stall can still *shrink* — a later download may fill an
/// earlier gap in the deadline chain and push every subsequent deadline back
/// — unless every horizon chunk at an earlier chain position is already
/// placed, in which case the deadline is final and the stall is charged
/// exactly. Everything else is bounded optimistically: unfinalized stall and
/// all variation at zero, unplaced chunks at their best quality-minus-bytes
/// variant.
pub fn exact_optimum(
    feed: &Feed,
    device: &DeviceModel,
    bw: &BandwidthModel,
    state: &PlaybackState,
    cfg: &PlannerConfig,
) -> Result<PlanOutcome, PlanError> {
    let predicted = predict_bandwidth(bw, state.now);
    let ctx = EvalContext::new(feed, device, state, cfg.weights, cfg.horizon_chunks);
    let mut enumerator = Enumerator::new(&ctx, &predicted);
    if ctx.horizon_len() > 0 {
        let chain_pos = ctx.chain_positions();
        let best_solo: Vec<f64> = ctx
            .horizon
            .iter()
            .map(|hc| {
                hc.variants
                    .iter()
                    .map(|v| {
                        cfg.weights.quality * v.quality
                            - cfg.weights.bandwidth * megabits(v.size_bytes)
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let mut steps = Vec::with_capacity(ctx.horizon_len());
        enumerator.branch_and_bound(&mut steps, &chain_pos, &best_solo, cfg);
    }
    enumerator.finish(&ctx)
}

fn megabits(bytes: u64) -> f64 {
    bytes as f64 * 8.0 / 1e6
}

struct Enumerator<'a> {
    ctx: &'a EvalContext,
    bw: &'a BandwidthModel,
    stats: SearchStats,
    best: Option<(bool, f64, Vec<Ext>)>,
}

impl<'a> Enumerator<'a> {
    fn new(ctx: &'a EvalContext, bw: &'a BandwidthModel) -> Self {
        Enumerator {
            ctx,
            bw,
            stats: SearchStats { horizon: ctx.horizon_len() as u32, ..SearchStats::default() },
            best: None,
        }
    }

    fn offer(&mut self, complete: bool, utility: f64, steps: &[Ext]) {
        if complete {
            self.stats.complete_plans += 1;
        }
        let replace = match &self.best {
            None => true,
            Some((was_complete, best_utility, best_steps)) => {
                (complete, *was_complete) == (true, false)
                    || (complete == *was_complete
                        && better_plan(utility, steps, *best_utility, best_steps))
            }
        };
        if replace {
            self.best = Some((complete, utility, steps.to_vec()));
        }
    }

    /// Walks every admissible sequence; a prefix with no admissible
    /// extension is a leaf (complete when it placed the whole horizon).
    fn dfs_pruned(&mut self, steps: &mut Vec<Ext>) {
        self.stats.nodes += 1;
        let mut cands = Vec::new();
        self.stats.prefix_evaluations += self.ctx.feasible_extensions(steps, self.bw, &mut cands);
        if cands.is_empty() {
            let utility = if steps.is_empty() {
                0.0
            } else {
                self.stats.prefix_evaluations += 1;
                self.ctx.eval(steps, self.bw).utility
            };
            self.offer(steps.len() == self.ctx.horizon_len(), utility, steps);
            return;
        }
        for (step, _) in cands {
            steps.push(step);
            self.dfs_pruned(steps);
            steps.pop();
        }
    }

    /// Walks every order × variant assignment; evaluates only at the leaves.
    fn dfs_exhaustive(&mut self, steps: &mut Vec<Ext>, free: &mut [bool]) {
        self.stats.nodes += 1;
        if steps.len() == self.ctx.horizon_len() {
            self.stats.prefix_evaluations += 1;
            let utility = self.ctx.eval(steps, self.bw).utility;
            self.offer(true, utility, steps);
            return;
        }
        for h in 0..free.len() {
            if !free[h] {
                continue;
            }
            free[h] = false;
            for v in 0..self.ctx.horizon[h].variants.len() {
                steps.push((h, v));
                self.dfs_exhaustive(steps, free);
                steps.pop();
            }
            free[h] = true;
        }
    }

    fn branch_and_bound(
        &mut self,
        steps: &mut Vec<Ext>,
        chain_pos: &[usize],
        best_solo: &[f64],
        cfg: &PlannerConfig,
    ) {
        self.stats.nodes += 1;
        let mut cands = Vec::new();
        self.stats.prefix_evaluations += self.ctx.feasible_extensions(steps, self.bw, &mut cands);
        if cands.is_empty() {
            let utility = if steps.is_empty() {
                0.0
            } else {
                self.stats.prefix_evaluations += 1;
                self.ctx.eval(steps, self.bw).utility
            };
            self.offer(steps.len() == self.ctx.horizon_len(), utility, steps);
            return;
        }
        // Most promising extension first so a strong incumbent forms early;
        // ties toward the smaller step keep the result reproducible.
        cands.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for (step, _) in cands {
            steps.push(step);
            if self.bound_allows(steps, chain_pos, best_solo, cfg) {
                self.branch_and_bound(steps, chain_pos, best_solo, cfg);
            }
            steps.pop();
        }
    }

    /// Upper bound on the utility of any completion of `steps`; prunes the
    /// branch when it cannot beat a complete incumbent.
    fn bound_allows(
        &mut self,
        steps: &[Ext],
        chain_pos: &[usize],
        best_solo: &[f64],
        cfg: &PlannerConfig,
    ) -> bool {
        let incumbent = match &self.best {
            Some((true, utility, _)) => *utility,
            _ => return true,
        };
        self.stats.prefix_evaluations += 1;
        let eval = self.ctx.eval(steps, self.bw);
        let mut slot_of = vec![None; self.ctx.horizon_len()];
        for &(h, v) in steps {
            slot_of[h] = Some(v);
        }
        let mut bound = 0.0;
        for h in 0..self.ctx.horizon_len() {
            match slot_of[h] {
                Some(v) => {
                    let info = self.ctx.horizon[h].variants[v];
                    bound += cfg.weights.quality * info.quality
                        - cfg.weights.bandwidth * megabits(info.size_bytes);
                    let finalized = (0..self.ctx.horizon_len())
                        .all(|h2| chain_pos[h2] >= chain_pos[h] || slot_of[h2].is_some());
                    if finalized {
                        bound -= cfg.weights.stall * (eval.stalls[h] as f64 / 1000.0);
                    }
                }
                None => bound += best_solo[h],
            }
        }
        bound > incumbent + 1e-12
    }

    fn finish(self, ctx: &EvalContext) -> Result<PlanOutcome, PlanError> {
        match self.best {
            Some((_, utility, steps)) if !steps.is_empty() => {
                Ok(PlanOutcome { plan: ctx.to_plan(&steps), utility, stats: self.stats })
            }
            _ if ctx.horizon_len() == 0 => {
                Ok(PlanOutcome { plan: Default::default(), utility: 0.0, stats: self.stats })
            }
            _ => Err(PlanError::InfeasibleAllPruned),
        }
    }
}
