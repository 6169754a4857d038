//! UCT tree search over download sequences.
//!
//! Nodes are prefixes of a download plan; an edge appends one admissible
//! (chunk, variant) download. Each simulation walks the tree by the UCT
//! rule, materializes one new node, finishes the prefix with a rollout, and
//! backs the terminal utility up the path. Candidate edges are generated
//! eagerly when a node is first expanded — the admissibility check has to
//! evaluate the extended prefix anyway, so its utility is cached on the edge
//! — but child nodes are only materialized when a simulation actually walks
//! through them.
//!
//! The search is deterministic for a given seed unless a wall-clock budget
//! is set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use super::{
    better_plan, predict_bandwidth, EvalContext, Ext, PlanError, PlanOutcome, PlannerConfig,
    RolloutPolicy,
};
use crate::model::{BandwidthModel, DeviceModel, Feed, Plan};
use crate::timeline::PlaybackState;

/// Counters from one planning call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Simulations actually run (may undershoot the budget under a
    /// wall-clock cap).
    pub simulations: u32,
    /// Tree nodes materialized.
    pub nodes: u32,
    /// Prefix evaluations performed (the search's unit of work).
    pub prefix_evaluations: u64,
    /// Rollouts that placed every horizon chunk.
    pub complete_plans: u64,
    /// Chunks the planner could see ahead.
    pub horizon: u32,
}

/// The UCT selection value: mean payoff plus an exploration bonus that
/// shrinks as a child absorbs visits. Unvisited children rank above
/// everything.
pub fn uct_value(value_sum: f64, visits: u32, parent_visits: u32, exploration: f64) -> f64 {
    if visits == 0 {
        return f64::INFINITY;
    }
    value_sum / visits as f64
        + exploration * ((parent_visits as f64).ln() / visits as f64).sqrt()
}

const UNMATERIALIZED: u32 = u32::MAX;

struct Slot {
    step: Ext,
    /// Utility of the parent's prefix extended by `step`, cached from the
    /// admissibility check.
    utility: f64,
    node: u32,
}

struct Node {
    parent: u32,
    visits: u32,
    value_sum: f64,
    /// Utility of this node's own prefix.
    prefix_utility: f64,
    depth: u16,
    expanded: bool,
    slots: Vec<Slot>,
}

struct Best {
    complete: bool,
    utility: f64,
    steps: Vec<Ext>,
}

struct Search<'a> {
    ctx: &'a EvalContext,
    bw: &'a BandwidthModel,
    cfg: &'a PlannerConfig,
    nodes: Vec<Node>,
    rng: ChaCha8Rng,
    stats: SearchStats,
    best: Option<Best>,
    cands: Vec<(Ext, f64)>,
}

impl<'a> Search<'a> {
    fn expand(&mut self, node: u32, prefix: &mut Vec<Ext>) {
        self.stats.prefix_evaluations +=
            self.ctx.feasible_extensions(prefix, self.bw, &mut self.cands);
        let slots = self
            .cands
            .iter()
            .map(|&(step, utility)| Slot { step, utility, node: UNMATERIALIZED })
            .collect();
        let n = &mut self.nodes[node as usize];
        n.slots = slots;
        n.expanded = true;
    }

    fn offer(&mut self, complete: bool, utility: f64, steps: &[Ext]) {
        if complete {
            self.stats.complete_plans += 1;
        }
        let replace = match &self.best {
            None => true,
            Some(b) => {
                (complete, b.complete) == (true, false)
                    || (complete == b.complete && better_plan(utility, steps, b.utility, &b.steps))
            }
        };
        if replace {
            self.best = Some(Best { complete, utility, steps: steps.to_vec() });
        }
    }

    /// Plays the prefix out with the configured policy; returns its terminal
    /// utility and registers the finished plan as a candidate best.
    fn rollout(&mut self, prefix: &mut Vec<Ext>, prefix_utility: f64) -> f64 {
        let start_len = prefix.len();
        let mut utility = prefix_utility;
        loop {
            self.stats.prefix_evaluations +=
                self.ctx.feasible_extensions(prefix, self.bw, &mut self.cands);
            if self.cands.is_empty() {
                break;
            }
            let pick = match self.cfg.rollout {
                RolloutPolicy::Greedy => {
                    let max = self
                        .cands
                        .iter()
                        .map(|&(_, u)| u)
                        .fold(f64::NEG_INFINITY, f64::max);
                    let ties: Vec<usize> = self
                        .cands
                        .iter()
                        .enumerate()
                        .filter(|(_, &(_, u))| u == max)
                        .map(|(i, _)| i)
                        .collect();
                    ties[self.rng.random_range(0..ties.len())]
                }
                RolloutPolicy::Random => self.rng.random_range(0..self.cands.len()),
            };
            let (step, u) = self.cands[pick];
            prefix.push(step);
            utility = u;
        }
        let complete = prefix.len() == self.ctx.horizon_len();
        self.offer(complete, utility, prefix);
        prefix.truncate(start_len);
        utility
    }

    fn backprop(&mut self, mut node: u32, value: f64) {
        loop {
            let n = &mut self.nodes[node as usize];
            n.visits += 1;
            n.value_sum += value;
            if n.parent == UNMATERIALIZED {
                break;
            }
            node = n.parent;
        }
    }

    fn simulate(&mut self) {
        let mut node: u32 = 0;
        let mut prefix: Vec<Ext> = Vec::with_capacity(self.ctx.horizon_len());
        loop {
            if !self.nodes[node as usize].expanded {
                self.expand(node, &mut prefix);
            }
            if self.nodes[node as usize].slots.is_empty() {
                // Terminal prefix: complete plan or dead end. Its own
                // utility is the payoff.
                let utility = self.nodes[node as usize].prefix_utility;
                let complete = prefix.len() == self.ctx.horizon_len();
                self.offer(complete, utility, &prefix);
                self.backprop(node, utility);
                return;
            }
            let unmaterialized =
                self.nodes[node as usize].slots.iter().position(|s| s.node == UNMATERIALIZED);
            match unmaterialized {
                Some(slot) => {
                    // Materialize one new node, then roll the prefix out.
                    let parent = &self.nodes[node as usize];
                    let (step, slot_utility) = (parent.slots[slot].step, parent.slots[slot].utility);
                    let depth = parent.depth + 1;
                    let child = self.nodes.len() as u32;
                    self.nodes.push(Node {
                        parent: node,
                        visits: 0,
                        value_sum: 0.0,
                        prefix_utility: slot_utility,
                        depth,
                        expanded: false,
                        slots: Vec::new(),
                    });
                    self.nodes[node as usize].slots[slot].node = child;
                    self.stats.nodes += 1;
                    prefix.push(step);
                    let value = self.rollout(&mut prefix, slot_utility);
                    self.backprop(child, value);
                    return;
                }
                None => {
                    // Fully materialized: descend by UCT, lowest slot on ties.
                    let n = &self.nodes[node as usize];
                    let parent_visits = n.visits;
                    let mut best_slot = 0;
                    let mut best_value = f64::NEG_INFINITY;
                    for (i, s) in n.slots.iter().enumerate() {
                        let c = &self.nodes[s.node as usize];
                        let v =
                            uct_value(c.value_sum, c.visits, parent_visits, self.cfg.exploration);
                        if v > best_value {
                            best_value = v;
                            best_slot = i;
                        }
                    }
                    let s = &n.slots[best_slot];
                    prefix.push(s.step);
                    node = s.node;
                }
            }
        }
    }
}

/// Plans downloads by UCT tree search. Returns the best complete plan seen
/// (or the best admissible partial prefix when no sequence can place every
/// horizon chunk), with its utility under predicted bandwidth.
///
/// Errors with [`PlanError::InfeasibleAllPruned`] when not even a single
/// download is admissible. An exhausted horizon (everything already
/// acquired) yields an empty plan.
pub fn plan_mcts(
    feed: &Feed,
    device: &DeviceModel,
    bw: &BandwidthModel,
    state: &PlaybackState,
    cfg: &PlannerConfig,
) -> Result<PlanOutcome, PlanError> {
    let predicted = predict_bandwidth(bw, state.now);
    let ctx = EvalContext::new(feed, device, state, cfg.weights, cfg.horizon_chunks);
    let mut stats = SearchStats { horizon: ctx.horizon_len() as u32, ..SearchStats::default() };
    if ctx.horizon_len() == 0 {
        return Ok(PlanOutcome { plan: Plan::default(), utility: 0.0, stats });
    }

    let root = Node {
        parent: UNMATERIALIZED,
        visits: 0,
        value_sum: 0.0,
        prefix_utility: 0.0,
        depth: 0,
        expanded: false,
        slots: Vec::new(),
    };
    stats.nodes = 1;
    let mut search = Search {
        ctx: &ctx,
        bw: &predicted,
        cfg,
        nodes: vec![root],
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        stats,
        best: None,
        cands: Vec::new(),
    };

    let started = Instant::now();
    for sim in 0..cfg.simulations.max(1) {
        if sim > 0 {
            if let Some(budget) = cfg.time_budget_ms {
                if started.elapsed().as_millis() as u64 >= budget {
                    break;
                }
            }
        }
        search.simulate();
        search.stats.simulations = sim + 1;
        if search.nodes[0].slots.is_empty() {
            // Root expansion found nothing; further simulations are no-ops.
            break;
        }
    }

    let stats = search.stats;
    match search.best {
        Some(best) if !best.steps.is_empty() => Ok(PlanOutcome {
            plan: ctx.to_plan(&best.steps),
            utility: best.utility,
            stats,
        }),
        _ => Err(PlanError::InfeasibleAllPruned),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChunkId, Weights};
    use crate::traceio::{gen_feed, parse_manifest, FeedSpec};

    #[test]
    fn uct_matches_the_frozen_example() {
        let v = uct_value(10.0, 5, 100, 1.0);
        assert!((v - 2.9597052864).abs() < 1e-6, "uct = {v}");
        assert_eq!(uct_value(0.0, 0, 100, 1.0), f64::INFINITY);
        // No exploration term leaves the plain mean.
        assert_eq!(uct_value(10.0, 5, 100, 0.0), 2.0);
    }

    fn toy_feed() -> Feed {
        parse_manifest(include_str!("../../tests/fixtures/ooo_toy.json")).unwrap()
    }

    #[test]
    fn search_reorders_downloads_to_fit_more_generated_chunks() {
        // On the golden fixture, at most three generated chunks fit when
        // downloads stay in playback order; the search should discover an
        // out-of-order sequence carrying at least four (five exist).
        let feed = toy_feed();
        let state = PlaybackState::session_start(ChunkId::new(0, 0), 1000);
        let cfg = PlannerConfig {
            horizon_chunks: 8,
            simulations: 4000,
            // Make the generated variant clearly worth chasing: high byte
            // price, no stall/variation distraction.
            weights: Weights { quality: 1.0, variation: 0.0, stall: 3.0, bandwidth: 2.0 },
            ..PlannerConfig::default()
        };
        let outcome =
            plan_mcts(&feed, &DeviceModel::default(), &BandwidthModel::constant(1000), &state, &cfg)
                .unwrap();
        assert_eq!(outcome.plan.len(), 8, "complete plan expected");
        let prompts = outcome.plan.prompt_steps(&feed);
        assert!(prompts >= 4, "only {prompts} generated chunks planned");
        assert!(outcome.stats.complete_plans > 0);
    }

    #[test]
    fn root_prunes_an_early_generated_chunk_but_not_its_pixel_sibling() {
        // First chunk as a generated variant would decode at 1,700 ms
        // against a 1,000 ms deadline — computation stall, so it may not
        // even be a root candidate. The pixel variant stays.
        let feed = toy_feed();
        let state = PlaybackState::session_start(ChunkId::new(0, 0), 1000);
        let device = DeviceModel::default();
        let ctx = EvalContext::new(
            &feed,
            &device,
            &state,
            Weights::default(),
            8,
        );
        let bw = BandwidthModel::constant(1000);
        let mut cands = Vec::new();
        ctx.feasible_extensions(&mut Vec::new(), &bw, &mut cands);
        let has = |h: usize, v: usize| cands.iter().any(|&((ch, cv), _)| (ch, cv) == (h, v));
        assert!(has(0, 0), "pixel variant of the first chunk must be admissible");
        assert!(!has(0, 1), "generated variant of the first chunk must be pruned");
        // Later chunks can afford the neural queue from the start.
        assert!(has(3, 1));
    }

    #[test]
    fn equal_seeds_agree_and_budgets_only_improve() {
        let feed = gen_feed(&FeedSpec { videos: 1, chunks_per_video: 6, ..FeedSpec::default() }, 5);
        let state = PlaybackState::session_start(ChunkId::new(0, 0), 1000);
        let device = DeviceModel::default();
        let bw = BandwidthModel::constant(1100);
        let base = PlannerConfig { horizon_chunks: 6, simulations: 300, ..PlannerConfig::default() };

        let a = plan_mcts(&feed, &device, &bw, &state, &base).unwrap();
        let b = plan_mcts(&feed, &device, &bw, &state, &base).unwrap();
        assert_eq!(a.plan, b.plan);
        assert_eq!(a.utility, b.utility);

        // With a fixed seed the search trajectory under a larger budget
        // extends the smaller one, so the incumbent can only improve.
        let mut last = f64::NEG_INFINITY;
        for sims in [50, 150, 300, 900] {
            let cfg = PlannerConfig { simulations: sims, ..base };
            let outcome = plan_mcts(&feed, &device, &bw, &state, &cfg).unwrap();
            assert!(
                outcome.utility >= last - 1e-12,
                "utility regressed at {sims} sims: {} < {last}",
                outcome.utility
            );
            last = outcome.utility;
        }
    }

    #[test]
    fn weight_scaling_leaves_the_argmax_alone() {
        // Scaling every weight by the same factor scales all utilities
        // linearly. The exploration constant is on the utility scale, so it
        // scales along; then every comparison the search makes — UCT
        // selection, rollout argmax, incumbent replacement — is unchanged
        // and the same plan falls out. (The factor is a power of two so the
        // scaling is exact in floating point.)
        let feed = toy_feed();
        let state = PlaybackState::session_start(ChunkId::new(0, 0), 1000);
        let device = DeviceModel::default();
        let bw = BandwidthModel::constant(1000);
        let cfg = PlannerConfig { horizon_chunks: 8, simulations: 500, ..PlannerConfig::default() };
        let scaled_cfg = PlannerConfig {
            weights: Weights { quality: 4.0, variation: 4.0, stall: 12.0, bandwidth: 1.2 },
            exploration: 4.0,
            ..cfg
        };
        let plain = plan_mcts(&feed, &device, &bw, &state, &cfg).unwrap();
        let scaled = plan_mcts(&feed, &device, &bw, &state, &scaled_cfg).unwrap();
        assert_eq!(plain.plan, scaled.plan);
        assert!((scaled.utility - 4.0 * plain.utility).abs() < 1e-9);
    }

    #[test]
    fn empty_horizon_plans_nothing() {
        let feed = gen_feed(&FeedSpec { videos: 1, chunks_per_video: 2, ..FeedSpec::default() }, 0);
        let mut state = PlaybackState::session_start(ChunkId::new(0, 0), 200);
        state.buffered.insert(ChunkId::new(0, 0), 0);
        state.pending.insert(ChunkId::new(0, 1), 0);
        let outcome = plan_mcts(
            &feed,
            &DeviceModel::default(),
            &BandwidthModel::constant(1000),
            &state,
            &PlannerConfig::default(),
        )
        .unwrap();
        assert!(outcome.plan.is_empty());
        assert_eq!(outcome.utility, 0.0);
    }

    #[test]
    fn fully_blocked_state_is_an_error() {
        // The neural unit is busy for ages and the device has no video
        // decoder at all, so every candidate stalls on compute.
        let feed = toy_feed();
        let mut state = PlaybackState::session_start(ChunkId::new(0, 0), 1000);
        state
            .unit_free_at
            .insert(crate::model::UnitId::NeuralAccel, 1_000_000);
        let device = DeviceModel {
            units: [crate::model::UnitId::Network, crate::model::UnitId::NeuralAccel]
                .into_iter()
                .collect(),
        };
        let err = plan_mcts(
            &feed,
            &device,
            &BandwidthModel::constant(1000),
            &state,
            &PlannerConfig::default(),
        )
        .unwrap_err();
        assert_eq!(err, PlanError::InfeasibleAllPruned);
    }
}
