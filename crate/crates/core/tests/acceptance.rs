//! The acceptance gate: eight end-to-end checks, one test each. Every test
//! finishes by printing a single `criterion N … PASS` line (or panics with
//! the matching FAIL line), so the whole gate reads as a checklist:
//!
//! ```text
//! cargo test -p preload-core --test acceptance -- --nocapture
//! ```
//!
//! Each check pins concrete numbers — hand-derived schedule tables, frozen
//! fixtures, exact seeds and tolerances — so a regression anywhere in the
//! model, timeline, scoring, planners, or simulator trips at least one line
//! here. Nothing in this file is tuned at runtime; every threshold is a
//! literal.

use preload_core::exec::ExecMode;
use preload_core::model::{
    BandwidthModel, Chunk, ChunkId, DeviceModel, Feed, Plan, PlanStep, StrategyId, VideoManifest,
};
use preload_core::planner::{
    enumeration_size, exact_optimum, plan_bruteforce, plan_mcts, plan_sequential_baseline,
    predict_bandwidth, BitrateRule, BruteForceMode, PlanError, DEFAULT_ENUMERATION_LIMIT,
};
use preload_core::scoring::plan_utility;
use preload_core::sim::{
    chunk_size_sweep, compare_strategies, run_session, ComparisonReport, SimConfig,
};
use preload_core::timeline::{compute_stall_of, evaluate_plan, PlaybackState, ScheduleResult};
use preload_core::traceio::{
    gen_bandwidth, gen_feed, gen_sessions, parse_manifest, pixel_variant, prompt_variant,
    BandwidthPattern, FeedSpec, SessionSpec,
};
use preload_core::PlannerConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

/// Prints the one-line verdict, or panics with it so the failure output
/// carries the same line.
fn verdict(n: u32, name: &str, ok: bool, detail: &str) {
    let line = format!("criterion {n} ({name}): {} — {detail}", if ok { "PASS" } else { "FAIL" });
    println!("{line}");
    assert!(ok, "{line}");
}

// ---------------------------------------------------------------------------
// Shared toy world: eight 1 s chunks, pixel variant (700 ms download,
// instant decode) and generated variant (200 ms download, 1,500 ms on the
// neural unit), constant 1,000 kbps, 1,000 ms startup allowance.
// ---------------------------------------------------------------------------

const PIXEL: usize = 0;
const PROMPT: usize = 1;

fn toy_feed() -> Feed {
    parse_manifest(include_str!("fixtures/ooo_toy.json")).unwrap()
}

fn toy_evaluate(feed: &Feed, order: &[(u32, usize)]) -> ScheduleResult {
    let plan = Plan::new(
        order
            .iter()
            .map(|&(c, v)| PlanStep { chunk: ChunkId::new(0, c), variant_index: v })
            .collect(),
    );
    let bw = BandwidthModel::constant(1000);
    let state = PlaybackState::session_start(ChunkId::new(0, 0), 1000);
    evaluate_plan(&plan, &DeviceModel::default(), &bw, &state, feed).unwrap()
}

fn rows(schedule: &ScheduleResult) -> Vec<(u64, u64, u64, u64)> {
    schedule
        .timings
        .iter()
        .map(|t| (t.download_end, t.decode_end, t.deadline, t.stall_ms))
        .collect()
}

/// Millisecond-exact schedule arithmetic: the serial-download, per-unit
/// decode, and deadline/stall recursions reproduce hand-derived tables.
#[test]
fn criterion_1_schedule_arithmetic_is_exact() {
    let feed = toy_feed();

    // In playback order with generated variants at chunks 3, 5, 6: the
    // densest in-order placement that stays stall-free.
    let in_order: Vec<(u32, usize)> = (0..8)
        .map(|c| (c, if c == 3 || c == 5 || c == 6 { PROMPT } else { PIXEL }))
        .collect();
    let got_a = rows(&toy_evaluate(&feed, &in_order));
    let want_a = vec![
        (700, 700, 1000, 0),
        (1400, 1400, 2000, 0),
        (2100, 2100, 3000, 0),
        (2300, 3800, 4000, 0), // neural decode starts at 2,300
        (3000, 3000, 5000, 0),
        (3200, 5300, 6000, 0), // queued behind chunk 3's decode
        (3400, 6800, 7000, 0), // queued again; 200 ms of slack left
        (4100, 4100, 8000, 0),
    ];

    // Out of order with four generated chunks: prompts pulled to the front
    // so the neural unit starts at 200 ms instead of 2,300 ms.
    let ooo = [
        (1, PROMPT),
        (0, PIXEL),
        (3, PROMPT),
        (4, PROMPT),
        (6, PROMPT),
        (2, PIXEL),
        (5, PIXEL),
        (7, PIXEL),
    ];
    let got_b = rows(&toy_evaluate(&feed, &ooo));
    let want_b = vec![
        (900, 900, 1000, 0),
        (200, 1700, 2000, 0),
        (2200, 2200, 3000, 0),
        (1100, 3200, 4000, 0),
        (1300, 4700, 5000, 0),
        (2900, 2900, 6000, 0),
        (1500, 6200, 7000, 0),
        (3600, 3600, 8000, 0),
    ];

    // Overload witness: four generated chunks in order overrun the neural
    // queue, and every late chunk is late because of decode, not network.
    let late: Vec<(u32, usize)> =
        (0..8).map(|c| (c, if c >= 4 { PROMPT } else { PIXEL })).collect();
    let overloaded = toy_evaluate(&feed, &late);
    let attributed = overloaded.total_stall_ms > 0
        && overloaded
            .timings
            .iter()
            .filter(|t| t.stall_ms > 0)
            .all(|t| t.compute_stall_ms == t.stall_ms);

    let ok = got_a == want_a && got_b == want_b && attributed;
    verdict(
        1,
        "schedule arithmetic exact to the millisecond",
        ok,
        &format!(
            "in-order table {}, out-of-order table {}, decode-attributed overload {}",
            if got_a == want_a { "exact" } else { "MISMATCH" },
            if got_b == want_b { "exact" } else { "MISMATCH" },
            attributed,
        ),
    );
}

/// The headline scheduling win, reproduced end to end: in playback order at
/// most three generated chunks fit without stalling, and the tree search
/// finds an out-of-order plan that fits four in the same window.
#[test]
fn criterion_2_search_beats_the_in_order_generated_cap() {
    let feed = toy_feed();

    // Exhaustive over all 2^8 in-order variant assignments.
    let mut in_order_cap = 0u32;
    for mask in 0u32..256 {
        let order: Vec<(u32, usize)> = (0..8)
            .map(|c| (c, if mask & (1 << c) != 0 { PROMPT } else { PIXEL }))
            .collect();
        if toy_evaluate(&feed, &order).total_stall_ms == 0 {
            in_order_cap = in_order_cap.max(mask.count_ones());
        }
    }

    let bw = BandwidthModel::constant(1000);
    let state = PlaybackState::session_start(ChunkId::new(0, 0), 1000);
    let cfg = PlannerConfig { horizon_chunks: 8, ..PlannerConfig::default() };
    let outcome = plan_mcts(&feed, &DeviceModel::default(), &bw, &state, &cfg).unwrap();
    let prompts = outcome
        .plan
        .steps
        .iter()
        .filter(|s| feed.chunk(s.chunk).unwrap().variants[s.variant_index].codec.is_prompt())
        .count();
    let predicted = predict_bandwidth(&bw, state.now);
    let schedule =
        evaluate_plan(&outcome.plan, &DeviceModel::default(), &predicted, &state, &feed).unwrap();

    let ok = in_order_cap == 3 && prompts >= 4 && schedule.total_stall_ms == 0;
    verdict(
        2,
        "out-of-order search fits a fourth generated chunk",
        ok,
        &format!(
            "in-order cap {in_order_cap} (want 3), search fit {prompts} stall-free \
             (want >= 4, stall {} ms)",
            schedule.total_stall_ms,
        ),
    );
}

// ---------------------------------------------------------------------------
// Randomized planning instances for the oracle-equivalence check.
// ---------------------------------------------------------------------------

/// Four 1 s chunks, three variants each (low pixel, high pixel, generated),
/// sizes jittered ±20%, constant link of 300–1,500 kbps, startup allowance
/// 500–1,200 ms.
fn small_instance(seed: u64) -> (Feed, BandwidthModel, PlaybackState) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chunks = (0..4)
        .map(|c| {
            let mut variants = vec![
                pixel_variant(200, 1000),
                pixel_variant(900, 1000),
                prompt_variant(1000),
            ];
            for v in &mut variants {
                let factor = 1.0 + rng.random_range(-0.2..=0.2);
                v.size_bytes = ((v.size_bytes as f64 * factor).round() as u64).max(1);
            }
            Chunk { id: ChunkId::new(0, c), playout_ms: 1000, variants }
        })
        .collect();
    let feed = Feed::new(vec![VideoManifest { video_id: "i".into(), chunks }]);
    let bw = BandwidthModel::constant(rng.random_range(300..=1500));
    let state = PlaybackState::session_start(ChunkId::new(0, 0), rng.random_range(500..=1200));
    (feed, bw, state)
}

/// On instances small enough to enumerate, the tree search recovers the
/// enumerated optimum almost always and never falls below the greedy
/// in-order baseline.
#[test]
fn criterion_3_search_matches_the_enumerated_optimum() {
    let device = DeviceModel::default();
    let mut matches = 0u32;
    let mut below_baseline = 0u32;
    let mut infeasible = 0u32;
    for seed in 0..100u64 {
        let (feed, bw, state) = small_instance(seed);
        let cfg = PlannerConfig {
            horizon_chunks: 4,
            simulations: 20_000,
            seed: seed ^ 0x5eed,
            ..PlannerConfig::default()
        };
        let truth =
            match plan_bruteforce(&feed, &device, &bw, &state, &cfg, BruteForceMode::Pruned, None)
            {
                Ok(t) => t,
                Err(PlanError::InfeasibleAllPruned) => {
                    infeasible += 1;
                    continue;
                }
                Err(e) => panic!("seed {seed}: {e}"),
            };
        let got = plan_mcts(&feed, &device, &bw, &state, &cfg).unwrap();
        if (got.utility - truth.utility).abs() < 1e-9 {
            matches += 1;
        }
        let seq = plan_sequential_baseline(&feed, &device, &bw, &state, &cfg).unwrap();
        if got.utility < seq.utility - 1e-9 {
            below_baseline += 1;
        }
    }
    let ok = matches >= 95 && below_baseline == 0 && infeasible == 0;
    verdict(
        3,
        "search matches the enumerated optimum",
        ok,
        &format!(
            "{matches}/100 exact utility matches (want >= 95), \
             {below_baseline} below the in-order baseline (want 0), \
             {infeasible} infeasible (want 0)"
        ),
    );
}

// ---------------------------------------------------------------------------
// The frozen large instance: 7 chunks x 6 variants, too big to enumerate.
// ---------------------------------------------------------------------------

/// Ground truth for `fixtures/paper_instance.json`, established once by the
/// branch-and-bound enumerator (see the ignored regeneration test below) and
/// frozen.
#[derive(Deserialize)]
struct FrozenOptimum {
    bandwidth_kbps: u64,
    horizon_chunks: usize,
    startup_allowance_ms: u64,
    steps: Vec<PlanStep>,
    utility: f64,
}

fn large_instance() -> (Feed, BandwidthModel, PlaybackState, FrozenOptimum) {
    let feed = parse_manifest(include_str!("fixtures/paper_instance.json")).unwrap();
    let frozen: FrozenOptimum =
        serde_json::from_str(include_str!("fixtures/paper_instance_optimum.json")).unwrap();
    let bw = BandwidthModel::constant(frozen.bandwidth_kbps);
    let state =
        PlaybackState::session_start(ChunkId::new(0, 0), frozen.startup_allowance_ms);
    (feed, bw, state, frozen)
}

/// At 7 chunks x 6 variants the plan space is ~1.4e9, the enumerator
/// refuses, and the tree search still finds the frozen optimum within a
/// 120,000-simulation budget.
#[test]
fn criterion_4_search_scales_past_the_enumeration_guard() {
    let device = DeviceModel::default();
    let (feed, bw, state, frozen) = large_instance();
    let cfg = PlannerConfig {
        horizon_chunks: frozen.horizon_chunks,
        simulations: 120_000,
        seed: 7,
        ..PlannerConfig::default()
    };

    // 7! orderings x 6^7 variant assignments.
    let size = enumeration_size(&feed, &device, &state, cfg.horizon_chunks);
    let size_ok = size == 1_410_877_440;
    let refused = matches!(
        plan_bruteforce(&feed, &device, &bw, &state, &cfg, BruteForceMode::Pruned, None),
        Err(PlanError::SpaceTooLarge { size: s, limit })
            if s == size && limit == DEFAULT_ENUMERATION_LIMIT
    );

    // The frozen plan must still evaluate to its frozen utility (fixture
    // self-consistency), and the search must reach that utility.
    let predicted = predict_bandwidth(&bw, state.now);
    let frozen_plan = Plan::new(frozen.steps.clone());
    let schedule = evaluate_plan(&frozen_plan, &device, &predicted, &state, &feed).unwrap();
    let frozen_eval = plan_utility(&schedule, &feed, &cfg.weights, state.prev_quality);
    let consistent = (frozen_eval - frozen.utility).abs() < 1e-9;

    let outcome = plan_mcts(&feed, &device, &bw, &state, &cfg).unwrap();
    let gap = outcome.utility - frozen.utility;
    let hit = gap.abs() < 1e-9;

    let ok = size_ok && refused && consistent && hit;
    verdict(
        4,
        "search finds the frozen optimum the enumerator refuses",
        ok,
        &format!(
            "space {size} (~1.4e9) {}, fixture utility {:.7} {}, search gap {gap:+.2e} \
             in {} simulations",
            if refused { "refused" } else { "NOT REFUSED" },
            frozen.utility,
            if consistent { "re-derived" } else { "INCONSISTENT" },
            cfg.simulations,
        ),
    );
}

/// Regenerates the frozen optimum with the branch-and-bound enumerator.
/// Slow-ish and redundant in CI, so ignored; run it after any intentional
/// change to scoring or scheduling and refresh the fixture it prints.
#[test]
#[ignore = "fixture regeneration; run manually after intentional scoring/timeline changes"]
fn regenerate_large_instance_optimum() {
    let device = DeviceModel::default();
    let (feed, bw, state, frozen) = large_instance();
    let cfg = PlannerConfig {
        horizon_chunks: frozen.horizon_chunks,
        ..PlannerConfig::default()
    };
    let best = exact_optimum(&feed, &device, &bw, &state, &cfg).unwrap();
    if (best.utility - frozen.utility).abs() > 1e-12 || best.plan.steps != frozen.steps {
        let fresh = serde_json::json!({
            "bandwidth_kbps": frozen.bandwidth_kbps,
            "horizon_chunks": frozen.horizon_chunks,
            "startup_allowance_ms": frozen.startup_allowance_ms,
            "steps": best.plan.steps,
            "utility": best.utility,
        });
        panic!(
            "fixture is stale; refresh paper_instance_optimum.json with:\n{}",
            serde_json::to_string_pretty(&fresh).unwrap()
        );
    }
}

// ---------------------------------------------------------------------------
// Fuzzed instances for the pruning-soundness sweep.
// ---------------------------------------------------------------------------

/// A random planning instance: 3–8 chunks, a random subset of pixel rungs
/// plus (usually) the generated variant, sizes jittered ±30%, one of four
/// bandwidth shapes, random startup allowance and horizon.
fn fuzz_instance(seed: u64) -> (Feed, BandwidthModel, PlaybackState, PlannerConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_chunks = rng.random_range(3..=8);
    let playout: u64 = *[500, 1000, 2000].iter().nth(rng.random_range(0..3)).unwrap();
    let chunks = (0..n_chunks)
        .map(|c| {
            let mut variants = Vec::new();
            for &rate in &[200u32, 400, 600, 900, 1200] {
                if rng.random_bool(0.5) {
                    variants.push(pixel_variant(rate, playout));
                }
            }
            if variants.is_empty() || rng.random_bool(0.6) {
                variants.push(prompt_variant(playout));
            }
            if variants.len() == 1 && variants[0].codec.is_prompt() && rng.random_bool(0.5) {
                variants.push(pixel_variant(200, playout));
            }
            for v in &mut variants {
                let factor = 1.0 + rng.random_range(-0.3..=0.3);
                v.size_bytes = ((v.size_bytes as f64 * factor).round() as u64).max(1);
            }
            Chunk { id: ChunkId::new(0, c), playout_ms: playout, variants }
        })
        .collect();
    let feed = Feed::new(vec![VideoManifest { video_id: "f".into(), chunks }]);
    let pattern = match rng.random_range(0..4) {
        0 => BandwidthPattern::Constant { kbps: rng.random_range(150..=2000) },
        1 => BandwidthPattern::Step {
            low_kbps: rng.random_range(100..=500),
            high_kbps: rng.random_range(600..=2500),
            period_ms: rng.random_range(500..=4000),
        },
        2 => BandwidthPattern::Sawtooth {
            min_kbps: rng.random_range(100..=400),
            max_kbps: rng.random_range(500..=2500),
            period_ms: rng.random_range(1000..=5000),
            step_ms: 250,
        },
        _ => BandwidthPattern::RandomWalk {
            start_kbps: rng.random_range(300..=1500),
            min_kbps: 100,
            max_kbps: 3000,
            step_ms: 500,
            max_delta_kbps: rng.random_range(50..=400),
        },
    };
    let bw = gen_bandwidth(&pattern, 60_000, rng.random());
    let state = PlaybackState::session_start(ChunkId::new(0, 0), rng.random_range(300..=1500));
    let cfg = PlannerConfig {
        horizon_chunks: rng.random_range(2..=5),
        simulations: 300,
        seed: rng.random(),
        ..PlannerConfig::default()
    };
    (feed, bw, state, cfg)
}

/// Admissibility is sound: across 1,000 fuzzed instances, every plan the
/// search or the pruned enumerator returns has zero decode-attributed stall
/// on every planned chunk under the predicted bandwidth, and the claimed
/// utility re-derives from the schedule.
#[test]
fn criterion_5_surviving_plans_never_stall_on_decode() {
    let device = DeviceModel::default();
    let mut checked = 0u32;
    let mut infeasible = 0u32;
    let mut stall_violations = 0u32;
    let mut utility_violations = 0u32;
    for seed in 0..1000u64 {
        let (feed, bw, state, cfg) = fuzz_instance(seed);
        let predicted = predict_bandwidth(&bw, state.now);
        let mut plans = Vec::new();
        match plan_mcts(&feed, &device, &bw, &state, &cfg) {
            Ok(o) => plans.push(o),
            Err(PlanError::InfeasibleAllPruned) => infeasible += 1,
            Err(e) => panic!("seed {seed}: {e}"),
        }
        match plan_bruteforce(&feed, &device, &bw, &state, &cfg, BruteForceMode::Pruned, None) {
            Ok(o) => plans.push(o),
            Err(PlanError::InfeasibleAllPruned) => {}
            Err(e) => panic!("seed {seed}: {e}"),
        }
        for outcome in plans {
            let schedule =
                evaluate_plan(&outcome.plan, &device, &predicted, &state, &feed).unwrap();
            checked += 1;
            for step in &outcome.plan.steps {
                if compute_stall_of(schedule.timing_for(step.chunk).unwrap()) != 0 {
                    stall_violations += 1;
                }
            }
            let u = plan_utility(&schedule, &feed, &cfg.weights, state.prev_quality);
            if (u - outcome.utility).abs() > 1e-9 {
                utility_violations += 1;
            }
        }
    }
    let ok = stall_violations == 0 && utility_violations == 0 && checked >= 1000;
    verdict(
        5,
        "surviving plans never stall on decode",
        ok,
        &format!(
            "{checked} plans checked ({infeasible} infeasible instances): \
             {stall_violations} decode-stall violations, \
             {utility_violations} utility mismatches (want 0 and 0)"
        ),
    );
}

/// Shrinking every variant's payload shrinks both stall and waste: halved
/// or better at scale 0.3, monotone across {1.0, 0.7, 0.5, 0.3}.
#[test]
fn criterion_6_smaller_chunks_cut_stall_and_waste() {
    let device = DeviceModel::default();
    let feed = gen_feed(
        &FeedSpec {
            videos: 4,
            chunks_per_video: 8,
            include_prompt: false,
            size_jitter: 0.1,
            ..FeedSpec::default()
        },
        11,
    );
    let bw = gen_bandwidth(
        &BandwidthPattern::Step { low_kbps: 150, high_kbps: 2000, period_ms: 3000 },
        240_000,
        0,
    );
    let traces = gen_sessions(
        &SessionSpec {
            sessions: 16,
            full_watch_probability: 0.25,
            continue_probability: 0.9,
            min_watch_ms: 1500,
        },
        &feed,
        31,
    );
    let cfg = SimConfig {
        startup_delay_ms: 0,
        bitrate_rule: BitrateRule::Lowest,
        ..SimConfig::default()
    };
    let scales = [1.0, 0.7, 0.5, 0.3];
    let rows = chunk_size_sweep(
        &feed,
        &device,
        &bw,
        &traces,
        StrategyId::FixedNextK,
        &scales,
        &cfg,
        ExecMode::Sequential,
    )
    .unwrap();

    let halved = rows[3].mean_stall_ms <= 0.5 * rows[0].mean_stall_ms
        && rows[3].mean_wasted_bytes <= 0.5 * rows[0].mean_wasted_bytes;
    let monotone = rows.windows(2).all(|w| {
        w[1].mean_stall_ms <= w[0].mean_stall_ms + 1e-9
            && w[1].mean_wasted_bytes <= w[0].mean_wasted_bytes + 1e-9
    });
    let ok = halved && monotone;
    verdict(
        6,
        "smaller chunks cut stall and waste",
        ok,
        &format!(
            "stall {:.0} -> {:.0} ms ({:+.0}%), waste {:.0} -> {:.0} B ({:+.0}%), monotone {}",
            rows[0].mean_stall_ms,
            rows[3].mean_stall_ms,
            100.0 * (rows[3].mean_stall_ms / rows[0].mean_stall_ms - 1.0),
            rows[0].mean_wasted_bytes,
            rows[3].mean_wasted_bytes,
            100.0 * (rows[3].mean_wasted_bytes / rows[0].mean_wasted_bytes - 1.0),
            monotone,
        ),
    );
}

// ---------------------------------------------------------------------------
// The bundled stress suite for the closed-loop comparison: six 8-chunk
// hybrid videos, a link that swings 2,000 <-> 150 kbps every 5 s (starting
// high), and 24 viewer sessions, mostly watch-through.
// ---------------------------------------------------------------------------

fn stress_suite() -> (Feed, BandwidthModel, Vec<preload_core::model::SessionTrace>, SimConfig) {
    let feed = gen_feed(
        &FeedSpec { videos: 6, chunks_per_video: 8, size_jitter: 0.1, ..FeedSpec::default() },
        41,
    );
    // The pattern alternates starting with `low_kbps`, so passing the high
    // rate there starts the link in its good phase.
    let bw = gen_bandwidth(
        &BandwidthPattern::Step { low_kbps: 2000, high_kbps: 150, period_ms: 5000 },
        240_000,
        0,
    );
    let traces = gen_sessions(
        &SessionSpec {
            sessions: 24,
            full_watch_probability: 0.7,
            continue_probability: 0.85,
            min_watch_ms: 1500,
        },
        &feed,
        61,
    );
    let cfg = SimConfig {
        planner: PlannerConfig {
            horizon_chunks: 6,
            simulations: 600,
            exploration: 1.0,
            ..PlannerConfig::default()
        },
        startup_delay_ms: 600,
        ..SimConfig::default()
    };
    (feed, bw, traces, cfg)
}

fn print_ratio_table(report: &ComparisonReport) {
    println!(
        "  {:<12} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "strategy", "stall", "waste", "bytes", "quality", "qoe"
    );
    for row in &report.rows {
        println!(
            "  {:<12} {:>7.1}% {:>7.1}% {:>7.1}% {:>7.1}% {:>7.1}%",
            row.strategy.to_string(),
            100.0 * row.ratio.stall_ms,
            100.0 * row.ratio.wasted_bytes,
            100.0 * row.ratio.downloaded_bytes,
            100.0 * row.ratio.mean_quality,
            100.0 * row.ratio.qoe,
        );
    }
}

/// Closed loop, 24 sessions: the search strategy strictly beats the
/// fixed-next-K preloader on stall, waste, and overall session utility.
#[test]
fn criterion_7_search_dominates_the_fixed_lookahead_baseline() {
    let device = DeviceModel::default();
    let (feed, bw, traces, cfg) = stress_suite();
    let report = compare_strategies(
        &feed,
        &device,
        &bw,
        &traces,
        &[StrategyId::FixedNextK, StrategyId::Mcts],
        &cfg,
        ExecMode::Sequential,
    )
    .unwrap();
    print_ratio_table(&report);

    let base = &report.rows[0].mean;
    let mcts = &report.rows[1].mean;
    let ok = mcts.stall_ms < base.stall_ms
        && mcts.wasted_bytes < base.wasted_bytes
        && mcts.qoe > base.qoe;
    verdict(
        7,
        "search dominates the fixed lookahead",
        ok,
        &format!(
            "over {} sessions: stall {:.0} vs {:.0} ms, waste {:.0} vs {:.0} B, \
             qoe {:.2} vs {:.2}",
            traces.len(),
            mcts.stall_ms,
            base.stall_ms,
            mcts.wasted_bytes,
            base.wasted_bytes,
            mcts.qoe,
            base.qoe,
        ),
    );
}

/// Every session's bytes split exactly into played + wasted + leftover, and
/// equal seeds reproduce byte-identical event logs and reports, in both
/// execution modes.
#[test]
fn criterion_8_conservation_and_determinism() {
    let device = DeviceModel::default();
    let (feed, bw, traces, mut cfg) = stress_suite();
    // A lighter planning budget: this check is about accounting and
    // reproducibility, not plan quality.
    cfg.planner.simulations = 200;
    cfg.planner.horizon_chunks = 5;
    let traces = &traces[..6];

    let mut sessions = 0u32;
    let mut conservation_violations = 0u32;
    let mut nondeterminism = 0u32;
    for strategy in [
        StrategyId::Mcts,
        StrategyId::Sequential,
        StrategyId::FixedNextK,
        StrategyId::HybridOff,
    ] {
        for trace in traces {
            let (m1, log1) = run_session(&feed, &device, &bw, trace, strategy, &cfg).unwrap();
            let (m2, log2) = run_session(&feed, &device, &bw, trace, strategy, &cfg).unwrap();
            sessions += 1;
            if m1.downloaded_bytes != m1.played_bytes + m1.wasted_bytes + m1.leftover_bytes {
                conservation_violations += 1;
            }
            if m1 != m2 || log1.to_lines() != log2.to_lines() {
                nondeterminism += 1;
            }
        }
    }

    // Whole-report determinism across execution modes.
    let strategies = [StrategyId::FixedNextK, StrategyId::Mcts];
    let seq =
        compare_strategies(&feed, &device, &bw, traces, &strategies, &cfg, ExecMode::Sequential)
            .unwrap();
    let par =
        compare_strategies(&feed, &device, &bw, traces, &strategies, &cfg, ExecMode::Parallel)
            .unwrap();
    let reports_identical =
        serde_json::to_string(&seq).unwrap() == serde_json::to_string(&par).unwrap();

    let ok = conservation_violations == 0 && nondeterminism == 0 && reports_identical;
    verdict(
        8,
        "byte conservation and determinism",
        ok,
        &format!(
            "{sessions} sessions x 2 runs: {conservation_violations} conservation violations, \
             {nondeterminism} log divergences, cross-mode reports {}",
            if reports_identical { "byte-identical" } else { "DIVERGED" },
        ),
    );
}
