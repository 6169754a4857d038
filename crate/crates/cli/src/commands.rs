//! Command implementations. Each validates every referenced path up front,
//! runs the wrapped library call, renders the report, and hands back the
//! exit code: 0, or 2 when planning was infeasible and the report shows the
//! fallback.

use std::fs;
use std::path::{Path, PathBuf};

use preload_core::exec::ExecMode;
use preload_core::model::{BandwidthModel, ChunkId, Feed, StrategyId};
use preload_core::planner::{
    fallback_plan, plan_bruteforce, plan_fixed_nextk_baseline, plan_mcts,
    plan_sequential_baseline, predict_bandwidth, BruteForceMode, PlanError, PlanOutcome,
    SearchStats,
};
use preload_core::scoring::plan_utility;
use preload_core::sim::{chunk_size_sweep, compare_strategies, run_session, SimConfig};
use preload_core::timeline::{evaluate_plan, PlaybackState, ScheduleResult};
use preload_core::traceio::{
    gen_bandwidth, gen_feed, gen_sessions, load_bandwidth_csv, load_manifest, load_sessions_csv,
    save_bandwidth_csv, save_manifest, save_sessions_csv, BandwidthPattern, FeedSpec, SessionSpec,
};

use crate::config::resolve;
use crate::report;
use crate::{Cli, CliError, Command, FormatArg, PlanStrategyArg};

pub fn run(cli: Cli) -> Result<u8, CliError> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Plan {
            manifest,
            bandwidth,
            strategy,
            enumeration_limit,
            planner,
            sim,
            format,
            output,
        } => {
            let resolved = resolve(config, &planner, &sim)?;
            let (report, code) = cmd_plan(
                &manifest,
                &bandwidth,
                strategy,
                enumeration_limit,
                &resolved.sim,
                format,
            )?;
            emit(&report, output.as_deref())?;
            Ok(code)
        }
        Command::Simulate {
            manifest,
            bandwidth,
            sessions,
            strategy,
            trace_id,
            planner,
            sim,
            format,
            output,
        } => {
            let resolved = resolve(config, &planner, &sim)?;
            let report = cmd_simulate(
                &manifest,
                &bandwidth,
                &sessions,
                strategy.into(),
                trace_id.as_deref(),
                &resolved.sim,
                format,
            )?;
            emit(&report, output.as_deref())?;
            Ok(0)
        }
        Command::Compare {
            manifest,
            bandwidth,
            sessions,
            strategies,
            planner,
            sim,
            exec,
            format,
            output,
        } => {
            let resolved = resolve(config, &planner, &sim)?;
            let strategies: Vec<StrategyId> = strategies.into_iter().map(Into::into).collect();
            let report = cmd_compare(
                &manifest,
                &bandwidth,
                &sessions,
                &strategies,
                &resolved.sim,
                exec.into(),
                format,
            )?;
            emit(&report, output.as_deref())?;
            Ok(0)
        }
        Command::Sweep {
            manifest,
            bandwidth,
            sessions,
            strategy,
            scales,
            planner,
            sim,
            exec,
            format,
            output,
        } => {
            let resolved = resolve(config, &planner, &sim)?;
            let report = cmd_sweep(
                &manifest,
                &bandwidth,
                &sessions,
                strategy.into(),
                &scales,
                &resolved.sim,
                exec.into(),
                format,
            )?;
            emit(&report, output.as_deref())?;
            Ok(0)
        }
        Command::Gen {
            out_dir,
            videos,
            chunks_per_video,
            playout_ms,
            no_prompt,
            size_jitter,
            pattern,
            duration_ms,
            sessions,
            full_watch,
            continue_prob,
            min_watch_ms,
            seed,
        } => {
            let report = cmd_gen(
                &out_dir,
                FeedSpec {
                    videos,
                    chunks_per_video,
                    playout_ms,
                    include_prompt: !no_prompt,
                    size_jitter,
                },
                &pattern,
                duration_ms,
                SessionSpec {
                    sessions,
                    full_watch_probability: full_watch,
                    continue_probability: continue_prob,
                    min_watch_ms,
                },
                seed,
            )?;
            print!("{report}");
            Ok(0)
        }
    }
}

fn emit(report: &str, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, report)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display()))),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::input(format!("{what} not found: {}", path.display())))
    }
}

fn first_chunk(feed: &Feed) -> Result<ChunkId, CliError> {
    feed.videos
        .first()
        .and_then(|v| v.chunks.first())
        .map(|c| c.id)
        .ok_or_else(|| CliError::input("manifest has no chunks"))
}

fn load_world(manifest: &Path, bandwidth: &Path) -> Result<(Feed, BandwidthModel), CliError> {
    require_file(manifest, "manifest")?;
    require_file(bandwidth, "bandwidth trace")?;
    Ok((load_manifest(manifest)?, load_bandwidth_csv(bandwidth)?))
}

fn cmd_plan(
    manifest: &Path,
    bandwidth: &Path,
    strategy: PlanStrategyArg,
    enumeration_limit: Option<u128>,
    cfg: &SimConfig,
    format: FormatArg,
) -> Result<(String, u8), CliError> {
    let (feed, bw) = load_world(manifest, bandwidth)?;
    let device = Default::default();
    let state = PlaybackState::session_start(first_chunk(&feed)?, cfg.startup_delay_ms);
    let planner = &cfg.planner;

    let (label, result) = match strategy {
        PlanStrategyArg::Mcts => ("mcts", plan_mcts(&feed, &device, &bw, &state, planner)),
        PlanStrategyArg::Bruteforce => (
            "bruteforce",
            plan_bruteforce(
                &feed,
                &device,
                &bw,
                &state,
                planner,
                BruteForceMode::Pruned,
                enumeration_limit,
            ),
        ),
        PlanStrategyArg::BruteforceExhaustive => (
            "bruteforce-exhaustive",
            plan_bruteforce(
                &feed,
                &device,
                &bw,
                &state,
                planner,
                BruteForceMode::Exhaustive,
                enumeration_limit,
            ),
        ),
        PlanStrategyArg::Sequential => {
            ("sequential", plan_sequential_baseline(&feed, &device, &bw, &state, planner))
        }
        PlanStrategyArg::FixedNextK => (
            "fixed-next-k",
            plan_fixed_nextk_baseline(
                &feed,
                &device,
                &bw,
                &state,
                planner,
                cfg.fixed_next_k,
                cfg.bitrate_rule,
            ),
        ),
    };

    let predicted = predict_bandwidth(&bw, state.now);
    let (outcome, note, code) = match result {
        Ok(outcome) => (outcome, None, 0),
        // Nothing admissible: report the safe in-order fallback instead and
        // signal it via the exit code.
        Err(PlanError::InfeasibleAllPruned) => {
            let plan = fallback_plan(&feed, &device, &state, planner.horizon_chunks);
            let schedule = evaluate_plan(&plan, &device, &predicted, &state, &feed)?;
            let utility = plan_utility(&schedule, &feed, &planner.weights, state.prev_quality);
            let outcome = PlanOutcome { plan, utility, stats: SearchStats::default() };
            (outcome, Some("no admissible plan; showing the safe in-order fallback"), 2)
        }
        Err(e) => return Err(e.into()),
    };
    let schedule: ScheduleResult = evaluate_plan(&outcome.plan, &device, &predicted, &state, &feed)?;

    let report = match format {
        FormatArg::Text => report::plan_text(label, &outcome, &schedule, &feed, note),
        FormatArg::Csv => report::plan_csv(&outcome, &schedule, &feed),
        FormatArg::JsonSummary => report::plan_json(label, &outcome, &schedule, &feed, note),
        FormatArg::EventLog => {
            return Err(CliError::input("--format event-log is not supported by `plan`"))
        }
    };
    Ok((report, code))
}

fn cmd_simulate(
    manifest: &Path,
    bandwidth: &Path,
    sessions: &Path,
    strategy: StrategyId,
    trace_id: Option<&str>,
    cfg: &SimConfig,
    format: FormatArg,
) -> Result<String, CliError> {
    let (feed, bw) = load_world(manifest, bandwidth)?;
    require_file(sessions, "session trace")?;
    let mut traces = load_sessions_csv(sessions)?;
    if let Some(id) = trace_id {
        traces.retain(|t| t.id == id);
        if traces.is_empty() {
            return Err(CliError::input(format!("no trace with id {id:?}")));
        }
    }

    if format == FormatArg::EventLog {
        if traces.len() != 1 {
            return Err(CliError::input(format!(
                "--format event-log needs exactly one trace; got {} (use --trace-id)",
                traces.len(),
            )));
        }
        let (_, log) = run_session(&feed, &Default::default(), &bw, &traces[0], strategy, cfg)?;
        return Ok(log.to_lines());
    }

    let mut rows = Vec::with_capacity(traces.len());
    for trace in &traces {
        let (metrics, _) = run_session(&feed, &Default::default(), &bw, trace, strategy, cfg)?;
        rows.push(metrics);
    }
    match format {
        FormatArg::Csv => Ok(report::sessions_csv(&rows)),
        FormatArg::JsonSummary => Ok(report::simulate_json(&rows)),
        FormatArg::Text | FormatArg::EventLog => {
            Err(CliError::input("`simulate` reports as csv, json-summary, or event-log"))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    manifest: &Path,
    bandwidth: &Path,
    sessions: &Path,
    strategies: &[StrategyId],
    cfg: &SimConfig,
    exec: ExecMode,
    format: FormatArg,
) -> Result<String, CliError> {
    let (feed, bw) = load_world(manifest, bandwidth)?;
    require_file(sessions, "session trace")?;
    let traces = load_sessions_csv(sessions)?;
    let report =
        compare_strategies(&feed, &Default::default(), &bw, &traces, strategies, cfg, exec)?;
    match format {
        FormatArg::Csv => Ok(report::compare_csv(&report)),
        FormatArg::JsonSummary => Ok(report::compare_json(&report)),
        _ => Err(CliError::input("`compare` reports as csv or json-summary")),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    manifest: &Path,
    bandwidth: &Path,
    sessions: &Path,
    strategy: StrategyId,
    scales: &[f64],
    cfg: &SimConfig,
    exec: ExecMode,
    format: FormatArg,
) -> Result<String, CliError> {
    let (feed, bw) = load_world(manifest, bandwidth)?;
    require_file(sessions, "session trace")?;
    let traces = load_sessions_csv(sessions)?;
    let rows = chunk_size_sweep(
        &feed,
        &Default::default(),
        &bw,
        &traces,
        strategy,
        scales,
        cfg,
        exec,
    )?;
    match format {
        FormatArg::Csv => Ok(report::sweep_csv(&rows)),
        FormatArg::JsonSummary => Ok(report::sweep_json(&strategy.to_string(), &rows)),
        _ => Err(CliError::input("`sweep` reports as csv or json-summary")),
    }
}

fn parse_pattern(s: &str) -> Result<BandwidthPattern, CliError> {
    let usage = || {
        CliError::input(format!(
            "unrecognized pattern {s:?}; expected constant:KBPS, step:LOW,HIGH,PERIOD_MS, \
             sawtooth:MIN,MAX,PERIOD_MS,STEP_MS, or randomwalk:START,MIN,MAX,STEP_MS,MAX_DELTA_KBPS"
        ))
    };
    let (kind, args) = s.split_once(':').ok_or_else(usage)?;
    let nums: Vec<u64> = args
        .split(',')
        .map(|p| p.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage())?;
    match (kind, nums.as_slice()) {
        ("constant", &[kbps]) => Ok(BandwidthPattern::Constant { kbps }),
        ("step", &[low_kbps, high_kbps, period_ms]) => {
            Ok(BandwidthPattern::Step { low_kbps, high_kbps, period_ms })
        }
        ("sawtooth", &[min_kbps, max_kbps, period_ms, step_ms]) => {
            Ok(BandwidthPattern::Sawtooth { min_kbps, max_kbps, period_ms, step_ms })
        }
        ("randomwalk", &[start_kbps, min_kbps, max_kbps, step_ms, max_delta_kbps]) => {
            Ok(BandwidthPattern::RandomWalk {
                start_kbps,
                min_kbps,
                max_kbps,
                step_ms,
                max_delta_kbps,
            })
        }
        _ => Err(usage()),
    }
}

fn cmd_gen(
    out_dir: &PathBuf,
    feed_spec: FeedSpec,
    pattern: &str,
    duration_ms: u64,
    session_spec: SessionSpec,
    seed: u64,
) -> Result<String, CliError> {
    let pattern = parse_pattern(pattern)?;
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::input(format!("{}: {e}", out_dir.display())))?;

    let feed = gen_feed(&feed_spec, seed);
    let bw = gen_bandwidth(&pattern, duration_ms, seed);
    let traces = gen_sessions(&session_spec, &feed, seed);

    let manifest_path = out_dir.join("manifest.json");
    let bandwidth_path = out_dir.join("bandwidth.csv");
    let sessions_path = out_dir.join("sessions.csv");
    save_manifest(&manifest_path, &feed)?;
    save_bandwidth_csv(&bandwidth_path, &bw)?;
    save_sessions_csv(&sessions_path, &traces)?;

    Ok(format!(
        "wrote {} ({} videos x {} chunks)\nwrote {} ({} samples)\nwrote {} ({} sessions)\n",
        manifest_path.display(),
        feed_spec.videos,
        feed_spec.chunks_per_video,
        bandwidth_path.display(),
        bw.samples().len(),
        sessions_path.display(),
        traces.len(),
    ))
}
