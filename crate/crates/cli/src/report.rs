//! Report rendering. One function per (command, format) pair; all of them
//! are pure string builders so identical inputs give identical bytes.
//!
//! The session CSV schema is fixed and shared by `simulate` and `compare`:
//!
//! ```text
//! strategy,trace_id,stall_ms,wasted_bytes,downloaded_bytes,mean_quality,qoe
//! ```
//!
//! `compare` appends one `mean` and one `ratio` pseudo-trace row per
//! strategy (ratios are normalized to the first strategy's means). Floats
//! print with six decimals.

use std::fmt::Write as _;

use preload_core::model::{ChunkVariant, Feed};
use preload_core::planner::PlanOutcome;
use preload_core::sim::{ComparisonReport, SessionMetrics, SweepRow};
use preload_core::timeline::ScheduleResult;

fn variant_label(v: &ChunkVariant) -> String {
    match v.codec.bitrate_kbps() {
        Some(kbps) => format!("pixel-{kbps}"),
        None => "prompt".to_string(),
    }
}

/// The plan, its predicted schedule, and the search counters, as a table.
pub fn plan_text(
    strategy: &str,
    outcome: &PlanOutcome,
    schedule: &ScheduleResult,
    feed: &Feed,
    note: Option<&str>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "strategy: {strategy}");
    if let Some(note) = note {
        let _ = writeln!(out, "note: {note}");
    }
    let _ = writeln!(
        out,
        "plan: {} steps, utility {:.6}, predicted stall {} ms",
        outcome.plan.steps.len(),
        outcome.utility,
        schedule.total_stall_ms,
    );
    let _ = writeln!(
        out,
        "{:>4}  {:<8} {:<10} {:>10} {:>12} {:>10} {:>8} {:>8}",
        "step", "chunk", "variant", "size_bytes", "download_end", "decode_end", "deadline",
        "stall_ms",
    );
    for (i, step) in outcome.plan.steps.iter().enumerate() {
        let variant = &feed.chunk(step.chunk).expect("planned chunks exist").variants
            [step.variant_index];
        let t = schedule.timing_for(step.chunk).expect("planned chunks are scheduled");
        let _ = writeln!(
            out,
            "{:>4}  {:<8} {:<10} {:>10} {:>12} {:>10} {:>8} {:>8}",
            i + 1,
            step.chunk.to_string(),
            variant_label(variant),
            variant.size_bytes,
            t.download_end,
            t.decode_end,
            t.deadline,
            t.stall_ms,
        );
    }
    let s = &outcome.stats;
    let _ = writeln!(
        out,
        "stats: simulations {}, nodes {}, prefix_evaluations {}, complete_plans {}, horizon {}",
        s.simulations, s.nodes, s.prefix_evaluations, s.complete_plans, s.horizon,
    );
    out
}

/// The predicted schedule as CSV, in download order.
pub fn plan_csv(outcome: &PlanOutcome, schedule: &ScheduleResult, feed: &Feed) -> String {
    let mut out =
        String::from("step,chunk,variant,size_bytes,download_end,decode_end,deadline,stall_ms\n");
    for (i, step) in outcome.plan.steps.iter().enumerate() {
        let variant = &feed.chunk(step.chunk).expect("planned chunks exist").variants
            [step.variant_index];
        let t = schedule.timing_for(step.chunk).expect("planned chunks are scheduled");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            i + 1,
            step.chunk,
            variant_label(variant),
            variant.size_bytes,
            t.download_end,
            t.decode_end,
            t.deadline,
            t.stall_ms,
        );
    }
    out
}

pub fn plan_json(
    strategy: &str,
    outcome: &PlanOutcome,
    schedule: &ScheduleResult,
    feed: &Feed,
    note: Option<&str>,
) -> String {
    let steps: Vec<serde_json::Value> = outcome
        .plan
        .steps
        .iter()
        .map(|step| {
            let variant = &feed.chunk(step.chunk).expect("planned chunks exist").variants
                [step.variant_index];
            let t = schedule.timing_for(step.chunk).expect("planned chunks are scheduled");
            serde_json::json!({
                "chunk": step.chunk.to_string(),
                "variant": variant_label(variant),
                "size_bytes": variant.size_bytes,
                "download_end": t.download_end,
                "decode_end": t.decode_end,
                "deadline": t.deadline,
                "stall_ms": t.stall_ms,
            })
        })
        .collect();
    let mut doc = serde_json::json!({
        "strategy": strategy,
        "utility": outcome.utility,
        "predicted_stall_ms": schedule.total_stall_ms,
        "steps": steps,
        "stats": outcome.stats,
    });
    if let Some(note) = note {
        doc["note"] = serde_json::Value::String(note.to_string());
    }
    pretty(&doc)
}

pub const SESSION_CSV_HEADER: &str =
    "strategy,trace_id,stall_ms,wasted_bytes,downloaded_bytes,mean_quality,qoe";

fn session_row(m: &SessionMetrics) -> String {
    format!(
        "{},{},{},{},{},{:.6},{:.6}",
        m.strategy, m.trace_id, m.total_stall_ms, m.wasted_bytes, m.downloaded_bytes,
        m.mean_quality, m.qoe,
    )
}

pub fn sessions_csv(sessions: &[SessionMetrics]) -> String {
    let mut out = String::from(SESSION_CSV_HEADER);
    out.push('\n');
    for m in sessions {
        out.push_str(&session_row(m));
        out.push('\n');
    }
    out
}

pub fn simulate_json(sessions: &[SessionMetrics]) -> String {
    pretty(&serde_json::json!({ "sessions": sessions }))
}

/// Per-session rows for every strategy, then `mean` and `ratio` rows.
pub fn compare_csv(report: &ComparisonReport) -> String {
    let mut out = String::from(SESSION_CSV_HEADER);
    out.push('\n');
    for row in &report.rows {
        for m in &row.sessions {
            out.push_str(&session_row(m));
            out.push('\n');
        }
    }
    for row in &report.rows {
        let m = &row.mean;
        let _ = writeln!(
            out,
            "{},mean,{:.6},{:.6},{:.6},{:.6},{:.6}",
            row.strategy, m.stall_ms, m.wasted_bytes, m.downloaded_bytes, m.mean_quality, m.qoe,
        );
    }
    for row in &report.rows {
        let r = &row.ratio;
        let _ = writeln!(
            out,
            "{},ratio,{:.6},{:.6},{:.6},{:.6},{:.6}",
            row.strategy, r.stall_ms, r.wasted_bytes, r.downloaded_bytes, r.mean_quality, r.qoe,
        );
    }
    out
}

pub fn compare_json(report: &ComparisonReport) -> String {
    let strategies: Vec<serde_json::Value> = report
        .rows
        .iter()
        .map(|row| {
            serde_json::json!({
                "strategy": row.strategy.to_string(),
                "sessions": row.sessions.len(),
                "mean": row.mean,
                "ratio": row.ratio,
            })
        })
        .collect();
    pretty(&serde_json::json!({
        "baseline": report.rows[0].strategy.to_string(),
        "strategies": strategies,
    }))
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("scale,mean_stall_ms,mean_wasted_bytes,mean_downloaded_bytes\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6}",
            r.scale, r.mean_stall_ms, r.mean_wasted_bytes, r.mean_downloaded_bytes,
        );
    }
    out
}

pub fn sweep_json(strategy: &str, rows: &[SweepRow]) -> String {
    pretty(&serde_json::json!({ "strategy": strategy, "rows": rows }))
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}
