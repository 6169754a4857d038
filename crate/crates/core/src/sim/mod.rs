//! Discrete-event session simulator.
//!
//! [`run_session`] plays one viewer session: chunks download serially over
//! the bandwidth trace, decode on the device's units, and play against the
//! swipe trace, while the chosen strategy replans at session start, after
//! every completed download, after every swipe, and on a fixed timer. The
//! simulator measures what actually happened — realized stalls, bytes
//! downloaded/played/wasted/left over, quality switches, and the session's
//! overall utility — rather than what the planner predicted.
//!
//! Sessions are deterministic given the traces and the seed: every source of
//! randomness derives from `(master_seed, trace id, strategy)`, and the event
//! queue breaks timestamp ties by a fixed kind order (downloads land before
//! decodes finish before playback reacts), then chunk id, then insertion
//! order. Batch helpers ([`compare_strategies`], [`chunk_size_sweep`]) fan
//! sessions out across threads without changing any result.

mod batch;
mod engine;

pub use batch::{
    chunk_size_sweep, compare_strategies, derive_seed, AggregateMetrics, ComparisonReport,
    StrategyReport, SweepRow,
};
pub use engine::run_session;

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::model::{Bytes, ChunkId, ModelError, Ms, StrategyId, UnitId};
use crate::planner::{BitrateRule, PlanError, PlannerConfig};

/// Simulator knobs. The planner config rides along so a session's plans and
/// its realized-utility accounting always use the same weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub planner: PlannerConfig,
    /// Replan at least this often, on top of the event-driven replans.
    pub replan_interval_ms: Ms,
    /// Startup allowance at session start and after a swipe: playback of a
    /// video's first chunk waits at least this long, and the whole wait
    /// counts as stall (flagged per video). Watch-through boundaries are
    /// seamless and get no allowance.
    pub startup_delay_ms: Ms,
    /// Lookahead window of the fixed-next-K baseline.
    pub fixed_next_k: usize,
    /// Bitrate rung rule of the fixed-next-K baseline.
    pub bitrate_rule: BitrateRule,
    /// Root of every session's seed derivation.
    pub master_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            planner: PlannerConfig::default(),
            replan_interval_ms: 500,
            startup_delay_ms: 200,
            fixed_next_k: 3,
            bitrate_rule: BitrateRule::default(),
            master_seed: 0,
        }
    }
}

/// What one simulated session measured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub trace_id: String,
    pub strategy: StrategyId,
    /// All playback waiting, including the startup allowance of every video
    /// the viewer entered by starting or swiping.
    pub total_stall_ms: Ms,
    /// Bytes that crossed the network, including abandoned partial
    /// transfers.
    pub downloaded_bytes: Bytes,
    /// Bytes of chunks that began playback.
    pub played_bytes: Bytes,
    /// Bytes that can never be played: chunks (whole or partial) of videos
    /// the viewer swiped away.
    pub wasted_bytes: Bytes,
    /// Bytes still buffered ahead of the playhead when the session ended.
    pub leftover_bytes: Bytes,
    /// Mean quality over played chunks; 0 when nothing played.
    pub mean_quality: f64,
    /// Adjacent same-video played pairs whose quality differs.
    pub quality_switches: u64,
    /// Sum of per-chunk scores over played chunks, with realized stalls,
    /// under the same weights the strategy planned with.
    pub qoe: f64,
    pub played_chunks: u64,
    /// Played chunks that used a generated (prompt) variant.
    pub generated_chunks_played: u64,
    /// Replans where no admissible plan existed and the safe in-order
    /// fallback was used instead.
    pub fallback_replans: u64,
    pub per_video: Vec<VideoBreakdown>,
}

/// Per-video slice of a session, in viewing order (videos never reached are
/// absent).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoBreakdown {
    pub video_id: String,
    /// Wait before the first chunk played, allowance included. Also counted
    /// in `stall_ms`.
    pub startup_wait_ms: Ms,
    pub stall_ms: Ms,
    pub played_chunks: u64,
    pub generated_chunks_played: u64,
    /// True when the viewer swiped before the video's content ran out.
    pub swiped_early: bool,
}

/// Everything the event loop processed, in order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    pub records: Vec<EventRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EventRecord {
    pub time: Ms,
    pub kind: EventKind,
    pub chunk: Option<ChunkId>,
    pub unit: Option<UnitId>,
}

/// Event kinds in tie-breaking order: at equal timestamps downloads land,
/// then decodes finish, then playback reacts, then the viewer acts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    DownloadComplete,
    DecodeComplete,
    ChunkPlaybackDue,
    Swipe,
    ReplanTimer,
    SessionEnd,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EventKind::DownloadComplete => "download_complete",
            EventKind::DecodeComplete => "decode_complete",
            EventKind::ChunkPlaybackDue => "chunk_playback_due",
            EventKind::Swipe => "swipe",
            EventKind::ReplanTimer => "replan_timer",
            EventKind::SessionEnd => "session_end",
        };
        f.write_str(s)
    }
}

impl EventLog {
    /// Line-delimited form for golden-file comparisons:
    /// `time,kind,chunk|-,unit|-`.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let chunk = r.chunk.map(|c| c.to_string()).unwrap_or_else(|| "-".into());
            let unit = r.unit.map(|u| u.to_string()).unwrap_or_else(|| "-".into());
            out.push_str(&format!("{},{},{},{}\n", r.time, r.kind, chunk, unit));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("bad configuration: {0}")]
    Config(String),
}
