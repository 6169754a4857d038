//! Trace-driven planner and simulator for computation-aware short-video
//! preloading.
//!
//! Short-form video players prefetch upcoming chunks to hide network jitter.
//! When some renditions are *generated on device* (tiny downloads, heavy
//! decodes on a neural unit) rather than merely decompressed, preloading
//! becomes a joint bandwidth/compute scheduling problem: a chunk is watchable
//! only once both its transfer and its decode finish, and decode units are
//! serial queues just like the network.
//!
//! This crate models that problem end to end:
//!
//! - [`model`] — feeds, chunk variants, devices, bandwidth traces, plans.
//! - [`timeline`] — integer-millisecond schedule arithmetic: download and
//!   decode completion times, playback deadlines, stalls, and the
//!   computation-attributed share of each stall.
//! - [`scoring`] — per-chunk utility (quality, smoothness, stall, bytes) and
//!   plan-level aggregates.
//! - [`planner`] — a UCT tree search over (chunk, variant) download
//!   sequences, exhaustive enumeration for small instances, and greedy /
//!   fixed-lookahead baselines.
//! - [`sim`] — a discrete-event session simulator that replans as downloads
//!   land and swipes happen, with per-session byte and stall accounting.
//! - [`traceio`] — manifest/trace file formats and synthetic generators.
//! - [`exec`] — sequential or data-parallel execution of batch runs.
//!
//! All times are integer milliseconds and all sizes integer bytes; see
//! [`model`] for the rounding rules.

pub mod exec;
pub mod model;
pub mod planner;
pub mod scoring;
pub mod sim;
pub mod timeline;
pub mod traceio;

pub use model::{
    BandwidthModel, BandwidthSample, Bytes, Chunk, ChunkId, ChunkVariant, CodecKind, DeviceModel,
    Feed, Ms, Plan, PlanStep, SessionEntry, SessionTrace, StrategyId, UnitId, VideoManifest,
    Weights,
};
pub use planner::{
    plan_bruteforce, plan_mcts, plan_sequential_baseline, PlanError, PlanOutcome, PlannerConfig,
    SearchStats,
};
pub use scoring::{plan_utility, ChunkMetrics};
pub use sim::{run_session, SessionMetrics, SimConfig};
pub use timeline::{evaluate_plan, PlaybackState, ScheduleResult};
