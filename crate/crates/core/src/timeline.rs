//! Download/decode/playback schedule arithmetic.
//!
//! Given a download plan, this module computes — in integer milliseconds —
//! when each chunk finishes downloading on the serial network, when its
//! decode completes on its serial unit (jobs run FIFO in download-completion
//! order), when it is due for playback, and how long the viewer stalls.
//!
//! The recursions, for a fresh session and an in-playback-order plan:
//!
//! ```text
//! download_end[i] = download_end[i-1] + download_ms[i]
//! decode_end[i]   = max(download_end[i], decode_end[prev on same unit]) + decode_ms[i]
//! deadline[1]     = now + startup_delay,  deadline[i] = playback_start[i-1] + playout[i-1]
//! playback_start  = max(decode_end, deadline),   stall = max(0, decode_end - deadline)
//! ```
//!
//! `evaluate_plan` generalizes this to mid-session state: downloads start at
//! the later of `now` and the network's busy-until time, decode units carry
//! their backlog in, and the deadline chain starts at the next unplayed
//! chunk. Chunks the plan does not cover (already buffered, in flight, or
//! simply not decided yet) are assumed to play exactly at their deadline, so
//! a complete in-order plan from a fresh state reproduces the recursions
//! above exactly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    BandwidthModel, Bytes, ChunkId, ChunkVariant, DeviceModel, Feed, Ms, Plan, UnitId,
};

/// The chunk currently on screen and how much of it has played.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Playhead {
    pub chunk: ChunkId,
    pub elapsed_ms: Ms,
}

/// Where playback stands when a plan is evaluated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlayPosition {
    /// Nothing on screen; `next` is the chunk that will play next.
    Idle { next: ChunkId },
    /// A chunk is playing.
    Playing(Playhead),
    /// The session is over; no further playback deadlines exist.
    Ended,
}

/// Planner-visible session state. The simulator builds one of these at every
/// replan; a fresh one models session start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaybackState {
    pub now: Ms,
    pub position: PlayPosition,
    /// Decoded and ready: chunk -> variant index.
    pub buffered: BTreeMap<ChunkId, usize>,
    /// Downloaded or currently downloading, not yet decoded: chunk -> variant
    /// index. These must not be planned again.
    pub pending: BTreeMap<ChunkId, usize>,
    /// When the serial network can start the next transfer (>= now if busy).
    pub network_free_at: Ms,
    /// Per-unit decode backlog: earliest start time for a new job.
    pub unit_free_at: BTreeMap<UnitId, Ms>,
    /// Deadline allowance for the first chunk when playback is idle.
    pub startup_delay_ms: Ms,
    /// Quality of the variant at (or most recently at) the playhead within
    /// the current video, if any; seeds the smoothness charge of the first
    /// planned chunk. `None` at a video start.
    pub prev_quality: Option<f64>,
}

impl PlaybackState {
    /// State at the very start of a session, before anything has happened.
    pub fn session_start(first: ChunkId, startup_delay_ms: Ms) -> Self {
        PlaybackState {
            now: 0,
            position: PlayPosition::Idle { next: first },
            buffered: BTreeMap::new(),
            pending: BTreeMap::new(),
            network_free_at: 0,
            unit_free_at: BTreeMap::new(),
            startup_delay_ms,
            prev_quality: None,
        }
    }

    /// Chunk the deadline chain starts at, or `None` when playback ended.
    pub fn next_unplayed(&self, feed: &Feed) -> Option<ChunkId> {
        match &self.position {
            PlayPosition::Idle { next } => Some(*next),
            PlayPosition::Playing(p) => feed.next_chunk(p.chunk),
            PlayPosition::Ended => None,
        }
    }

    /// True if the chunk is already decoded, downloaded, or in flight.
    pub fn is_acquired(&self, id: ChunkId) -> bool {
        self.buffered.contains_key(&id) || self.pending.contains_key(&id)
    }
}

/// Full schedule for one planned chunk. All fields are absolute times except
/// the two durations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkTiming {
    pub chunk: ChunkId,
    pub variant_index: usize,
    /// Transfer time on the network (rounded up to whole ms).
    pub download_ms: Ms,
    /// When the last byte arrives.
    pub download_end: Ms,
    /// Time the decode occupies its unit.
    pub decode_ms: Ms,
    /// When the chunk is ready to present.
    pub decode_end: Ms,
    /// When playback wants to start it.
    pub deadline: Ms,
    /// max(decode_end, deadline).
    pub playback_start: Ms,
    /// How late the chunk is: max(0, decode_end - deadline).
    pub stall_ms: Ms,
    /// The computation-attributed share of the stall (see `compute_stall_of`).
    pub compute_stall_ms: Ms,
}

/// Evaluated schedule, in playback order, plus the total stall.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct ScheduleResult {
    pub timings: Vec<ChunkTiming>,
    pub total_stall_ms: Ms,
}

impl ScheduleResult {
    pub fn timing_for(&self, chunk: ChunkId) -> Option<&ChunkTiming> {
        self.timings.iter().find(|t| t.chunk == chunk)
    }

    /// True when no planned chunk has a computation-attributed stall.
    pub fn compute_stall_free(&self) -> bool {
        self.timings.iter().all(|t| t.compute_stall_ms == 0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimelineError {
    #[error("plan is invalid: {0}")]
    InvalidPlan(String),
    #[error("chunk {0} is not in the feed")]
    UnknownChunk(ChunkId),
    #[error("chunk {0} is behind the playhead or already acquired")]
    StaleChunk(ChunkId),
    #[error("chunk {chunk} decodes on {unit}, which this device lacks")]
    UnknownUnit { chunk: ChunkId, unit: UnitId },
}

/// Smallest whole-ms duration `d` such that the bits of `size` bytes fit in
/// `[start, start + d)` under the bandwidth model. Partial milliseconds round
/// up: the transfer is done when the last byte is in.
pub fn duration_for_bytes(size: Bytes, bw: &BandwidthModel, start: Ms) -> Ms {
    let needed: u128 = size as u128 * 8;
    if needed == 0 {
        return 0;
    }
    let samples = bw.samples();
    let mut idx = match samples.binary_search_by_key(&start, |s| s.at_ms) {
        Ok(i) => i,
        Err(0) => 0,
        Err(i) => i - 1,
    };
    let mut t = start;
    let mut remaining = needed;
    loop {
        let rate = samples[idx].kbps as u128; // bits per ms
        let seg_end = samples.get(idx + 1).map(|s| s.at_ms);
        match seg_end {
            Some(end) if end > t => {
                let span = (end - t) as u128;
                let capacity = span * rate;
                if capacity >= remaining {
                    let ms = remaining.div_ceil(rate) as Ms;
                    return t + ms - start;
                }
                remaining -= capacity;
                t = end;
                idx += 1;
            }
            Some(_) => {
                idx += 1; // segment entirely before `t`
            }
            None => {
                let ms = remaining.div_ceil(rate) as Ms;
                return t + ms - start;
            }
        }
    }
}

/// Transfer time for one variant starting at `start`.
pub fn download_duration(variant: &ChunkVariant, bw: &BandwidthModel, start: Ms) -> Ms {
    duration_for_bytes(variant.size_bytes, bw, start)
}

/// Splits a chunk's stall into the share attributable to computation rather
/// than the network: if the download met the deadline, the whole stall is
/// compute; otherwise only the decode-queue wait beyond the download counts.
pub fn compute_stall_of(t: &ChunkTiming) -> Ms {
    if t.download_end <= t.deadline {
        t.decode_end.saturating_sub(t.deadline)
    } else {
        t.decode_end
            .saturating_sub(t.download_end)
            .saturating_sub(t.decode_ms)
    }
}

/// Evaluates a download plan against device, bandwidth, and session state.
///
/// Downloads run serially in plan order starting at
/// `max(state.now, state.network_free_at)`; each completed download enqueues
/// its decode FIFO on the variant's unit. The deadline chain walks playback
/// order from the next unplayed chunk; chunks the plan does not cover are
/// assumed to play exactly at their deadline.
///
/// The result lists planned chunks in playback order. An empty plan yields an
/// empty schedule.
pub fn evaluate_plan(
    plan: &Plan,
    device: &DeviceModel,
    bw: &BandwidthModel,
    state: &PlaybackState,
    feed: &Feed,
) -> Result<ScheduleResult, TimelineError> {
    if plan.is_empty() {
        return Ok(ScheduleResult::default());
    }

    // ── Validate ────────────────────────────────────────────────────────
    let next_due = state.next_unplayed(feed);
    let mut seen = BTreeSet::new();
    for step in &plan.steps {
        let chunk = feed
            .chunk(step.chunk)
            .ok_or(TimelineError::UnknownChunk(step.chunk))?;
        let variant = chunk.variants.get(step.variant_index).ok_or_else(|| {
            TimelineError::InvalidPlan(format!(
                "chunk {} has no variant {}",
                step.chunk, step.variant_index
            ))
        })?;
        if !seen.insert(step.chunk) {
            return Err(TimelineError::InvalidPlan(format!(
                "chunk {} appears twice",
                step.chunk
            )));
        }
        if !device.has_unit(variant.decode_unit) {
            return Err(TimelineError::UnknownUnit {
                chunk: step.chunk,
                unit: variant.decode_unit,
            });
        }
        match next_due {
            Some(due) if step.chunk >= due => {}
            _ => return Err(TimelineError::StaleChunk(step.chunk)),
        }
        if state.is_acquired(step.chunk) {
            return Err(TimelineError::StaleChunk(step.chunk));
        }
    }

    // ── Downloads: serial, plan order ───────────────────────────────────
    let mut download_end = Vec::with_capacity(plan.len());
    let mut cursor = state.now.max(state.network_free_at);
    for step in &plan.steps {
        let variant = crate::model::variant(feed, step).expect("validated above");
        let d = download_duration(variant, bw, cursor);
        cursor += d;
        download_end.push((d, cursor));
    }

    // ── Decodes: FIFO per unit, download-completion order ───────────────
    let mut unit_tail: BTreeMap<UnitId, Ms> = state.unit_free_at.clone();
    let mut by_chunk: BTreeMap<ChunkId, ChunkTiming> = BTreeMap::new();
    for (i, step) in plan.steps.iter().enumerate() {
        let variant = crate::model::variant(feed, step).expect("validated above");
        let (dl_ms, dl_end) = download_end[i];
        let tail = unit_tail.entry(variant.decode_unit).or_insert(0);
        let decode_end = dl_end.max(*tail) + variant.decode_latency_ms;
        *tail = decode_end;
        by_chunk.insert(
            step.chunk,
            ChunkTiming {
                chunk: step.chunk,
                variant_index: step.variant_index,
                download_ms: dl_ms,
                download_end: dl_end,
                decode_ms: variant.decode_latency_ms,
                decode_end,
                deadline: 0,
                playback_start: 0,
                stall_ms: 0,
                compute_stall_ms: 0,
            },
        );
    }

    // ── Deadline chain: playback order from the next unplayed chunk ─────
    let mut deadline = match &state.position {
        PlayPosition::Playing(p) => {
            let playout = feed
                .chunk(p.chunk)
                .ok_or(TimelineError::UnknownChunk(p.chunk))?
                .playout_ms;
            state.now + playout.saturating_sub(p.elapsed_ms)
        }
        PlayPosition::Idle { .. } => state.now + state.startup_delay_ms,
        PlayPosition::Ended => unreachable!("plans against an ended session are stale"),
    };
    let mut pos = next_due.expect("validated above");
    let mut timings = Vec::with_capacity(plan.len());
    let mut total_stall = 0;
    let mut remaining = by_chunk.len();
    while remaining > 0 {
        let playout = feed
            .chunk(pos)
            .ok_or(TimelineError::UnknownChunk(pos))?
            .playout_ms;
        let start = match by_chunk.get_mut(&pos) {
            Some(t) => {
                t.deadline = deadline;
                t.playback_start = t.decode_end.max(deadline);
                t.stall_ms = t.decode_end.saturating_sub(deadline);
                t.compute_stall_ms = compute_stall_of(t);
                total_stall += t.stall_ms;
                let start = t.playback_start;
                timings.push(*t);
                remaining -= 1;
                start
            }
            // Not planned here: buffered, in flight, or undecided. Assume it
            // plays on time.
            None => deadline,
        };
        deadline = start + playout;
        pos = match feed.next_chunk(pos) {
            Some(next) => next,
            None => break,
        };
    }
    debug_assert_eq!(remaining, 0, "all planned chunks sit at/after next_due");

    Ok(ScheduleResult { timings, total_stall_ms: total_stall })
}
