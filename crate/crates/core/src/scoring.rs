//! Per-chunk utility and plan-level aggregates.
//!
//! Each played chunk is scored as a weighted sum of four terms:
//!
//! ```text
//! score = w_quality   * quality
//!       - w_variation * |quality - previous_quality|
//!       - w_stall     * stall_seconds
//!       - w_bandwidth * megabits_downloaded
//! ```
//!
//! The variation term is zero for the first chunk of a video (including the
//! first after a swipe) and whenever the previous chunk in playback order is
//! not part of the scored set — a quality reference must be an actually
//! adjacent played chunk. A plan's utility is the sum of its chunks' scores
//! in playback order.

use serde::{Deserialize, Serialize};

use crate::model::{Bytes, ChunkId, Feed, Ms, Weights};
use crate::timeline::ScheduleResult;

/// Everything the score of one chunk depends on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChunkMetrics {
    pub chunk: ChunkId,
    pub quality: f64,
    /// Quality of the chunk played immediately before, if any.
    pub prev_quality: Option<f64>,
    pub stall_ms: Ms,
    pub size_bytes: Bytes,
}

impl ChunkMetrics {
    /// |quality - previous| when a previous chunk exists, else 0.
    pub fn variation(&self) -> f64 {
        match self.prev_quality {
            Some(prev) => (self.quality - prev).abs(),
            None => 0.0,
        }
    }
}

/// Weighted score of a single chunk.
pub fn chunk_score(m: &ChunkMetrics, w: &Weights) -> f64 {
    let stall_s = m.stall_ms as f64 / 1000.0;
    let megabits = m.size_bytes as f64 * 8.0 / 1e6;
    w.quality * m.quality - w.variation * m.variation() - w.stall * stall_s - w.bandwidth * megabits
}

/// Sum of chunk scores over a schedule, walked in playback order.
///
/// `prev_quality` seeds the variation term of the first scheduled chunk: pass
/// the quality of the chunk playing (or last played) in the same video, or
/// `None` at a video start. Within the schedule, a chunk's reference is its
/// playback predecessor when that predecessor is also scheduled and in the
/// same video; across a video boundary or a gap the variation resets.
pub fn plan_utility(
    schedule: &ScheduleResult,
    feed: &Feed,
    w: &Weights,
    prev_quality: Option<f64>,
) -> f64 {
    let mut total = 0.0;
    let mut prev: Option<(ChunkId, f64)> = None;
    for t in &schedule.timings {
        let variant = &feed.chunk(t.chunk).expect("schedule chunks exist").variants
            [t.variant_index];
        let reference = match prev {
            // Adjacent in playback order and same video: carry the quality.
            Some((prev_id, q))
                if feed.next_chunk(prev_id) == Some(t.chunk)
                    && prev_id.video_index == t.chunk.video_index =>
            {
                Some(q)
            }
            // Head of the schedule continuing an in-progress video.
            None if t.chunk.chunk_index > 0 => prev_quality,
            _ => None,
        };
        let metrics = ChunkMetrics {
            chunk: t.chunk,
            quality: variant.quality,
            prev_quality: reference,
            stall_ms: t.stall_ms,
            size_bytes: variant.size_bytes,
        };
        total += chunk_score(&metrics, w);
        prev = Some((t.chunk, variant.quality));
    }
    total
}
