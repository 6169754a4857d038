//! Seeded generators for bandwidth traces, feeds, and session traces.
//!
//! Everything here is a pure function of its arguments: the same spec and
//! seed always produce byte-identical output, so generated suites can be
//! regenerated instead of committed when convenient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    BandwidthModel, BandwidthSample, Feed, Ms, SessionEntry, SessionTrace,
};

use super::profiles::standard_video;

/// Shape of a synthetic bandwidth trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthPattern {
    /// Flat line.
    Constant { kbps: u64 },
    /// Alternates between two levels every `period_ms`.
    Step { low_kbps: u64, high_kbps: u64, period_ms: Ms },
    /// Ramps from `min_kbps` to `max_kbps` in `step_ms` increments over each
    /// `period_ms`, then drops back.
    Sawtooth { min_kbps: u64, max_kbps: u64, period_ms: Ms, step_ms: Ms },
    /// Random walk: every `step_ms` the rate moves by a uniform amount in
    /// `[-max_delta_kbps, +max_delta_kbps]`, clamped to the band.
    RandomWalk { start_kbps: u64, min_kbps: u64, max_kbps: u64, step_ms: Ms, max_delta_kbps: u64 },
}

/// Samples the pattern every step over `[0, duration_ms)`. Only the random
/// walk consumes the seed.
pub fn gen_bandwidth(pattern: &BandwidthPattern, duration_ms: Ms, seed: u64) -> BandwidthModel {
    let samples = match *pattern {
        BandwidthPattern::Constant { kbps } => vec![BandwidthSample { at_ms: 0, kbps }],
        BandwidthPattern::Step { low_kbps, high_kbps, period_ms } => {
            let mut samples = Vec::new();
            let mut t = 0;
            let mut high = false;
            while t < duration_ms.max(1) {
                samples.push(BandwidthSample {
                    at_ms: t,
                    kbps: if high { high_kbps } else { low_kbps },
                });
                high = !high;
                t += period_ms.max(1);
            }
            samples
        }
        BandwidthPattern::Sawtooth { min_kbps, max_kbps, period_ms, step_ms } => {
            let period = period_ms.max(1);
            let step = step_ms.max(1).min(period);
            let mut samples = Vec::new();
            let mut t = 0;
            while t < duration_ms.max(1) {
                let phase = (t % period) as f64 / period as f64;
                let kbps = min_kbps + ((max_kbps - min_kbps) as f64 * phase).round() as u64;
                samples.push(BandwidthSample { at_ms: t, kbps });
                t += step;
            }
            samples
        }
        BandwidthPattern::RandomWalk { start_kbps, min_kbps, max_kbps, step_ms, max_delta_kbps } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let step = step_ms.max(1);
            let mut kbps = start_kbps.clamp(min_kbps.max(1), max_kbps.max(1));
            let mut samples = Vec::new();
            let mut t = 0;
            while t < duration_ms.max(1) {
                samples.push(BandwidthSample { at_ms: t, kbps });
                let delta = rng.random_range(-(max_delta_kbps as i64)..=max_delta_kbps as i64);
                kbps = kbps
                    .saturating_add_signed(delta)
                    .clamp(min_kbps.max(1), max_kbps.max(1));
                t += step;
            }
            samples
        }
    };
    BandwidthModel::new(samples).expect("generated samples are well-formed")
}

/// Shape of a synthetic feed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedSpec {
    pub videos: u32,
    pub chunks_per_video: u32,
    pub playout_ms: Ms,
    /// Attach the generated variant to every chunk.
    pub include_prompt: bool,
    /// Uniform per-variant size jitter, e.g. 0.1 scales each size by a
    /// factor in [0.9, 1.1]. Zero means exact profile sizes.
    pub size_jitter: f64,
}

impl Default for FeedSpec {
    fn default() -> Self {
        FeedSpec {
            videos: 5,
            chunks_per_video: 8,
            playout_ms: 1000,
            include_prompt: true,
            size_jitter: 0.0,
        }
    }
}

/// Feed of `videos` standard videos named `v0, v1, …`, with optional size
/// jitter.
pub fn gen_feed(spec: &FeedSpec, seed: u64) -> Feed {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let videos = (0..spec.videos)
        .map(|v| {
            let mut video = standard_video(
                &format!("v{v}"),
                v,
                spec.chunks_per_video,
                spec.playout_ms,
                spec.include_prompt,
            );
            if spec.size_jitter > 0.0 {
                for chunk in &mut video.chunks {
                    for variant in &mut chunk.variants {
                        let factor = 1.0 + rng.random_range(-spec.size_jitter..=spec.size_jitter);
                        let jittered = (variant.size_bytes as f64 * factor).round();
                        variant.size_bytes = (jittered as u64).max(1);
                    }
                }
            }
            video
        })
        .collect();
    Feed::new(videos)
}

/// Shape of synthetic viewing sessions over a feed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub sessions: u32,
    /// Probability of watching a video to the end rather than swiping out.
    pub full_watch_probability: f64,
    /// After each video, probability the session continues to the next one.
    pub continue_probability: f64,
    /// Swipes never happen before this much content has played.
    pub min_watch_ms: Ms,
}

impl Default for SessionSpec {
    fn default() -> Self {
        SessionSpec {
            sessions: 20,
            full_watch_probability: 0.35,
            continue_probability: 0.85,
            min_watch_ms: 500,
        }
    }
}

/// Sessions that walk the feed in order: each video is either watched
/// through or swiped away at a uniform point past `min_watch_ms`, and after
/// each video the session survives with `continue_probability` (sessions
/// always cover at least one video; retention is geometric).
pub fn gen_sessions(spec: &SessionSpec, feed: &Feed, seed: u64) -> Vec<SessionTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..spec.sessions)
        .map(|s| {
            let mut entries = Vec::new();
            for video in &feed.videos {
                let total: Ms = video.chunks.iter().map(|c| c.playout_ms).sum();
                let watch_ms = if rng.random_bool(spec.full_watch_probability.clamp(0.0, 1.0)) {
                    total
                } else {
                    let floor = spec.min_watch_ms.min(total.saturating_sub(1));
                    rng.random_range(floor..total)
                };
                entries.push(SessionEntry { video_id: video.video_id.clone(), watch_ms });
                if !rng.random_bool(spec.continue_probability.clamp(0.0, 1.0)) {
                    break;
                }
            }
            SessionTrace { id: format!("s{s:03}"), entries }
        })
        .collect()
}
