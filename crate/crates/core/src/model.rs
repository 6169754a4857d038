//! Core domain types: feeds of chunked videos, codec variants, device and
//! bandwidth models, session traces, scoring weights, and download plans.
//!
//! All times are integer milliseconds and all sizes integer bytes. Keeping
//! both integral makes schedule arithmetic exact and replayable; fractional
//! durations always round up (a transfer is done when the last byte is in).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Milliseconds.
pub type Ms = u64;
/// Bytes.
pub type Bytes = u64;

/// Identifies a chunk by feed position. Ordering is playback order: videos in
/// feed order, chunks in index order within a video.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChunkId {
    pub video_index: u32,
    pub chunk_index: u32,
}

impl ChunkId {
    pub fn new(video_index: u32, chunk_index: u32) -> Self {
        ChunkId { video_index, chunk_index }
    }
}

impl fmt::Display for ChunkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.video_index, self.chunk_index)
    }
}

/// How a chunk representation is encoded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodecKind {
    /// Conventional pixel codec (H.265-like): cheap to decode, heavy to ship.
    Pixel { bitrate_kbps: u32 },
    /// Generative prompt codec: tiny payload (token embeddings plus a text
    /// prompt), but reconstruction runs on the neural accelerator and is far
    /// slower than real time.
    Prompt,
}

impl CodecKind {
    pub fn is_prompt(&self) -> bool {
        matches!(self, CodecKind::Prompt)
    }

    pub fn bitrate_kbps(&self) -> Option<u32> {
        match self {
            CodecKind::Pixel { bitrate_kbps } => Some(*bitrate_kbps),
            CodecKind::Prompt => None,
        }
    }
}

/// Serial hardware resources a session schedules work on. The network carries
/// downloads; the two decode units each run one job at a time, FIFO.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitId {
    Network,
    VideoDecoder,
    NeuralAccel,
}

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            UnitId::Network => "network",
            UnitId::VideoDecoder => "video_decoder",
            UnitId::NeuralAccel => "neural_accel",
        };
        f.write_str(s)
    }
}

/// One downloadable representation of a chunk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChunkVariant {
    pub codec: CodecKind,
    pub size_bytes: Bytes,
    /// Perceptual quality in [0, 1], higher is better.
    pub quality: f64,
    /// Time the decode job occupies its unit.
    pub decode_latency_ms: Ms,
    /// Which serial unit runs the decode.
    pub decode_unit: UnitId,
}

/// A fixed-duration slice of a video with one or more codec variants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub id: ChunkId,
    pub playout_ms: Ms,
    pub variants: Vec<ChunkVariant>,
}

impl Chunk {
    /// Index of the lowest-bitrate pixel variant, the canonical "safe" pick
    /// for fallbacks and emergency fetches. Falls back to the smallest
    /// variant overall if the chunk has no pixel representation.
    pub fn safe_variant_index(&self) -> usize {
        let mut best: Option<(usize, u32)> = None;
        for (i, v) in self.variants.iter().enumerate() {
            if let Some(kbps) = v.codec.bitrate_kbps() {
                if best.map_or(true, |(_, b)| kbps < b) {
                    best = Some((i, kbps));
                }
            }
        }
        match best {
            Some((i, _)) => i,
            None => {
                let mut idx = 0;
                for (i, v) in self.variants.iter().enumerate() {
                    if v.size_bytes < self.variants[idx].size_bytes {
                        idx = i;
                    }
                }
                idx
            }
        }
    }
}

/// One video: an ordered list of chunks sharing its `video_id`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoManifest {
    pub video_id: String,
    pub chunks: Vec<Chunk>,
}

/// An ordered feed of videos; `ChunkId.video_index` refers to positions here.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Feed {
    pub videos: Vec<VideoManifest>,
}

impl Feed {
    pub fn new(videos: Vec<VideoManifest>) -> Self {
        Feed { videos }
    }

    pub fn chunk(&self, id: ChunkId) -> Option<&Chunk> {
        self.videos
            .get(id.video_index as usize)
            .and_then(|v| v.chunks.get(id.chunk_index as usize))
    }

    pub fn video(&self, index: usize) -> Option<&VideoManifest> {
        self.videos.get(index)
    }

    pub fn total_chunks(&self) -> usize {
        self.videos.iter().map(|v| v.chunks.len()).sum()
    }

    /// First chunk of the feed, if any video has chunks.
    pub fn first_chunk(&self) -> Option<ChunkId> {
        self.videos
            .iter()
            .position(|v| !v.chunks.is_empty())
            .map(|v| ChunkId::new(v as u32, 0))
    }

    /// The chunk played immediately after `id`, crossing video boundaries.
    pub fn next_chunk(&self, id: ChunkId) -> Option<ChunkId> {
        let video = self.videos.get(id.video_index as usize)?;
        if (id.chunk_index as usize) + 1 < video.chunks.len() {
            return Some(ChunkId::new(id.video_index, id.chunk_index + 1));
        }
        let mut v = id.video_index as usize + 1;
        while v < self.videos.len() {
            if !self.videos[v].chunks.is_empty() {
                return Some(ChunkId::new(v as u32, 0));
            }
            v += 1;
        }
        None
    }

    /// All violations across the feed: per-video checks plus cross-video id
    /// consistency and duplicate video ids.
    pub fn validate(&self) -> Vec<ManifestViolation> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, video) in self.videos.iter().enumerate() {
            if !seen.insert(video.video_id.clone()) {
                out.push(ManifestViolation::DuplicateVideoId { video_id: video.video_id.clone() });
            }
            out.extend(validate_manifest_at(video, i as u32));
        }
        out
    }

    /// Copy of the feed with every variant's size scaled by `factor`
    /// (rounded, floor 1 byte). Qualities, latencies, and durations are
    /// untouched; this is the knob the chunk-size sweep turns.
    pub fn scaled_sizes(&self, factor: f64) -> Feed {
        let mut feed = self.clone();
        for video in &mut feed.videos {
            for chunk in &mut video.chunks {
                for variant in &mut chunk.variants {
                    let scaled = (variant.size_bytes as f64 * factor).round();
                    variant.size_bytes = (scaled as Bytes).max(1);
                }
            }
        }
        feed
    }
}

/// Playback order of every chunk in the feed.
pub fn playback_order(feed: &Feed) -> Result<Vec<ChunkId>, ModelError> {
    if feed.videos.is_empty() {
        return Err(ModelError::EmptyFeed);
    }
    let mut out = Vec::with_capacity(feed.total_chunks());
    for (v, video) in feed.videos.iter().enumerate() {
        for c in 0..video.chunks.len() {
            out.push(ChunkId::new(v as u32, c as u32));
        }
    }
    Ok(out)
}

/// A structural problem found in a manifest. Validation reports all of them
/// rather than stopping at the first.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum ManifestViolation {
    #[error("video {video_index} has no chunks")]
    EmptyVideo { video_index: u32 },
    #[error("chunk {chunk} has no variants")]
    EmptyVariants { chunk: ChunkId },
    #[error("chunk {chunk} variant {variant} has size 0")]
    NonPositiveSize { chunk: ChunkId, variant: usize },
    #[error("chunk {chunk} variant {variant} quality {quality} outside [0, 1]")]
    QualityOutOfRange { chunk: ChunkId, variant: usize, quality: f64 },
    #[error("chunk {chunk} has zero playout duration")]
    ZeroPlayout { chunk: ChunkId },
    #[error("chunk {chunk} repeats pixel bitrate {bitrate_kbps} kbps")]
    DuplicateBitrate { chunk: ChunkId, bitrate_kbps: u32 },
    #[error("chunk {chunk} pixel bitrates are not sorted ascending")]
    UnsortedBitrates { chunk: ChunkId },
    #[error("chunk {chunk} has more than one prompt variant")]
    MultiplePromptVariants { chunk: ChunkId },
    #[error("chunk {chunk} variant {variant} routes {codec:?} to {unit}")]
    WrongDecodeUnit { chunk: ChunkId, variant: usize, codec: CodecKind, unit: UnitId },
    #[error("video {video_index}: expected chunk id {expected}, found {found}")]
    NonContiguousChunkIds { video_index: u32, expected: ChunkId, found: ChunkId },
    #[error("duplicate video id {video_id:?}")]
    DuplicateVideoId { video_id: String },
}

/// Checks one video's manifest in isolation. Chunk ids must be contiguous
/// from 0 and carry the video's own index (taken from the first chunk when
/// present, so a standalone manifest can be checked without its feed).
pub fn validate_manifest(video: &VideoManifest) -> Vec<ManifestViolation> {
    let expected_video = video.chunks.first().map(|c| c.id.video_index).unwrap_or(0);
    validate_manifest_at(video, expected_video)
}

fn validate_manifest_at(video: &VideoManifest, video_index: u32) -> Vec<ManifestViolation> {
    let mut out = Vec::new();
    if video.chunks.is_empty() {
        out.push(ManifestViolation::EmptyVideo { video_index });
        return out;
    }
    for (ci, chunk) in video.chunks.iter().enumerate() {
        let expected = ChunkId::new(video_index, ci as u32);
        if chunk.id != expected {
            out.push(ManifestViolation::NonContiguousChunkIds {
                video_index,
                expected,
                found: chunk.id,
            });
        }
        if chunk.playout_ms == 0 {
            out.push(ManifestViolation::ZeroPlayout { chunk: chunk.id });
        }
        if chunk.variants.is_empty() {
            out.push(ManifestViolation::EmptyVariants { chunk: chunk.id });
            continue;
        }
        let mut prompt_seen = false;
        let mut last_bitrate: Option<u32> = None;
        let mut bitrates = BTreeSet::new();
        for (vi, variant) in chunk.variants.iter().enumerate() {
            if variant.size_bytes == 0 {
                out.push(ManifestViolation::NonPositiveSize { chunk: chunk.id, variant: vi });
            }
            if !(0.0..=1.0).contains(&variant.quality) || !variant.quality.is_finite() {
                out.push(ManifestViolation::QualityOutOfRange {
                    chunk: chunk.id,
                    variant: vi,
                    quality: variant.quality,
                });
            }
            match variant.codec {
                CodecKind::Prompt => {
                    if prompt_seen {
                        out.push(ManifestViolation::MultiplePromptVariants { chunk: chunk.id });
                    }
                    prompt_seen = true;
                    if variant.decode_unit != UnitId::NeuralAccel {
                        out.push(ManifestViolation::WrongDecodeUnit {
                            chunk: chunk.id,
                            variant: vi,
                            codec: variant.codec,
                            unit: variant.decode_unit,
                        });
                    }
                }
                CodecKind::Pixel { bitrate_kbps } => {
                    if !bitrates.insert(bitrate_kbps) {
                        out.push(ManifestViolation::DuplicateBitrate {
                            chunk: chunk.id,
                            bitrate_kbps,
                        });
                    }
                    if let Some(prev) = last_bitrate {
                        if bitrate_kbps < prev {
                            out.push(ManifestViolation::UnsortedBitrates { chunk: chunk.id });
                        }
                    }
                    last_bitrate = Some(bitrate_kbps);
                    if variant.decode_unit != UnitId::VideoDecoder {
                        out.push(ManifestViolation::WrongDecodeUnit {
                            chunk: chunk.id,
                            variant: vi,
                            codec: variant.codec,
                            unit: variant.decode_unit,
                        });
                    }
                }
            }
        }
    }
    out
}

/// The device's serial resources. Plans may only route decodes to units the
/// device actually has.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceModel {
    pub units: BTreeSet<UnitId>,
}

impl Default for DeviceModel {
    fn default() -> Self {
        DeviceModel {
            units: [UnitId::Network, UnitId::VideoDecoder, UnitId::NeuralAccel]
                .into_iter()
                .collect(),
        }
    }
}

impl DeviceModel {
    pub fn has_unit(&self, unit: UnitId) -> bool {
        self.units.contains(&unit)
    }
}

/// One throughput sample; the rate holds from `at_ms` until the next sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandwidthSample {
    pub at_ms: Ms,
    pub kbps: u64,
}

/// Piecewise-constant downlink throughput. The final sample extends forever.
///
/// 1 kbps is exactly 1 bit per millisecond, so transfer integrals stay in
/// integer arithmetic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<BandwidthSample>", into = "Vec<BandwidthSample>")]
pub struct BandwidthModel {
    samples: Vec<BandwidthSample>,
}

impl BandwidthModel {
    /// Validates: non-empty, first sample at t=0, timestamps strictly
    /// increasing, all rates positive.
    pub fn new(samples: Vec<BandwidthSample>) -> Result<Self, ModelError> {
        if samples.is_empty() {
            return Err(ModelError::InvalidBandwidth("no samples".into()));
        }
        if samples[0].at_ms != 0 {
            return Err(ModelError::InvalidBandwidth(format!(
                "first sample must be at t=0, found t={}",
                samples[0].at_ms
            )));
        }
        for pair in samples.windows(2) {
            if pair[1].at_ms <= pair[0].at_ms {
                return Err(ModelError::InvalidBandwidth(format!(
                    "timestamps must be strictly increasing ({} then {})",
                    pair[0].at_ms, pair[1].at_ms
                )));
            }
        }
        if let Some(s) = samples.iter().find(|s| s.kbps == 0) {
            return Err(ModelError::InvalidBandwidth(format!(
                "throughput must be positive (0 kbps at t={})",
                s.at_ms
            )));
        }
        Ok(BandwidthModel { samples })
    }

    pub fn constant(kbps: u64) -> Self {
        BandwidthModel { samples: vec![BandwidthSample { at_ms: 0, kbps }] }
    }

    pub fn samples(&self) -> &[BandwidthSample] {
        &self.samples
    }

    /// Throughput in effect at time `t`.
    pub fn kbps_at(&self, t: Ms) -> u64 {
        match self.samples.binary_search_by_key(&t, |s| s.at_ms) {
            Ok(i) => self.samples[i].kbps,
            Err(0) => self.samples[0].kbps, // unreachable: first sample is at 0
            Err(i) => self.samples[i - 1].kbps,
        }
    }

    /// Bits delivered over the half-open interval `[from, to)`.
    pub fn bits_between(&self, from: Ms, to: Ms) -> u128 {
        if to <= from {
            return 0;
        }
        let mut bits: u128 = 0;
        let mut t = from;
        let mut idx = match self.samples.binary_search_by_key(&from, |s| s.at_ms) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        while t < to {
            let seg_end = self
                .samples
                .get(idx + 1)
                .map(|s| s.at_ms.min(to))
                .unwrap_or(to);
            let seg_end = seg_end.max(t);
            bits += (seg_end - t) as u128 * self.samples[idx].kbps as u128;
            t = seg_end;
            idx += 1;
            if idx >= self.samples.len() {
                // Last rate extends indefinitely.
                bits += (to - t) as u128 * self.samples[self.samples.len() - 1].kbps as u128;
                break;
            }
        }
        bits
    }
}

impl TryFrom<Vec<BandwidthSample>> for BandwidthModel {
    type Error = ModelError;
    fn try_from(samples: Vec<BandwidthSample>) -> Result<Self, ModelError> {
        BandwidthModel::new(samples)
    }
}

impl From<BandwidthModel> for Vec<BandwidthSample> {
    fn from(m: BandwidthModel) -> Self {
        m.samples
    }
}

/// One watched video in a session: the user swipes away after `watch_ms` of
/// content (clamped to the video's total playout; 0 means an instant swipe).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionEntry {
    pub video_id: String,
    pub watch_ms: Ms,
}

/// An ordered record of how long the user watched each feed video.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub id: String,
    pub entries: Vec<SessionEntry>,
}

/// Scoring weights: quality reward, quality-variation penalty, stall penalty
/// (per second), and bandwidth penalty (per megabit shipped).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub quality: f64,
    pub variation: f64,
    pub stall: f64,
    pub bandwidth: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights { quality: 1.0, variation: 1.0, stall: 3.0, bandwidth: 0.3 }
    }
}

impl Weights {
    pub fn validate(&self) -> Result<(), ModelError> {
        let all = [
            ("quality", self.quality),
            ("variation", self.variation),
            ("stall", self.stall),
            ("bandwidth", self.bandwidth),
        ];
        for (name, w) in all {
            if !w.is_finite() || w < 0.0 {
                return Err(ModelError::InvalidWeights(format!("{name} weight {w} (must be finite and >= 0)")));
            }
        }
        Ok(())
    }
}

/// One planned download: which chunk, and which of its variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub chunk: ChunkId,
    pub variant_index: usize,
}

/// An ordered download schedule. Order is download order, which is the whole
/// point: it may differ from playback order.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
}

impl Plan {
    pub fn new(steps: Vec<PlanStep>) -> Self {
        Plan { steps }
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    /// Variant index chosen for `chunk`, if the plan covers it.
    pub fn variant_for(&self, chunk: ChunkId) -> Option<usize> {
        self.steps.iter().find(|s| s.chunk == chunk).map(|s| s.variant_index)
    }

    /// Count of steps whose chosen variant is the prompt codec.
    pub fn prompt_steps(&self, feed: &Feed) -> usize {
        self.steps
            .iter()
            .filter(|s| {
                feed.chunk(s.chunk)
                    .and_then(|c| c.variants.get(s.variant_index))
                    .is_some_and(|v| v.codec.is_prompt())
            })
            .count()
    }
}

/// Per-strategy identifiers used by the simulator and reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyId {
    /// Search-based out-of-order planner.
    Mcts,
    /// In-playback-order greedy planner.
    Sequential,
    /// Fixed lookahead: next K chunks plus the next video's first chunk.
    FixedNextK,
    /// Mcts restricted to pixel variants (prompt codec disabled).
    HybridOff,
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StrategyId::Mcts => "mcts",
            StrategyId::Sequential => "sequential",
            StrategyId::FixedNextK => "fixed_next_k",
            StrategyId::HybridOff => "hybrid_off",
        };
        f.write_str(s)
    }
}

/// Errors from constructing or combining model values.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("feed has no videos")]
    EmptyFeed,
    #[error("invalid bandwidth model: {0}")]
    InvalidBandwidth(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("session trace does not match feed: {0}")]
    TraceMismatch(String),
}

/// Maps a session trace onto feed indices: entry k must name feed video k.
/// Returns the number of videos the session covers.
pub fn check_trace(feed: &Feed, trace: &SessionTrace) -> Result<usize, ModelError> {
    if trace.entries.len() > feed.videos.len() {
        return Err(ModelError::TraceMismatch(format!(
            "trace {} lists {} videos, feed has {}",
            trace.id,
            trace.entries.len(),
            feed.videos.len()
        )));
    }
    for (i, entry) in trace.entries.iter().enumerate() {
        let feed_id = &feed.videos[i].video_id;
        if &entry.video_id != feed_id {
            return Err(ModelError::TraceMismatch(format!(
                "trace {} entry {} is {:?}, feed video {} is {:?}",
                trace.id, i, entry.video_id, i, feed_id
            )));
        }
    }
    Ok(trace.entries.len())
}

/// Convenience lookup used across planner and sim.
pub fn variant<'f>(feed: &'f Feed, step: &PlanStep) -> Option<&'f ChunkVariant> {
    feed.chunk(step.chunk).and_then(|c| c.variants.get(step.variant_index))
}

/// Builds a map from video_id to feed index (first occurrence wins).
pub fn video_index_by_id(feed: &Feed) -> BTreeMap<&str, usize> {
    let mut map = BTreeMap::new();
    for (i, v) in feed.videos.iter().enumerate() {
        map.entry(v.video_id.as_str()).or_insert(i);
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pixel(bitrate_kbps: u32, size_bytes: Bytes, quality: f64) -> ChunkVariant {
        ChunkVariant {
            codec: CodecKind::Pixel { bitrate_kbps },
            size_bytes,
            quality,
            decode_latency_ms: 1,
            decode_unit: UnitId::VideoDecoder,
        }
    }

    fn prompt(size_bytes: Bytes, quality: f64) -> ChunkVariant {
        ChunkVariant {
            codec: CodecKind::Prompt,
            size_bytes,
            quality,
            decode_latency_ms: 1500,
            decode_unit: UnitId::NeuralAccel,
        }
    }

    fn chunk(video: u32, index: u32, variants: Vec<ChunkVariant>) -> Chunk {
        Chunk { id: ChunkId::new(video, index), playout_ms: 1000, variants }
    }

    fn two_video_feed() -> Feed {
        Feed::new(vec![
            VideoManifest {
                video_id: "a".into(),
                chunks: vec![
                    chunk(0, 0, vec![pixel(200, 25_000, 0.45), prompt(9_000, 0.54)]),
                    chunk(0, 1, vec![pixel(200, 25_000, 0.45)]),
                ],
            },
            VideoManifest {
                video_id: "b".into(),
                chunks: vec![chunk(1, 0, vec![pixel(200, 25_000, 0.45)])],
            },
        ])
    }

    #[test]
    fn playback_order_walks_videos_then_chunks() {
        let feed = two_video_feed();
        let order = playback_order(&feed).unwrap();
        assert_eq!(
            order,
            vec![ChunkId::new(0, 0), ChunkId::new(0, 1), ChunkId::new(1, 0)]
        );
    }

    #[test]
    fn playback_order_rejects_empty_feed() {
        assert_eq!(playback_order(&Feed::default()), Err(ModelError::EmptyFeed));
    }

    #[test]
    fn next_chunk_crosses_video_boundary() {
        let feed = two_video_feed();
        assert_eq!(feed.next_chunk(ChunkId::new(0, 1)), Some(ChunkId::new(1, 0)));
        assert_eq!(feed.next_chunk(ChunkId::new(1, 0)), None);
    }

    #[test]
    fn chunk_id_ordering_is_playback_order() {
        let a = ChunkId::new(0, 5);
        let b = ChunkId::new(1, 0);
        assert!(a < b);
        assert!(ChunkId::new(1, 0) < ChunkId::new(1, 1));
    }

    #[test]
    fn valid_feed_has_no_violations() {
        assert!(two_video_feed().validate().is_empty());
    }

    #[test]
    fn validator_reports_each_problem() {
        let mut feed = two_video_feed();
        // Duplicate bitrate + second prompt + empty variants in one feed.
        feed.videos[0].chunks[0].variants.push(pixel(200, 30_000, 0.5));
        feed.videos[0].chunks[0].variants.push(prompt(9_000, 0.5));
        feed.videos[0].chunks[1].variants.clear();
        let violations = feed.validate();
        assert!(violations
            .iter()
            .any(|v| matches!(v, ManifestViolation::DuplicateBitrate { bitrate_kbps: 200, .. })));
        assert!(violations
            .iter()
            .any(|v| matches!(v, ManifestViolation::MultiplePromptVariants { .. })));
        assert!(violations
            .iter()
            .any(|v| matches!(v, ManifestViolation::EmptyVariants { .. })));
    }

    #[test]
    fn validator_catches_misrouted_decodes() {
        let mut feed = two_video_feed();
        feed.videos[0].chunks[0].variants[1].decode_unit = UnitId::VideoDecoder;
        assert!(feed
            .validate()
            .iter()
            .any(|v| matches!(v, ManifestViolation::WrongDecodeUnit { .. })));
    }

    #[test]
    fn validator_requires_contiguous_ids() {
        let mut feed = two_video_feed();
        feed.videos[0].chunks[1].id = ChunkId::new(0, 5);
        assert!(feed
            .validate()
            .iter()
            .any(|v| matches!(v, ManifestViolation::NonContiguousChunkIds { .. })));
    }

    #[test]
    fn bandwidth_model_rejects_bad_traces() {
        assert!(BandwidthModel::new(vec![]).is_err());
        assert!(BandwidthModel::new(vec![BandwidthSample { at_ms: 5, kbps: 100 }]).is_err());
        assert!(BandwidthModel::new(vec![
            BandwidthSample { at_ms: 0, kbps: 100 },
            BandwidthSample { at_ms: 0, kbps: 200 },
        ])
        .is_err());
        assert!(BandwidthModel::new(vec![BandwidthSample { at_ms: 0, kbps: 0 }]).is_err());
    }

    #[test]
    fn bandwidth_lookup_uses_latest_sample() {
        let bw = BandwidthModel::new(vec![
            BandwidthSample { at_ms: 0, kbps: 500 },
            BandwidthSample { at_ms: 1000, kbps: 1500 },
        ])
        .unwrap();
        assert_eq!(bw.kbps_at(0), 500);
        assert_eq!(bw.kbps_at(999), 500);
        assert_eq!(bw.kbps_at(1000), 1500);
        assert_eq!(bw.kbps_at(1_000_000), 1500);
    }

    #[test]
    fn bits_between_integrates_across_segments() {
        let bw = BandwidthModel::new(vec![
            BandwidthSample { at_ms: 0, kbps: 500 },
            BandwidthSample { at_ms: 1000, kbps: 1500 },
        ])
        .unwrap();
        // 1 kbps == 1 bit/ms, so the first second carries 500_000 bits.
        assert_eq!(bw.bits_between(0, 1000), 500_000);
        assert_eq!(bw.bits_between(500, 1500), 250_000 + 750_000);
        assert_eq!(bw.bits_between(2000, 2001), 1500);
        assert_eq!(bw.bits_between(10, 10), 0);
    }

    #[test]
    fn weights_validate_rejects_negative_and_nan() {
        let mut w = Weights::default();
        w.stall = -1.0;
        assert!(w.validate().is_err());
        w.stall = f64::NAN;
        assert!(w.validate().is_err());
        assert!(Weights::default().validate().is_ok());
    }

    #[test]
    fn safe_variant_prefers_lowest_pixel_bitrate() {
        let c = chunk(0, 0, vec![prompt(9_000, 0.54), pixel(400, 50_000, 0.49), pixel(200, 25_000, 0.45)]);
        assert_eq!(c.safe_variant_index(), 2);
        let prompt_only = chunk(0, 0, vec![prompt(9_000, 0.54)]);
        assert_eq!(prompt_only.safe_variant_index(), 0);
    }

    #[test]
    fn trace_must_follow_feed_order() {
        let feed = two_video_feed();
        let ok = SessionTrace {
            id: "s0".into(),
            entries: vec![SessionEntry { video_id: "a".into(), watch_ms: 2000 }],
        };
        assert_eq!(check_trace(&feed, &ok), Ok(1));
        let bad = SessionTrace {
            id: "s1".into(),
            entries: vec![SessionEntry { video_id: "b".into(), watch_ms: 1000 }],
        };
        assert!(check_trace(&feed, &bad).is_err());
    }

    #[test]
    fn scaled_sizes_rounds_and_floors_at_one_byte() {
        let feed = two_video_feed();
        let scaled = feed.scaled_sizes(0.3);
        assert_eq!(scaled.videos[0].chunks[0].variants[0].size_bytes, 7_500);
        let tiny = feed.scaled_sizes(1e-9);
        assert_eq!(tiny.videos[0].chunks[0].variants[0].size_bytes, 1);
        // Qualities and durations are untouched.
        assert_eq!(scaled.videos[0].chunks[0].playout_ms, 1000);
        assert_eq!(
            scaled.videos[0].chunks[0].variants[0].quality,
            feed.videos[0].chunks[0].variants[0].quality
        );
    }
}
