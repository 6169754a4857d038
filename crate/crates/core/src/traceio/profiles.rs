//! Reference encoding profiles used by the generators and test fixtures.
//!
//! The pixel ladder maps H.265-style bitrate rungs to mean perceptual
//! quality on a 0–1 scale; the generated-variant constants describe a
//! diffusion-style renderer fed by a per-chunk text prompt plus a dense
//! embedding stream. Sizes derive from content duration: a pixel rung costs
//! `bitrate × duration`, a generated chunk costs a fixed prompt payload plus
//! the embedding stream. Decodes are priced per second of content — pixel
//! decode is effectively free next to the generated variant's neural run.

use crate::model::{Bytes, Chunk, ChunkId, ChunkVariant, CodecKind, Ms, UnitId, VideoManifest};

/// Bitrate rungs (kbps) and their mean quality scores.
pub const PIXEL_LADDER: [(u32, f64); 5] =
    [(200, 0.457), (400, 0.490), (600, 0.506), (900, 0.526), (1200, 0.546)];

/// Mean quality of the generated variant, independent of bitrate.
pub const PROMPT_QUALITY: f64 = 0.541;

/// Embedding stream rate for the generated variant.
pub const PROMPT_STREAM_BYTES_PER_CONTENT_S: Bytes = 8_800;

/// Fixed text-prompt payload per chunk for the generated variant.
pub const PROMPT_FIXED_BYTES: Bytes = 200;

/// Hardware decode cost per second of content.
pub const PIXEL_DECODE_MS_PER_CONTENT_S: Ms = 1;

/// Neural rendering cost per second of content.
pub const PROMPT_DECODE_MS_PER_CONTENT_S: Ms = 1_500;

/// Quality for an arbitrary bitrate: linear interpolation on the ladder,
/// clamped at its ends.
pub fn quality_for_bitrate(bitrate_kbps: u32) -> f64 {
    let ladder = &PIXEL_LADDER;
    if bitrate_kbps <= ladder[0].0 {
        return ladder[0].1;
    }
    for pair in ladder.windows(2) {
        let (lo_rate, lo_q) = pair[0];
        let (hi_rate, hi_q) = pair[1];
        if bitrate_kbps <= hi_rate {
            let span = (hi_rate - lo_rate) as f64;
            let frac = (bitrate_kbps - lo_rate) as f64 / span;
            return lo_q + frac * (hi_q - lo_q);
        }
    }
    ladder[ladder.len() - 1].1
}

fn scale_by_duration(per_second: u64, playout_ms: Ms) -> u64 {
    (per_second as u128 * playout_ms as u128).div_ceil(1000) as u64
}

/// Pixel variant at a bitrate rung: `bitrate × duration` bytes, hardware
/// decode.
pub fn pixel_variant(bitrate_kbps: u32, playout_ms: Ms) -> ChunkVariant {
    // kbps × ms = bits; eight bits per byte, rounded up.
    let bits = bitrate_kbps as u128 * playout_ms as u128;
    ChunkVariant {
        codec: CodecKind::Pixel { bitrate_kbps },
        size_bytes: bits.div_ceil(8) as Bytes,
        quality: quality_for_bitrate(bitrate_kbps),
        decode_latency_ms: scale_by_duration(PIXEL_DECODE_MS_PER_CONTENT_S, playout_ms),
        decode_unit: UnitId::VideoDecoder,
    }
}

/// Generated variant: tiny download, expensive neural decode.
pub fn prompt_variant(playout_ms: Ms) -> ChunkVariant {
    ChunkVariant {
        codec: CodecKind::Prompt,
        size_bytes: scale_by_duration(PROMPT_STREAM_BYTES_PER_CONTENT_S, playout_ms)
            + PROMPT_FIXED_BYTES,
        quality: PROMPT_QUALITY,
        decode_latency_ms: scale_by_duration(PROMPT_DECODE_MS_PER_CONTENT_S, playout_ms),
        decode_unit: UnitId::NeuralAccel,
    }
}

/// Chunk with the full pixel ladder and, optionally, the generated variant
/// appended after the rungs.
pub fn standard_chunk(id: ChunkId, playout_ms: Ms, include_prompt: bool) -> Chunk {
    let mut variants: Vec<ChunkVariant> =
        PIXEL_LADDER.iter().map(|&(rate, _)| pixel_variant(rate, playout_ms)).collect();
    if include_prompt {
        variants.push(prompt_variant(playout_ms));
    }
    Chunk { id, playout_ms, variants }
}

/// Video of `chunks` standard chunks, all `playout_ms` long.
pub fn standard_video(
    video_id: &str,
    video_index: u32,
    chunks: u32,
    playout_ms: Ms,
    include_prompt: bool,
) -> VideoManifest {
    VideoManifest {
        video_id: video_id.to_string(),
        chunks: (0..chunks)
            .map(|c| standard_chunk(ChunkId::new(video_index, c), playout_ms, include_prompt))
            .collect(),
    }
}
