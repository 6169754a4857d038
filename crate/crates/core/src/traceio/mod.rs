//! File formats for feeds, bandwidth traces, and session traces, plus
//! synthetic generators for all three.
//!
//! - Feed manifests are JSON: `{ "schema_version": 1, "feed": { ... } }`.
//!   Loading validates every video (see [`crate::model::validate_manifest`])
//!   and rejects unknown schema versions.
//! - Bandwidth traces are two-column CSV `timestamp_ms,throughput_kbps`,
//!   header row optional. Timestamps must start at 0 and strictly increase.
//! - Session traces are CSV with either two columns `video_id,watch_ms`
//!   (the whole file is one session) or three columns
//!   `session_id,video_id,watch_ms` (sessions grouped by id, kept in
//!   first-appearance order). Header row optional.
//!
//! Parse errors carry 1-based line numbers. Writers emit exactly what the
//! parsers accept, and generation is byte-deterministic for a given seed.

mod profiles;
mod synth;

pub use profiles::{
    pixel_variant, prompt_variant, quality_for_bitrate, standard_chunk, standard_video,
    PIXEL_LADDER, PIXEL_DECODE_MS_PER_CONTENT_S, PROMPT_DECODE_MS_PER_CONTENT_S,
    PROMPT_FIXED_BYTES, PROMPT_STREAM_BYTES_PER_CONTENT_S, PROMPT_QUALITY,
};
pub use synth::{gen_bandwidth, gen_feed, gen_sessions, BandwidthPattern, FeedSpec, SessionSpec};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    BandwidthModel, BandwidthSample, Feed, ManifestViolation, ModelError, SessionEntry,
    SessionTrace,
};

/// Version tag written into manifest files; bump on breaking layout changes.
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported manifest schema version {found} (expected {MANIFEST_SCHEMA_VERSION})")]
    SchemaVersion { found: u32 },
    #[error("manifest: {0}")]
    Manifest(ManifestViolation),
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn read_file(path: &Path) -> Result<String, TraceIoError> {
    fs::read_to_string(path).map_err(|source| TraceIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), TraceIoError> {
    fs::write(path, contents).map_err(|source| TraceIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

// ── Feed manifests ──────────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
struct ManifestFile {
    schema_version: u32,
    feed: Feed,
}

/// Parses and validates a manifest from JSON text.
pub fn parse_manifest(text: &str) -> Result<Feed, TraceIoError> {
    let file: ManifestFile = serde_json::from_str(text)?;
    if file.schema_version != MANIFEST_SCHEMA_VERSION {
        return Err(TraceIoError::SchemaVersion { found: file.schema_version });
    }
    if let Some(violation) = file.feed.validate().into_iter().next() {
        return Err(TraceIoError::Manifest(violation));
    }
    Ok(file.feed)
}

/// Serializes a feed to pretty-printed manifest JSON (trailing newline).
pub fn manifest_to_string(feed: &Feed) -> String {
    let file = ManifestFile { schema_version: MANIFEST_SCHEMA_VERSION, feed: feed.clone() };
    let mut text = serde_json::to_string_pretty(&file).expect("feeds serialize");
    text.push('\n');
    text
}

pub fn load_manifest(path: &Path) -> Result<Feed, TraceIoError> {
    parse_manifest(&read_file(path)?)
}

pub fn save_manifest(path: &Path, feed: &Feed) -> Result<(), TraceIoError> {
    write_file(path, &manifest_to_string(feed))
}

// ── Bandwidth traces ────────────────────────────────────────────────────

/// Parses `timestamp_ms,throughput_kbps` CSV. A first line whose fields are
/// not both integers is treated as a header.
pub fn parse_bandwidth_csv(text: &str) -> Result<BandwidthModel, TraceIoError> {
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut fields = trimmed.split(',').map(str::trim);
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(TraceIoError::Csv {
                    line,
                    message: format!("expected 2 fields `timestamp_ms,throughput_kbps`, got `{trimmed}`"),
                })
            }
        };
        match (a.parse::<u64>(), b.parse::<u64>()) {
            (Ok(at_ms), Ok(kbps)) => samples.push(BandwidthSample { at_ms, kbps }),
            _ if line == 1 => continue, // header row
            _ => {
                return Err(TraceIoError::Csv {
                    line,
                    message: format!("expected two integers, got `{trimmed}`"),
                })
            }
        }
    }
    BandwidthModel::new(samples).map_err(TraceIoError::from)
}

/// Serializes a bandwidth model with a header row.
pub fn bandwidth_to_csv(bw: &BandwidthModel) -> String {
    let mut out = String::from("timestamp_ms,throughput_kbps\n");
    for s in bw.samples() {
        out.push_str(&format!("{},{}\n", s.at_ms, s.kbps));
    }
    out
}

pub fn load_bandwidth_csv(path: &Path) -> Result<BandwidthModel, TraceIoError> {
    parse_bandwidth_csv(&read_file(path)?)
}

pub fn save_bandwidth_csv(path: &Path, bw: &BandwidthModel) -> Result<(), TraceIoError> {
    write_file(path, &bandwidth_to_csv(bw))
}

// ── Session traces ──────────────────────────────────────────────────────

/// Parses session CSV; see the module docs for the two accepted layouts.
pub fn parse_sessions_csv(text: &str) -> Result<Vec<SessionTrace>, TraceIoError> {
    let mut traces: Vec<SessionTrace> = Vec::new();
    let mut columns = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let cols = *columns.get_or_insert(fields.len());
        if fields.len() != cols {
            return Err(TraceIoError::Csv {
                line,
                message: format!("expected {cols} fields as on the first row, got {}", fields.len()),
            });
        }
        let (session_id, video_id, watch) = match fields.as_slice() {
            [video_id, watch] => ("session".to_string(), *video_id, *watch),
            [session_id, video_id, watch] => (session_id.to_string(), *video_id, *watch),
            _ => {
                return Err(TraceIoError::Csv {
                    line,
                    message: format!("expected 2 or 3 fields, got {}", fields.len()),
                })
            }
        };
        let watch_ms = match watch.parse::<u64>() {
            Ok(ms) => ms,
            _ if line == 1 => continue, // header row
            _ => {
                return Err(TraceIoError::Csv {
                    line,
                    message: format!("watch_ms must be an integer, got `{watch}`"),
                })
            }
        };
        let entry = SessionEntry { video_id: video_id.to_string(), watch_ms };
        match traces.iter_mut().find(|t| t.id == session_id) {
            Some(trace) => trace.entries.push(entry),
            None => traces.push(SessionTrace { id: session_id, entries: vec![entry] }),
        }
    }
    if traces.is_empty() {
        return Err(TraceIoError::Csv { line: 1, message: "no session entries".into() });
    }
    Ok(traces)
}

/// Serializes session traces in the three-column layout.
pub fn sessions_to_csv(traces: &[SessionTrace]) -> String {
    let mut out = String::from("session_id,video_id,watch_ms\n");
    for trace in traces {
        for entry in &trace.entries {
            out.push_str(&format!("{},{},{}\n", trace.id, entry.video_id, entry.watch_ms));
        }
    }
    out
}

pub fn load_sessions_csv(path: &Path) -> Result<Vec<SessionTrace>, TraceIoError> {
    parse_sessions_csv(&read_file(path)?)
}

pub fn save_sessions_csv(path: &Path, traces: &[SessionTrace]) -> Result<(), TraceIoError> {
    write_file(path, &sessions_to_csv(traces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ChunkId;

    #[test]
    fn manifest_round_trips_and_validates() {
        let feed = gen_feed(&FeedSpec::default(), 7);
        let text = manifest_to_string(&feed);
        let back = parse_manifest(&text).unwrap();
        assert_eq!(feed, back);
    }

    #[test]
    fn files_on_disk_round_trip_through_every_loader() {
        let dir = tempfile::tempdir().unwrap();
        let feed = gen_feed(&FeedSpec::default(), 3);
        let bw = gen_bandwidth(
            &BandwidthPattern::Sawtooth {
                min_kbps: 300,
                max_kbps: 2_000,
                period_ms: 4_000,
                step_ms: 500,
            },
            20_000,
            0,
        );
        let traces = gen_sessions(&SessionSpec::default(), &feed, 5);

        let manifest = dir.path().join("feed.json");
        save_manifest(&manifest, &feed).unwrap();
        assert_eq!(load_manifest(&manifest).unwrap(), feed);

        let csv = dir.path().join("bw.csv");
        save_bandwidth_csv(&csv, &bw).unwrap();
        assert_eq!(load_bandwidth_csv(&csv).unwrap(), bw);

        let sessions = dir.path().join("sessions.csv");
        save_sessions_csv(&sessions, &traces).unwrap();
        assert_eq!(load_sessions_csv(&sessions).unwrap(), traces);
    }

    #[test]
    fn manifest_rejects_future_schema_and_bad_videos() {
        let feed = gen_feed(&FeedSpec::default(), 7);
        let bumped = manifest_to_string(&feed).replace(
            "\"schema_version\": 1",
            "\"schema_version\": 2",
        );
        assert!(matches!(
            parse_manifest(&bumped),
            Err(TraceIoError::SchemaVersion { found: 2 })
        ));
        // Corrupt a quality out of range.
        let mut broken = feed.clone();
        broken.videos[0].chunks[0].variants[0].quality = 1.5;
        let text = manifest_to_string(&broken);
        assert!(matches!(parse_manifest(&text), Err(TraceIoError::Manifest(_))));
    }

    #[test]
    fn bandwidth_csv_accepts_optional_header_and_reports_lines() {
        let with_header = "timestamp_ms,throughput_kbps\n0,1000\n2000,500\n";
        let without = "0,1000\n2000,500\n";
        let a = parse_bandwidth_csv(with_header).unwrap();
        let b = parse_bandwidth_csv(without).unwrap();
        assert_eq!(a.samples(), b.samples());
        assert_eq!(a.kbps_at(2500), 500);

        let err = parse_bandwidth_csv("0,1000\nnonsense\n").unwrap_err();
        assert!(matches!(err, TraceIoError::Csv { line: 2, .. }), "{err}");
        let err = parse_bandwidth_csv("0,1000\n500\n").unwrap_err();
        assert!(matches!(err, TraceIoError::Csv { line: 2, .. }), "{err}");
        // Model-level violations surface too (first sample must sit at 0).
        assert!(parse_bandwidth_csv("100,1000\n").is_err());
    }

    #[test]
    fn bandwidth_round_trip_is_identity() {
        let bw = BandwidthModel::new(vec![
            BandwidthSample { at_ms: 0, kbps: 800 },
            BandwidthSample { at_ms: 1500, kbps: 1200 },
        ])
        .unwrap();
        assert_eq!(parse_bandwidth_csv(&bandwidth_to_csv(&bw)).unwrap().samples(), bw.samples());
    }

    #[test]
    fn sessions_csv_handles_both_layouts() {
        let two_col = "video_id,watch_ms\nv0,4000\nv1,1500\n";
        let traces = parse_sessions_csv(two_col).unwrap();
        assert_eq!(traces.len(), 1);
        assert_eq!(traces[0].entries.len(), 2);
        assert_eq!(traces[0].entries[1].watch_ms, 1500);

        let three_col = "s1,v0,4000\ns2,v0,900\ns1,v1,1500\n";
        let traces = parse_sessions_csv(three_col).unwrap();
        assert_eq!(traces.len(), 2);
        assert_eq!(traces[0].id, "s1");
        assert_eq!(traces[0].entries.len(), 2);
        assert_eq!(traces[1].entries[0].watch_ms, 900);

        // Mixed column counts are an error, as is an empty file.
        assert!(parse_sessions_csv("v0,100\ns,v1,200\n").is_err());
        assert!(parse_sessions_csv("").is_err());
    }

    #[test]
    fn sessions_round_trip_preserves_order() {
        let traces = vec![
            SessionTrace {
                id: "a".into(),
                entries: vec![
                    SessionEntry { video_id: "v0".into(), watch_ms: 100 },
                    SessionEntry { video_id: "v1".into(), watch_ms: 0 },
                ],
            },
            SessionTrace {
                id: "b".into(),
                entries: vec![SessionEntry { video_id: "v0".into(), watch_ms: 7 }],
            },
        ];
        let back = parse_sessions_csv(&sessions_to_csv(&traces)).unwrap();
        assert_eq!(back, traces);
    }

    #[test]
    fn standard_chunks_follow_the_quality_ladder() {
        let chunk = standard_chunk(ChunkId::new(0, 0), 1000, true);
        // Five pixel rungs plus one generated variant.
        assert_eq!(chunk.variants.len(), 6);
        let low = &chunk.variants[0];
        assert_eq!(low.size_bytes, 25_000); // 200 kbps * 1 s / 8
        assert!((low.quality - 0.457).abs() < 1e-12);
        let top = &chunk.variants[4];
        assert_eq!(top.size_bytes, 150_000); // 1200 kbps * 1 s / 8
        assert!((top.quality - 0.546).abs() < 1e-12);
        let prompt = &chunk.variants[5];
        assert_eq!(prompt.size_bytes, 9_000); // 8,800 B/s + 200 B prompt text
        assert!((prompt.quality - PROMPT_QUALITY).abs() < 1e-12);
        assert_eq!(prompt.decode_latency_ms, 1500);
        let report = crate::model::validate_manifest(&standard_video("v", 0, 3, 1000, true));
        assert!(report.is_empty(), "{report:?}");
    }

    #[test]
    fn ladder_interpolation_matches_known_midpoint() {
        // 900 kbps sits between the 600 and 1200 rungs: 0.506 + 0.04/2.
        assert!((quality_for_bitrate(900) - 0.526).abs() < 1e-12);
        assert!((quality_for_bitrate(200) - 0.457).abs() < 1e-12);
        // Clamped outside the ladder.
        assert!((quality_for_bitrate(100) - 0.457).abs() < 1e-12);
        assert!((quality_for_bitrate(5000) - 0.546).abs() < 1e-12);
    }
}
