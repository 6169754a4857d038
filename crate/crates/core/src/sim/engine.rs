//! The per-session event loop.
//!
//! One session is one deterministic thread of events. The network carries at
//! most one transfer at a time; each decode unit runs at most one job with a
//! FIFO queue behind it; playback walks the trace's videos chunk by chunk.
//! The strategy's plan feeds the network queue, and is rebuilt from live
//! state at every replan point. Late chunks trigger a safe-variant emergency
//! fetch at the front of the network queue; in-flight transfers are never
//! preempted.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use crate::model::{
    check_trace, BandwidthModel, Bytes, ChunkId, ChunkVariant, DeviceModel, Feed, Ms, PlanStep,
    SessionTrace, StrategyId, UnitId,
};
use crate::planner::{
    fallback_plan, plan_fixed_nextk_baseline, plan_mcts, plan_sequential_baseline, remap_stripped_plan,
    strip_prompt_variants, PlanError, PlanOutcome,
};
use crate::scoring::{chunk_score, ChunkMetrics};
use crate::timeline::{duration_for_bytes, PlayPosition, PlaybackState, Playhead};

use super::batch::{derive_seed, mix};
use super::{
    EventKind, EventLog, EventRecord, SessionMetrics, SimConfig, SimError, VideoBreakdown,
};

/// Plays one session to completion.
///
/// The trace's videos must match the feed's, in order, from the top of the
/// deck. Returns the realized metrics and the processed-event log; equal
/// inputs produce byte-identical logs.
pub fn run_session(
    feed: &Feed,
    device: &DeviceModel,
    bw: &BandwidthModel,
    trace: &SessionTrace,
    strategy: StrategyId,
    cfg: &SimConfig,
) -> Result<(SessionMetrics, EventLog), SimError> {
    check_trace(feed, trace)?;
    cfg.planner.weights.validate()?;
    let stripped = match strategy {
        StrategyId::HybridOff => Some(strip_prompt_variants(feed)?),
        _ => None,
    };
    let session_seed = derive_seed(cfg.master_seed, &trace.id, strategy);
    Session {
        feed,
        device,
        bw,
        trace,
        strategy,
        cfg,
        stripped,
        session_seed,
        now: 0,
        events: BinaryHeap::new(),
        seq: 0,
        log: EventLog::default(),
        queue: VecDeque::new(),
        emergency: None,
        inflight: None,
        next_token: 0,
        downloaded: BTreeMap::new(),
        decoded: BTreeMap::new(),
        played: BTreeMap::new(),
        wasted: BTreeMap::new(),
        units: device.units.iter().map(|&u| (u, UnitState::default())).collect(),
        entry_idx: 0,
        video_due: 0,
        first_due: 0,
        content_played: 0,
        playing: None,
        waiting_for: None,
        waiting_since: 0,
        epoch: 0,
        replan_counter: 0,
        ended: false,
        downloaded_bytes: 0,
        played_bytes: 0,
        wasted_bytes: 0,
        total_stall_ms: 0,
        played_seq: Vec::new(),
        per_video: Vec::new(),
        fallback_replans: 0,
    }
    .run()
}

#[derive(Clone, Copy, Debug)]
enum Payload {
    DownloadComplete { chunk: ChunkId, token: u64 },
    DecodeComplete { chunk: ChunkId, unit: UnitId },
    ChunkPlaybackDue { chunk: ChunkId, epoch: u32 },
    Swipe { epoch: u32 },
    ReplanTimer,
    SessionEnd { epoch: u32 },
}

struct QueuedEvent {
    time: Ms,
    kind: EventKind,
    chunk: Option<ChunkId>,
    seq: u64,
    payload: Payload,
}

impl QueuedEvent {
    fn order_key(&self) -> (Ms, EventKind, Option<ChunkId>, u64) {
        (self.time, self.kind, self.chunk, self.seq)
    }
}

impl PartialEq for QueuedEvent {
    fn eq(&self, other: &Self) -> bool {
        self.order_key() == other.order_key()
    }
}
impl Eq for QueuedEvent {}
impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueuedEvent {
    // Reversed: BinaryHeap is a max-heap, the loop wants the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other.order_key().cmp(&self.order_key())
    }
}

#[derive(Clone, Copy)]
struct Inflight {
    step: PlanStep,
    start: Ms,
    end: Ms,
    token: u64,
}

#[derive(Default)]
struct UnitState {
    /// Chunk being decoded and when it finishes.
    running: Option<(ChunkId, Ms)>,
    queue: VecDeque<(ChunkId, usize)>,
}

struct PlayingChunk {
    chunk: ChunkId,
    start: Ms,
}

struct PlayedRecord {
    chunk: ChunkId,
    quality: f64,
    size_bytes: Bytes,
    stall_ms: Ms,
    generated: bool,
}

struct Session<'a> {
    feed: &'a Feed,
    device: &'a DeviceModel,
    bw: &'a BandwidthModel,
    trace: &'a SessionTrace,
    strategy: StrategyId,
    cfg: &'a SimConfig,
    /// Pixel-only feed view plus index maps, for the hybrid-off ablation.
    stripped: Option<(Feed, Vec<Vec<Vec<usize>>>)>,
    session_seed: u64,

    now: Ms,
    events: BinaryHeap<QueuedEvent>,
    seq: u64,
    log: EventLog,

    /// Planned downloads not yet started, in plan order.
    queue: VecDeque<PlanStep>,
    /// Late-chunk rescue download; jumps the queue, never preempts.
    emergency: Option<PlanStep>,
    inflight: Option<Inflight>,
    next_token: u64,

    /// Fully transferred chunks (variant index), played or not.
    downloaded: BTreeMap<ChunkId, usize>,
    /// Decoded and ready to present.
    decoded: BTreeMap<ChunkId, usize>,
    /// Chunks that began playback.
    played: BTreeMap<ChunkId, usize>,
    /// Fully transferred chunks written off at a swipe.
    wasted: BTreeMap<ChunkId, usize>,
    units: BTreeMap<UnitId, UnitState>,

    /// Current trace entry == current video index (the trace starts at the
    /// top of the deck).
    entry_idx: usize,
    /// When the current video became the one on screen.
    video_due: Ms,
    /// When its first chunk is allowed to start (due + startup allowance).
    first_due: Ms,
    /// Content milliseconds of the current video already played.
    content_played: Ms,
    playing: Option<PlayingChunk>,
    /// Set while playback is blocked on this chunk.
    waiting_for: Option<ChunkId>,
    /// When the blocked (or first) chunk was due; stall is measured from
    /// here.
    waiting_since: Ms,
    /// Bumped at every video switch; stale playback events are dropped.
    epoch: u32,
    replan_counter: u64,
    ended: bool,

    downloaded_bytes: Bytes,
    played_bytes: Bytes,
    wasted_bytes: Bytes,
    total_stall_ms: Ms,
    played_seq: Vec<PlayedRecord>,
    per_video: Vec<VideoBreakdown>,
    fallback_replans: u64,
}

impl<'a> Session<'a> {
    fn run(mut self) -> Result<(SessionMetrics, EventLog), SimError> {
        if self.trace.entries.is_empty() {
            self.schedule(0, EventKind::SessionEnd, None, Payload::SessionEnd { epoch: 0 });
        } else {
            self.open_video(0, 0, self.cfg.startup_delay_ms);
        }
        self.replan()?;
        self.dispatch();
        self.schedule(self.cfg.replan_interval_ms, EventKind::ReplanTimer, None, Payload::ReplanTimer);

        while let Some(ev) = self.events.pop() {
            self.now = ev.time;
            match ev.payload {
                Payload::DownloadComplete { chunk, token } => {
                    if self.inflight.as_ref().map(|i| i.token) != Some(token) {
                        continue; // abandoned transfer
                    }
                    self.record(EventKind::DownloadComplete, Some(chunk), Some(UnitId::Network));
                    self.on_download_complete(chunk)?;
                }
                Payload::DecodeComplete { chunk, unit } => {
                    self.record(EventKind::DecodeComplete, Some(chunk), Some(unit));
                    self.on_decode_complete(chunk, unit);
                }
                Payload::ChunkPlaybackDue { chunk, epoch } => {
                    if epoch != self.epoch {
                        continue;
                    }
                    self.record(EventKind::ChunkPlaybackDue, Some(chunk), None);
                    self.on_playback_due(chunk)?;
                }
                Payload::Swipe { epoch } => {
                    if epoch != self.epoch {
                        continue;
                    }
                    self.record(EventKind::Swipe, None, None);
                    self.on_swipe()?;
                }
                Payload::ReplanTimer => {
                    self.record(EventKind::ReplanTimer, None, None);
                    self.replan()?;
                    self.dispatch();
                    let next = self.now + self.cfg.replan_interval_ms;
                    self.schedule(next, EventKind::ReplanTimer, None, Payload::ReplanTimer);
                }
                Payload::SessionEnd { epoch } => {
                    if epoch != self.epoch {
                        continue;
                    }
                    self.record(EventKind::SessionEnd, None, None);
                    self.on_session_end();
                }
            }
            if self.ended {
                break;
            }
        }
        Ok(self.into_results())
    }

    // ---- event handlers ----------------------------------------------

    fn on_download_complete(&mut self, chunk: ChunkId) -> Result<(), SimError> {
        let inf = self.inflight.take().expect("token was checked");
        let variant = self.variant_of(&inf.step);
        let (size, unit) = (variant.size_bytes, variant.decode_unit);
        self.downloaded_bytes += size;
        self.downloaded.insert(chunk, inf.step.variant_index);
        self.units
            .get_mut(&unit)
            .expect("plans only use units the device has")
            .queue
            .push_back((chunk, inf.step.variant_index));
        self.start_decode(unit);
        self.replan()?;
        self.dispatch();
        Ok(())
    }

    fn on_decode_complete(&mut self, chunk: ChunkId, unit: UnitId) {
        let variant_index = {
            let u = self.units.get_mut(&unit).expect("decode ran on this unit");
            debug_assert_eq!(u.running.map(|(c, _)| c), Some(chunk));
            u.running = None;
            self.downloaded[&chunk]
        };
        self.decoded.insert(chunk, variant_index);
        self.start_decode(unit);
        if self.waiting_for == Some(chunk) {
            self.begin_playback(chunk);
        }
    }

    fn on_playback_due(&mut self, chunk: ChunkId) -> Result<(), SimError> {
        if let Some(p) = self.playing.take() {
            debug_assert!(self.chunk_end(&p) <= self.now);
        }
        // A due for the next video's head is the watch-through transition:
        // no startup allowance, the screen flips at the content boundary.
        if chunk.video_index as usize != self.entry_idx {
            self.enter_video(chunk.video_index as usize, self.now, 0);
            if self.watch_target() == 0 {
                self.schedule_departure(self.now);
                return Ok(());
            }
        }
        self.waiting_since = if chunk.chunk_index == 0 { self.video_due } else { self.now };
        if self.decoded.contains_key(&chunk) {
            self.begin_playback(chunk);
        } else {
            self.waiting_for = Some(chunk);
            self.maybe_emergency();
            self.dispatch();
        }
        Ok(())
    }

    fn on_swipe(&mut self) -> Result<(), SimError> {
        debug_assert!(self.waiting_for.is_none(), "swipes only happen during playback");
        self.abandon_current_video();
        if let Some(v) = self.per_video.last_mut() {
            v.swiped_early = true;
        }
        self.playing = None;
        self.epoch += 1;
        self.open_video(self.entry_idx + 1, self.now, self.cfg.startup_delay_ms);
        self.replan()?;
        self.dispatch();
        Ok(())
    }

    fn on_session_end(&mut self) {
        self.ended = true;
        if !self.per_video.is_empty() {
            let cut_short = self.watch_target() < self.video_total(self.entry_idx);
            self.per_video.last_mut().unwrap().swiped_early = cut_short;
        }
    }

    // ---- playback ------------------------------------------------------

    /// Bookkeeping for entry `idx` becoming the video on screen from `due`
    /// on. Scheduling is the caller's job.
    fn enter_video(&mut self, idx: usize, due: Ms, allowance: Ms) {
        self.entry_idx = idx;
        self.video_due = due;
        self.first_due = due + allowance;
        self.content_played = 0;
        self.playing = None;
        self.waiting_for = None;
        self.per_video.push(VideoBreakdown {
            video_id: self.feed.videos[idx].video_id.clone(),
            startup_wait_ms: 0,
            stall_ms: 0,
            played_chunks: 0,
            generated_chunks_played: 0,
            swiped_early: false,
        });
    }

    /// Enters a video from a cold screen (session start or a swipe) and
    /// schedules its first chunk — or the viewer's instant departure.
    fn open_video(&mut self, idx: usize, due: Ms, allowance: Ms) {
        self.enter_video(idx, due, allowance);
        if self.watch_target() == 0 {
            self.schedule_departure(due);
        } else {
            let first = ChunkId::new(idx as u32, 0);
            self.schedule(
                self.first_due,
                EventKind::ChunkPlaybackDue,
                Some(first),
                Payload::ChunkPlaybackDue { chunk: first, epoch: self.epoch },
            );
        }
    }

    /// Swipe away from the current video, or end the session after the last
    /// trace entry.
    fn schedule_departure(&mut self, at: Ms) {
        if self.entry_idx + 1 < self.trace.entries.len() {
            self.schedule(at, EventKind::Swipe, None, Payload::Swipe { epoch: self.epoch });
        } else {
            self.schedule(at, EventKind::SessionEnd, None, Payload::SessionEnd { epoch: self.epoch });
        }
    }

    fn begin_playback(&mut self, chunk: ChunkId) {
        let variant_index = self.decoded[&chunk];
        let variant =
            self.feed.chunk(chunk).expect("due chunks exist").variants[variant_index].clone();
        let playout = self.feed.chunk(chunk).unwrap().playout_ms;
        let stall = self.now - self.waiting_since;
        self.waiting_for = None;
        self.total_stall_ms += stall;
        let video = self.per_video.last_mut().expect("entered before playing");
        video.stall_ms += stall;
        if chunk.chunk_index == 0 {
            video.startup_wait_ms = stall;
        }
        video.played_chunks += 1;
        if variant.codec.is_prompt() {
            video.generated_chunks_played += 1;
        }
        self.played.insert(chunk, variant_index);
        self.played_bytes += variant.size_bytes;
        self.played_seq.push(PlayedRecord {
            chunk,
            quality: variant.quality,
            size_bytes: variant.size_bytes,
            stall_ms: stall,
            generated: variant.codec.is_prompt(),
        });
        self.playing = Some(PlayingChunk { chunk, start: self.now });

        // Where does playback go after this chunk: swipe out, next chunk, or
        // across the boundary into the next video.
        let watch = self.watch_target();
        let total = self.video_total(self.entry_idx);
        let before = self.content_played;
        self.content_played += playout;
        let end = self.now + playout;
        if watch <= before + playout && watch < total {
            self.schedule_departure(self.now + (watch - before));
        } else if before + playout >= total {
            let next_idx = self.entry_idx + 1;
            if next_idx < self.trace.entries.len() {
                let head = ChunkId::new(next_idx as u32, 0);
                self.schedule(
                    end,
                    EventKind::ChunkPlaybackDue,
                    Some(head),
                    Payload::ChunkPlaybackDue { chunk: head, epoch: self.epoch },
                );
            } else {
                self.schedule(end, EventKind::SessionEnd, None, Payload::SessionEnd {
                    epoch: self.epoch,
                });
            }
        } else {
            let next = ChunkId::new(chunk.video_index, chunk.chunk_index + 1);
            self.schedule(end, EventKind::ChunkPlaybackDue, Some(next), Payload::ChunkPlaybackDue {
                chunk: next,
                epoch: self.epoch,
            });
        }
    }

    /// Content the viewer will watch of the current video before leaving.
    fn watch_target(&self) -> Ms {
        self.trace.entries[self.entry_idx].watch_ms.min(self.video_total(self.entry_idx))
    }

    fn video_total(&self, idx: usize) -> Ms {
        self.feed.videos[idx].chunks.iter().map(|c| c.playout_ms).sum()
    }

    fn chunk_end(&self, p: &PlayingChunk) -> Ms {
        p.start + self.feed.chunk(p.chunk).unwrap().playout_ms
    }

    // ---- network and decode units --------------------------------------

    /// Starts the next transfer if the network is idle: the emergency fetch
    /// first, then the plan queue, skipping anything already acquired.
    fn dispatch(&mut self) {
        while self.inflight.is_none() {
            let Some(step) = self.emergency.take().or_else(|| self.queue.pop_front()) else {
                return;
            };
            if self.downloaded.contains_key(&step.chunk) {
                continue;
            }
            let variant = self.variant_of(&step);
            let start = self.now;
            let end = start + duration_for_bytes(variant.size_bytes, self.bw, start);
            self.next_token += 1;
            let token = self.next_token;
            self.inflight = Some(Inflight { step, start, end, token });
            self.schedule(end, EventKind::DownloadComplete, Some(step.chunk), Payload::DownloadComplete {
                chunk: step.chunk,
                token,
            });
        }
    }

    fn start_decode(&mut self, unit: UnitId) {
        let u = self.units.get_mut(&unit).expect("unit exists");
        if u.running.is_some() {
            return;
        }
        let Some((chunk, variant_index)) = u.queue.pop_front() else { return };
        let decode_ms =
            self.feed.chunk(chunk).unwrap().variants[variant_index].decode_latency_ms;
        let end = self.now + decode_ms;
        u.running = Some((chunk, end));
        self.schedule(end, EventKind::DecodeComplete, Some(chunk), Payload::DecodeComplete {
            chunk,
            unit,
        });
    }

    /// The due chunk is late. If nobody is fetching it, rescue it with the
    /// safe variant at the front of the network queue.
    fn maybe_emergency(&mut self) {
        let Some(chunk) = self.waiting_for else { return };
        if self.downloaded.contains_key(&chunk) {
            return; // decode is pending; nothing to fetch
        }
        if self.inflight.as_ref().map(|i| i.step.chunk) == Some(chunk) {
            return; // already on the wire
        }
        if self.emergency.map(|e| e.chunk) == Some(chunk) {
            return;
        }
        let variant_index = self.feed.chunk(chunk).expect("due chunks exist").safe_variant_index();
        self.queue.retain(|s| s.chunk != chunk);
        self.emergency = Some(PlanStep { chunk, variant_index });
    }

    /// Write off the current video at a swipe: buffered-but-unplayed chunks,
    /// the in-flight transfer, queued decodes, and any pending rescue.
    fn abandon_current_video(&mut self) {
        let video = self.entry_idx as u32;
        let from = ChunkId::new(video, 0);
        let to = ChunkId::new(video + 1, 0);
        let doomed: Vec<(ChunkId, usize)> = self
            .downloaded
            .range(from..to)
            .filter(|(c, _)| !self.played.contains_key(c))
            .map(|(c, v)| (*c, *v))
            .collect();
        for (chunk, variant_index) in doomed {
            if self.wasted.insert(chunk, variant_index).is_none() {
                self.wasted_bytes +=
                    self.feed.chunk(chunk).unwrap().variants[variant_index].size_bytes;
            }
        }
        if let Some(inf) = &self.inflight {
            if inf.step.chunk.video_index <= video {
                let size = self.variant_of(&inf.step).size_bytes;
                let partial = partial_bytes(self.bw, inf.start, self.now, size);
                self.downloaded_bytes += partial;
                self.wasted_bytes += partial;
                self.inflight = None; // its completion event is now stale
            }
        }
        if self.emergency.map(|e| e.chunk.video_index) == Some(video) {
            self.emergency = None;
        }
        self.queue.retain(|s| s.chunk.video_index > video);
        for unit in self.units.values_mut() {
            unit.queue.retain(|(c, _)| c.video_index > video);
        }
    }

    // ---- planning -------------------------------------------------------

    /// Snapshot of live state in the planners' vocabulary.
    fn planning_state(&self) -> PlaybackState {
        let position = match &self.playing {
            Some(p) => PlayPosition::Playing(Playhead {
                chunk: p.chunk,
                elapsed_ms: self.now - p.start,
            }),
            None => match self.waiting_for {
                Some(next) => PlayPosition::Idle { next },
                None if self.entry_idx < self.trace.entries.len() => PlayPosition::Idle {
                    next: ChunkId::new(self.entry_idx as u32, 0),
                },
                None => PlayPosition::Ended,
            },
        };
        let buffered: BTreeMap<ChunkId, usize> = self
            .downloaded
            .iter()
            .filter(|(c, _)| !self.played.contains_key(c))
            .map(|(c, v)| (*c, *v))
            .collect();
        let mut pending = BTreeMap::new();

        // Project committed decode work into each unit's busy horizon.
        let mut unit_free_at: BTreeMap<UnitId, Ms> = BTreeMap::new();
        for (&unit, st) in &self.units {
            let mut tail = st.running.map(|(_, end)| end).unwrap_or(self.now);
            for &(chunk, v) in &st.queue {
                tail += self.feed.chunk(chunk).unwrap().variants[v].decode_latency_ms;
            }
            unit_free_at.insert(unit, tail);
        }
        // Commitments the network already holds: the in-flight transfer and
        // the emergency fetch will complete (and decode) before anything a
        // new plan adds.
        let mut network_free_at = self.now;
        if let Some(inf) = &self.inflight {
            pending.insert(inf.step.chunk, inf.step.variant_index);
            network_free_at = inf.end;
            let variant = self.variant_of(&inf.step);
            let tail = unit_free_at.entry(variant.decode_unit).or_insert(self.now);
            *tail = (*tail).max(inf.end) + variant.decode_latency_ms;
        }
        if let Some(em) = &self.emergency {
            pending.insert(em.chunk, em.variant_index);
            let variant = self.variant_of(em);
            let end = network_free_at
                + duration_for_bytes(variant.size_bytes, self.bw, network_free_at);
            network_free_at = end;
            let tail = unit_free_at.entry(variant.decode_unit).or_insert(self.now);
            *tail = (*tail).max(end) + variant.decode_latency_ms;
        }

        let head = match &position {
            PlayPosition::Playing(p) => self.feed.next_chunk(p.chunk),
            PlayPosition::Idle { next } => Some(*next),
            PlayPosition::Ended => None,
        };
        let prev_quality = head.and_then(|h| {
            if h.chunk_index == 0 {
                return None;
            }
            let prev = ChunkId::new(h.video_index, h.chunk_index - 1);
            let v = self.played.get(&prev)?;
            Some(self.feed.chunk(prev).unwrap().variants[*v].quality)
        });

        PlaybackState {
            now: self.now,
            position,
            buffered,
            pending,
            network_free_at,
            unit_free_at,
            startup_delay_ms: self.first_due.saturating_sub(self.now),
            prev_quality,
        }
    }

    /// Rebuilds the download queue from the strategy, then re-checks the
    /// late-chunk rescue (a fresh plan may have dropped the chunk playback
    /// is blocked on).
    fn replan(&mut self) -> Result<(), SimError> {
        let state = self.planning_state();
        let mut planner_cfg = self.cfg.planner;
        planner_cfg.seed = mix(self.session_seed ^ mix(self.replan_counter));
        self.replan_counter += 1;
        let planned: Result<PlanOutcome, PlanError> = match self.strategy {
            StrategyId::Mcts => {
                plan_mcts(self.feed, self.device, self.bw, &state, &planner_cfg)
            }
            StrategyId::Sequential => {
                plan_sequential_baseline(self.feed, self.device, self.bw, &state, &planner_cfg)
            }
            StrategyId::FixedNextK => plan_fixed_nextk_baseline(
                self.feed,
                self.device,
                self.bw,
                &state,
                &planner_cfg,
                self.cfg.fixed_next_k,
                self.cfg.bitrate_rule,
            ),
            StrategyId::HybridOff => {
                let (stripped, maps) = self.stripped.as_ref().expect("built at session start");
                plan_mcts(stripped, self.device, self.bw, &state, &planner_cfg)
                    .map(|mut outcome| {
                        outcome.plan = remap_stripped_plan(&outcome.plan, maps);
                        outcome
                    })
            }
        };
        self.queue = match planned {
            Ok(outcome) => outcome.plan.steps.into(),
            Err(PlanError::InfeasibleAllPruned) => {
                self.fallback_replans += 1;
                let plan = fallback_plan(
                    self.feed,
                    self.device,
                    &state,
                    self.cfg.planner.horizon_chunks,
                );
                plan.steps.into()
            }
            Err(other) => return Err(other.into()),
        };
        self.maybe_emergency();
        Ok(())
    }

    // ---- bookkeeping ----------------------------------------------------

    fn variant_of(&self, step: &PlanStep) -> &ChunkVariant {
        &self.feed.chunk(step.chunk).expect("steps point into the feed").variants
            [step.variant_index]
    }

    fn schedule(&mut self, time: Ms, kind: EventKind, chunk: Option<ChunkId>, payload: Payload) {
        self.seq += 1;
        self.events.push(QueuedEvent { time, kind, chunk, seq: self.seq, payload });
    }

    fn record(&mut self, kind: EventKind, chunk: Option<ChunkId>, unit: Option<UnitId>) {
        self.log.records.push(EventRecord { time: self.now, kind, chunk, unit });
    }

    fn into_results(mut self) -> (SessionMetrics, EventLog) {
        // Whatever is still buffered (or on the wire) ahead of the playhead
        // when the session ends was downloaded but neither played nor
        // written off.
        let mut leftover: Bytes = self
            .downloaded
            .iter()
            .filter(|(c, _)| !self.played.contains_key(c) && !self.wasted.contains_key(c))
            .map(|(c, v)| self.feed.chunk(*c).unwrap().variants[*v].size_bytes)
            .sum();
        if let Some(inf) = &self.inflight {
            let size = self.variant_of(&inf.step).size_bytes;
            let partial = partial_bytes(self.bw, inf.start, self.now, size);
            self.downloaded_bytes += partial;
            leftover += partial;
        }

        let mean_quality = if self.played_seq.is_empty() {
            0.0
        } else {
            self.played_seq.iter().map(|r| r.quality).sum::<f64>() / self.played_seq.len() as f64
        };
        let mut quality_switches = 0;
        let mut qoe = 0.0;
        let mut prev: Option<&PlayedRecord> = None;
        for r in &self.played_seq {
            let same_video = prev.map(|p| p.chunk.video_index) == Some(r.chunk.video_index);
            if same_video && prev.map(|p| p.quality) != Some(r.quality) {
                quality_switches += 1;
            }
            qoe += chunk_score(
                &ChunkMetrics {
                    chunk: r.chunk,
                    quality: r.quality,
                    prev_quality: same_video.then(|| prev.unwrap().quality),
                    stall_ms: r.stall_ms,
                    size_bytes: r.size_bytes,
                },
                &self.cfg.planner.weights,
            );
            prev = Some(r);
        }

        let metrics = SessionMetrics {
            trace_id: self.trace.id.clone(),
            strategy: self.strategy,
            total_stall_ms: self.total_stall_ms,
            downloaded_bytes: self.downloaded_bytes,
            played_bytes: self.played_bytes,
            wasted_bytes: self.wasted_bytes,
            leftover_bytes: leftover,
            mean_quality,
            quality_switches,
            qoe,
            played_chunks: self.played_seq.len() as u64,
            generated_chunks_played: self.played_seq.iter().filter(|r| r.generated).count() as u64,
            fallback_replans: self.fallback_replans,
            per_video: self.per_video,
        };
        (metrics, self.log)
    }
}

/// Bytes transferred by an abandoned or still-running download in
/// `[start, until]`, capped at the full size.
fn partial_bytes(bw: &BandwidthModel, start: Ms, until: Ms, size: Bytes) -> Bytes {
    (bw.bits_between(start, until) / 8).min(size as u128) as Bytes
}
