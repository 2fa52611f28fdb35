//! Discrete-event simulation of GVs offloading sensor frames to a LEO
//! constellation.

pub mod metrics;
pub mod output;
pub mod trace;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fs;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig, BUILTIN_STARLINK};
use crate::link::{self, ChannelParams, LinkEndpointParams};
use crate::orbit::{above_horizon, GeoPoint, Geometry, OrbitError, Propagator, SatelliteState, UtcInstant, EARTH_RADIUS_KM};
use crate::policy::{decide_frame, maintain_association, on_feedback, on_tick, Decision, GvPolicyState, PolicyConfig, PolicyRngs};
use crate::queueing::{estimate_onboard_delay, service_time, FeedbackView, FrameTask, OffloadLink, WorkQueue};
use crate::rng;
use crate::tle::{self, Constellation, TleError};

pub use metrics::{compute_metrics, BoxStats, LoadFactors, Metrics};

/// Bundled Starlink-shell element sets.
pub const BUILTIN_STARLINK_TLE: &str = include_str!("../../data/starlink_shells.tle");

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("constellation: {0}")]
    Tle(#[from] TleError),
    #[error("cannot read constellation {path}: {source}")]
    ConstellationIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("constellation has no usable LEO records")]
    ConstellationEmpty,
    #[error("orbit propagation: {0}")]
    Orbit(#[from] OrbitError),
    #[error("no satellite above the horizon at the start of the trace")]
    NoVisibleSatellite,
}

impl EngineError {
    pub fn is_config(&self) -> bool {
        matches!(self, EngineError::Config(_))
    }
}

/// Raw TLE text named by a constellation source.
pub fn constellation_text(source: &str) -> Result<String, EngineError> {
    if source == BUILTIN_STARLINK {
        return Ok(BUILTIN_STARLINK_TLE.to_string());
    }
    fs::read_to_string(source).map_err(|e| EngineError::ConstellationIo {
        path: source.to_string(),
        source: e,
    })
}

/// Constellation of a scenario, subset with the run's seed.
pub fn load_scenario_constellation(cfg: &ScenarioConfig) -> Result<Constellation, EngineError> {
    let text = constellation_text(&cfg.constellation.source)?;
    let c = tle::load_constellation(
        &text,
        cfg.constellation.size,
        rng::substream_seed(cfg.seed, rng::CONSTELLATION_SUBSET),
    )?;
    if c.is_empty() {
        return Err(EngineError::ConstellationEmpty);
    }
    Ok(c)
}

/// Julian date of the first simulated instant: the configured start, else the
/// newest element-set epoch.
pub fn start_jd(cfg: &ScenarioConfig, fleet: &Fleet) -> Result<f64, EngineError> {
    Ok(match cfg.start_time()? {
        Some(t) => t.timestamp() as f64 / 86_400.0 + t.timestamp_subsec_nanos() as f64 / 8.64e13 + 2_440_587.5,
        None => fleet.propagators.iter().map(|p| p.epoch_jd()).fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Propagators for every usable record; records outside the LEO band are skipped.
pub struct Fleet {
    pub ids: Vec<u32>,
    pub propagators: Vec<Propagator>,
    pub skipped: usize,
    index: HashMap<u32, usize>,
}

impl Fleet {
    pub fn new(c: &Constellation) -> Result<Self, EngineError> {
        let mut ids = Vec::with_capacity(c.size());
        let mut propagators = Vec::with_capacity(c.size());
        let mut skipped = 0;
        for r in c.records() {
            match Propagator::new(r) {
                Ok(p) => {
                    ids.push(r.catalog_id);
                    propagators.push(p);
                }
                Err(OrbitError::NotLeo { .. } | OrbitError::HyperbolicElements(_)) => skipped += 1,
                Err(e) => return Err(e.into()),
            }
        }
        if ids.is_empty() {
            return Err(EngineError::ConstellationEmpty);
        }
        let index = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        Ok(Self {
            ids,
            propagators,
            skipped,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.index.get(&id).copied()
    }
}

/// Trigonometric form of a surface point for fast central-angle evaluation.
#[derive(Debug, Clone, Copy)]
struct UnitPoint {
    slat: f64,
    clat: f64,
    slon: f64,
    clon: f64,
}

impl UnitPoint {
    fn new(p: GeoPoint) -> Self {
        let (slat, clat) = p.lat.to_radians().sin_cos();
        let (slon, clon) = p.lon.to_radians().sin_cos();
        Self { slat, clat, slon, clon }
    }

    fn cos_angle(&self, o: &UnitPoint) -> f64 {
        let cos_dlon = self.clon * o.clon + self.slon * o.slon;
        (self.clat * o.clat * cos_dlon + self.slat * o.slat).clamp(-1.0, 1.0)
    }
}

/// GV positions drawn uniformly over the placement disk.
pub fn place_gvs<R: Rng>(center: GeoPoint, radius_km: f64, n: u32, rng: &mut R) -> Vec<GeoPoint> {
    (0..n)
        .map(|_| {
            let r = radius_km * rng.gen::<f64>().sqrt();
            let bearing = std::f64::consts::TAU * rng.gen::<f64>();
            let dlat = (r * bearing.cos() / EARTH_RADIUS_KM).to_degrees();
            let lat = (center.lat + dlat).clamp(-90.0, 90.0);
            let dlon = (r * bearing.sin() / (EARTH_RADIUS_KM * lat.to_radians().cos().max(1e-6))).to_degrees();
            GeoPoint {
                lat,
                lon: crate::orbit::wrap_longitude(center.lon + dlon),
            }
        })
        .collect()
}

/// Link terms between a GV and a satellite, or `None` when the satellite is
/// masked or the uplink SNR does not exceed the serving threshold.
#[allow(clippy::too_many_arguments)]
pub fn offload_link_for(
    gv: GeoPoint,
    sat_id: u32,
    state: &SatelliteState,
    min_elevation_deg: f64,
    gv_ant: &LinkEndpointParams,
    sat_ant: &LinkEndpointParams,
    channel: &ChannelParams,
    snr_serve_th_db: f64,
    size_ul_bits: f64,
    size_dl_bits: f64,
) -> Option<OffloadLink> {
    let g = Geometry::evaluate(gv, state)?;
    if g.elevation_deg < min_elevation_deg {
        return None;
    }
    let ul = link::evaluate(gv_ant, sat_ant, g.slant_km, g.elevation_deg, channel).ok()?;
    if ul.snr_db <= snr_serve_th_db {
        return None;
    }
    let dl = link::evaluate(sat_ant, gv_ant, g.slant_km, g.elevation_deg, channel).ok()?;
    Some(OffloadLink {
        sat_id,
        prop_delay_s: g.prop_delay_s,
        t_ul_s: link::tx_delay(size_ul_bits, ul.rate_bps).ok()?,
        t_dl_s: link::tx_delay(size_dl_bits, dl.rate_bps).ok()?,
        snr_ul_db: ul.snr_db,
        snr_dl_db: dl.snr_db,
    })
}

/// Outcome of one run.
#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub version: String,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub start_jd: f64,
    pub satellites: usize,
    pub skipped_records: usize,
    pub metrics: Metrics,
    pub load_factors: LoadFactors,
    #[serde(skip)]
    pub frames: Vec<FrameTask>,
    #[serde(skip)]
    pub gv_positions: Vec<GeoPoint>,
}

#[derive(Debug, Clone, Copy)]
enum EventKind {
    Tick,
    Frame { gv: u32, seq: u64 },
    SatArrival { frame: usize, sat: usize },
    Feedback { gv: u32, view: FeedbackView },
    Deadline { gv: u32 },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    t: f64,
    order: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap.
        other.t.total_cmp(&self.t).then(other.order.cmp(&self.order))
    }
}

struct Gv {
    pos: GeoPoint,
    unit: UnitPoint,
    queue: Option<WorkQueue>,
    policy: GvPolicyState,
    radio_free_s: f64,
    visible: Vec<(u32, f64)>,
    /// (seq, sat) of every offload, in order.
    offloads: Vec<(u64, u32)>,
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    pcfg: PolicyConfig,
    fleet: &'a Fleet,
    base_jd: f64,
    gvs: Vec<Gv>,
    sat_queues: Vec<WorkQueue>,
    frames: Vec<FrameTask>,
    frames_per_gv: u64,
    service_leo_s: f64,
    size_ul_bits: f64,
    size_dl_bits: f64,
    rngs: PolicyRngs<ChaCha8Rng>,
    heap: BinaryHeap<Event>,
    order: u64,
}

impl Sim<'_> {
    fn push(&mut self, t: f64, kind: EventKind) {
        self.heap.push(Event {
            t,
            order: self.order,
            kind,
        });
        self.order += 1;
    }

    fn instant(&self, t: f64) -> UtcInstant {
        UtcInstant::new(self.base_jd, t)
    }

    fn link(&self, gv: usize, sat_id: u32, t: f64) -> Result<Option<OffloadLink>, EngineError> {
        let Some(idx) = self.fleet.index_of(sat_id) else {
            return Ok(None);
        };
        let state = self.fleet.propagators[idx].state_at(self.instant(t))?;
        Ok(offload_link_for(
            self.gvs[gv].pos,
            sat_id,
            &state,
            self.cfg.min_elevation_deg,
            &self.cfg.gv_antenna,
            &self.cfg.sat_antenna,
            &self.cfg.channel,
            self.pcfg.snr_serve_th_db,
            self.size_ul_bits,
            self.size_dl_bits,
        ))
    }

    /// Propagate every satellite, rebuild each GV's candidate list and run
    /// association upkeep.
    fn tick(&mut self, t: f64) -> Result<(), EngineError> {
        let instant = self.instant(t);
        let mut states = Vec::with_capacity(self.fleet.len());
        for p in &self.fleet.propagators {
            let s = p.state_at(instant)?;
            states.push((UnitPoint::new(s.sub_point), s.altitude_km));
        }
        let cfg = self.cfg;
        for gv in &mut self.gvs {
            gv.visible.clear();
            for (k, (unit, h)) in states.iter().enumerate() {
                let cos_alpha = gv.unit.cos_angle(unit);
                if !above_horizon(*h, cos_alpha) {
                    continue;
                }
                let Some(g) = Geometry::from_cos_alpha(*h, cos_alpha) else {
                    continue;
                };
                if g.elevation_deg < cfg.min_elevation_deg {
                    continue;
                }
                let Ok(ul) = link::evaluate(&cfg.gv_antenna, &cfg.sat_antenna, g.slant_km, g.elevation_deg, &cfg.channel)
                else {
                    continue;
                };
                gv.visible.push((self.fleet.ids[k], ul.snr_db));
            }
            let serving_snr = gv
                .policy
                .serving_sat
                .and_then(|s| gv.visible.iter().find(|(id, _)| *id == s).map(|(_, g)| *g));
            maintain_association(&mut gv.policy, serving_snr, &gv.visible, &self.pcfg, &mut self.rngs.selection);
        }
        Ok(())
    }

    /// Serving link at `t`, handing over within the last candidate list when
    /// the serving satellite no longer qualifies.
    fn refresh_association(&mut self, gv: usize, t: f64) -> Result<Option<OffloadLink>, EngineError> {
        let mut excluded: Vec<u32> = Vec::new();
        loop {
            if let Some(sat) = self.gvs[gv].policy.serving_sat {
                if let Some(l) = self.link(gv, sat, t)? {
                    return Ok(Some(l));
                }
                excluded.push(sat);
            }
            let candidates: Vec<(u32, f64)> = self.gvs[gv]
                .visible
                .iter()
                .filter(|(id, _)| !excluded.contains(id))
                .copied()
                .collect();
            let g = &mut self.gvs[gv];
            g.policy.serving_sat = None;
            maintain_association(&mut g.policy, None, &candidates, &self.pcfg, &mut self.rngs.selection);
            if g.policy.serving_sat.is_none() {
                return Ok(None);
            }
        }
    }

    fn frame(&mut self, gv_id: u32, seq: u64, t: f64) -> Result<(), EngineError> {
        let gv = gv_id as usize;
        let idx = gv * self.frames_per_gv as usize + seq as usize;
        let t_hat_gv = self.gvs[gv]
            .queue
            .as_ref()
            .map_or(f64::INFINITY, |q| estimate_onboard_delay(q, t));
        let link = if t_hat_gv >= self.pcfg.deadline_s && self.gvs[gv].policy.backoff_frames_left == 0 {
            self.refresh_association(gv, t)?
        } else {
            None
        };
        let out = decide_frame(
            &mut self.gvs[gv].policy,
            seq,
            t,
            t_hat_gv,
            self.service_leo_s,
            |_| link,
            &self.pcfg,
            &mut self.rngs,
        );
        let f = &mut self.frames[idx];
        f.decision = out.decision;
        match out.decision {
            Decision::Onboard => {
                let q = self.gvs[gv].queue.as_mut().expect("onboard requires a GV queue");
                let e = q.enqueue(t).expect("frames are generated in time order");
                f.t_hat_s = Some(t_hat_gv);
                f.enqueue_s = Some(t);
                f.wait_s = Some(e.wait_s);
                f.service_start_s = Some(e.service_start_s);
                f.service_end_s = Some(e.completion_s);
                f.done_s = Some(e.completion_s);
                f.total_delay_s = Some(e.completion_s - t);
            }
            Decision::Offload(sat_id) => {
                let decided = out.link.expect("offload carries its link");
                f.t_hat_s = out.t_hat_leo;
                let start = t.max(self.gvs[gv].radio_free_s);
                let l = if start > t {
                    self.link(gv, sat_id, start)?.unwrap_or(decided)
                } else {
                    decided
                };
                let f = &mut self.frames[idx];
                f.uplink_start_s = Some(start);
                f.t_ul_s = Some(l.t_ul_s);
                f.t_dl_s = Some(l.t_dl_s);
                f.prop_delay_s = Some(l.prop_delay_s);
                let g = &mut self.gvs[gv];
                g.radio_free_s = start + l.t_ul_s;
                g.offloads.push((seq, sat_id));
                let sat = self.fleet.index_of(sat_id).expect("serving satellite is in the fleet");
                self.push(start + l.t_ul_s + l.prop_delay_s, EventKind::SatArrival { frame: idx, sat });
                self.push(t + self.pcfg.deadline_s, EventKind::Deadline { gv: gv_id });
            }
            Decision::Drop(_) => {
                f.t_hat_s = out.t_hat_leo;
            }
            Decision::Pending => unreachable!("the ladder always decides"),
        }
        if seq + 1 < self.frames_per_gv {
            let next = seq + 1;
            self.push(next as f64 / self.cfg.frame_rate_fps, EventKind::Frame { gv: gv_id, seq: next });
        }
        Ok(())
    }

    fn sat_arrival(&mut self, idx: usize, sat: usize, t: f64) {
        let e = self.sat_queues[sat]
            .enqueue(t)
            .expect("events are processed in time order");
        let f = &mut self.frames[idx];
        let tau = f.prop_delay_s.expect("offloaded frame has a path");
        let t_dl = f.t_dl_s.expect("offloaded frame has a path");
        f.enqueue_s = Some(t);
        f.wait_s = Some(e.wait_s);
        f.service_start_s = Some(e.service_start_s);
        f.service_end_s = Some(e.completion_s);
        let done = e.completion_s + t_dl + tau;
        f.done_s = Some(done);
        f.total_delay_s = Some(done - f.gen_time_s);
        let view = FeedbackView {
            sat_id: self.fleet.ids[sat],
            reported_backlog_s: e.completion_s - t,
            sat_stamp_s: t,
            received_s: t + tau,
            frames_sent_since: 0,
            frame_seq: f.seq,
        };
        let gv = f.gv_id;
        self.push(t + tau, EventKind::Feedback { gv, view });
    }

    fn feedback(&mut self, gv: u32, view: FeedbackView) {
        let g = &mut self.gvs[gv as usize];
        let start = g.offloads.partition_point(|(s, _)| *s <= view.frame_seq);
        let sent_after = g.offloads[start..].iter().filter(|(_, s)| *s == view.sat_id).count() as u32;
        on_feedback(&mut g.policy, view, sent_after);
    }
}

/// Run one scenario end to end.
pub fn run_simulation(cfg: &ScenarioConfig) -> Result<SimReport, EngineError> {
    cfg.validate()?;
    let constellation = load_scenario_constellation(cfg)?;
    let fleet = Fleet::new(&constellation)?;
    run_with_fleet(cfg, &fleet)
}

/// Run one scenario against an already-built fleet.
pub fn run_with_fleet(cfg: &ScenarioConfig, fleet: &Fleet) -> Result<SimReport, EngineError> {
    cfg.validate()?;
    let pcfg = cfg.policy_config();
    let base_jd = start_jd(cfg, fleet)?;
    let mut placement = rng::substream(cfg.seed, rng::GV_PLACEMENT);
    let center = cfg.gv_placement.center;
    let positions = place_gvs(center, cfg.gv_placement.radius_km, cfg.n_gvs, &mut placement);
    let gv_service = (cfg.gv_capacity_tflops > 0.0).then(|| cfg.load_tflop / cfg.gv_capacity_tflops);
    let service_leo_s = service_time(cfg.load_tflop, cfg.leo_capacity_tflops)
        .map_err(|e| ConfigError::Invalid {
            key: "leo_capacity_tflops".into(),
            reason: e.to_string(),
        })?;
    let frames_per_gv = cfg.frames_per_gv();
    let size_ul_bits = cfg.packet_ul_mbit * 1e6;
    let size_dl_bits = cfg.packet_dl_mbit * 1e6;
    let mut frames = Vec::with_capacity(cfg.n_gvs as usize * frames_per_gv as usize);
    for gv in 0..cfg.n_gvs {
        for seq in 0..frames_per_gv {
            frames.push(FrameTask::new(
                gv,
                seq,
                seq as f64 / cfg.frame_rate_fps,
                size_ul_bits,
                size_dl_bits,
                cfg.load_tflop,
            ));
        }
    }
    let mut sim = Sim {
        cfg,
        pcfg,
        fleet,
        base_jd,
        gvs: positions
            .iter()
            .map(|&pos| Gv {
                pos,
                unit: UnitPoint::new(pos),
                queue: gv_service.map(WorkQueue::new),
                policy: GvPolicyState::default(),
                radio_free_s: f64::NEG_INFINITY,
                visible: Vec::new(),
                offloads: Vec::new(),
            })
            .collect(),
        sat_queues: vec![WorkQueue::new(service_leo_s); fleet.len()],
        frames,
        frames_per_gv,
        service_leo_s,
        size_ul_bits,
        size_dl_bits,
        rngs: PolicyRngs {
            selection: rng::substream(cfg.seed, rng::SR_SELECTION),
            light_drop: rng::substream(cfg.seed, rng::LIGHT_DROP),
            backoff: rng::substream(cfg.seed, rng::BACKOFF),
        },
        heap: BinaryHeap::new(),
        order: 0,
    };
    sim.push(0.0, EventKind::Tick);
    if frames_per_gv > 0 {
        for gv in 0..cfg.n_gvs {
            sim.push(0.0, EventKind::Frame { gv, seq: 0 });
        }
    }
    let horizon = cfg.sim_time_s;
    let mut ticks = 0u64;
    while let Some(ev) = sim.heap.pop() {
        if ev.t > horizon {
            break;
        }
        match ev.kind {
            EventKind::Tick => {
                sim.tick(ev.t)?;
                ticks += 1;
                let next = ticks as f64 * cfg.geometry_refresh_s;
                if next < horizon {
                    sim.push(next, EventKind::Tick);
                }
            }
            EventKind::Frame { gv, seq } => sim.frame(gv, seq, ev.t)?,
            EventKind::SatArrival { frame, sat } => sim.sat_arrival(frame, sat, ev.t),
            EventKind::Feedback { gv, view } => sim.feedback(gv, view),
            EventKind::Deadline { gv } => {
                on_tick(&mut sim.gvs[gv as usize].policy, ev.t, &sim.pcfg, &mut sim.rngs.backoff);
            }
        }
    }
    let arrivals: Vec<(u32, u64)> = fleet
        .ids
        .iter()
        .zip(&sim.sat_queues)
        .map(|(id, q)| (*id, q.arrived_count))
        .collect();
    let loads = metrics::load_factors(&arrivals, service_leo_s, horizon);
    let metrics = compute_metrics(&sim.frames, cfg.deadline_s, horizon, &loads);
    Ok(SimReport {
        version: VERSION.to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        start_jd: base_jd,
        satellites: fleet.len(),
        skipped_records: fleet.skipped,
        metrics,
        load_factors: loads,
        frames: sim.frames,
        gv_positions: positions,
    })
}
