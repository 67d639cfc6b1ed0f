//! One simulation run: wires mobility, radio, attackers, detectors and
//! metrics onto the event scheduler.
//!
//! Legitimate vehicles beacon at the CBR rate over the whole area and
//! address the nearest RSRU; out-of-range emissions are range drops. A
//! vehicle's first emission inside coverage is its join request. Attacker
//! vehicles patrol the square inscribed in their RSRU's coverage disc so
//! that their traffic always reaches it.
//!
//! Every RSRU runs the same bounded buffer and confirm-time verifier. With
//! the two-phase detector enabled, packets are vetted on arrival and only
//! accepted ones are offered to the verifier.

use std::io::{self, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::attack;
use crate::detectors::{
    baseline_confirm, Confirmation, CredentialRegistry, Offer, RsruState, Verdict, Verifier,
};
use crate::domain::{
    validate_config, AttackMode, DetectorKind, Packet, PacketKind, Position, Role, ScenarioConfig,
    VehicleId, VehicleState, Violation,
};
use crate::engine::{stream_rng, Digest, EngineError, Event, EventKind, Scheduler, Stream};
use crate::metrics::MetricsAccumulator;
use crate::world::{
    advance_vehicle, in_range, sample_heading, sample_speed, transmit, Bounds, HopDelay,
    MobilityParams, RoadModel, TransmitOutcome,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("writing run output: {0}")]
    Io(#[from] io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.rule.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Optional per-run text outputs.
#[derive(Default)]
pub struct Sinks<'a> {
    /// `time<TAB>kind<TAB>payload-digest` per executed event.
    pub trace: Option<&'a mut dyn Write>,
    /// `time<TAB>sender<TAB>verdict<TAB>p<TAB>reported_speed` per vetted packet.
    pub verdicts: Option<&'a mut dyn Write>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: MetricsAccumulator,
    pub events: u64,
    /// Final state of every physical vehicle, legitimate ones first.
    pub vehicles: Vec<VehicleState>,
    /// Ids each RSRU had flagged malicious by the end of the run.
    pub flagged: Vec<Vec<VehicleId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Emitter {
    Vehicle(usize),
    GhostBurst,
}

#[derive(Debug, Clone)]
enum SimEvent {
    Emit(Emitter),
    Deliver { rsru: usize, packet: Packet },
    VerifyDone { rsru: usize },
    MoveTick,
    AssessTick,
    EndOfRun,
}

impl SimEvent {
    fn kind(&self) -> EventKind {
        match self {
            SimEvent::Emit(_) => EventKind::EmitPacket,
            SimEvent::Deliver { .. } => EventKind::Deliver,
            SimEvent::VerifyDone { .. } => EventKind::VerifyDone,
            SimEvent::MoveTick => EventKind::MoveTick,
            SimEvent::AssessTick => EventKind::AssessTick,
            SimEvent::EndOfRun => EventKind::EndOfRun,
        }
    }

    fn digest(&self) -> u64 {
        let d = Digest::default();
        match self {
            SimEvent::Emit(Emitter::Vehicle(i)) => d.u64(0).u64(*i as u64),
            SimEvent::Emit(Emitter::GhostBurst) => d.u64(1),
            SimEvent::Deliver { rsru, packet } => d
                .u64(2)
                .u64(*rsru as u64)
                .u64(packet.seq)
                .u64(u64::from(packet.sender))
                .bytes(packet.kind.as_str().as_bytes())
                .f64(packet.reported_speed)
                .f64(packet.reported_pos.x)
                .f64(packet.reported_pos.y)
                .f64(packet.ts_send)
                .u64(u64::from(packet.size)),
            SimEvent::VerifyDone { rsru } => d.u64(3).u64(*rsru as u64),
            SimEvent::MoveTick => d.u64(4),
            SimEvent::AssessTick => d.u64(5),
            SimEvent::EndOfRun => d.u64(6),
        }
        .finish()
    }
}

struct Site {
    pos: Position,
    verifier: Verifier,
    detector: Option<RsruState>,
}

/// Emission schedule of one periodic source: `base + k * interval`.
#[derive(Debug, Clone, Copy)]
struct Cadence {
    base: f64,
    interval: f64,
    count: u64,
}

impl Cadence {
    fn first(&self) -> f64 {
        self.base
    }

    fn advance(&mut self) -> f64 {
        self.count += 1;
        self.base + self.count as f64 * self.interval
    }
}

struct Simulation<'a> {
    cfg: ScenarioConfig,
    road: RoadModel,
    hop: HopDelay,
    mobility: MobilityParams,
    vehicles: Vec<VehicleState>,
    bounds: Vec<Bounds>,
    cadence: Vec<Cadence>,
    seqs: Vec<u64>,
    legit: u32,
    ghost_ids: Vec<VehicleId>,
    ghost_seqs: Vec<u64>,
    ghost_cadence: Option<Cadence>,
    sites: Vec<Site>,
    registry: CredentialRegistry,
    mobility_rng: ChaCha8Rng,
    channel_rng: ChaCha8Rng,
    attacker_rng: ChaCha8Rng,
    metrics: MetricsAccumulator,
    stopping: bool,
    sinks: Sinks<'a>,
}

/// Runs one scenario without auxiliary outputs.
pub fn simulate(cfg: &ScenarioConfig) -> Result<RunOutput, SimError> {
    simulate_with(cfg, Sinks::default())
}

/// Runs one scenario to completion, drains in-flight packets, and returns
/// the counters.
pub fn simulate_with(cfg: &ScenarioConfig, sinks: Sinks<'_>) -> Result<RunOutput, SimError> {
    let violations = validate_config(cfg);
    if !violations.is_empty() {
        return Err(SimError::Invalid(violations));
    }
    let mut sim = Simulation::new(cfg, sinks);
    let mut sched = Scheduler::new();
    sim.prime(&mut sched)?;
    sched.run_until(cfg.duration, |s, ev| sim.handle(s, ev))?;
    sched.drain(|s, ev| sim.handle(s, ev))?;
    if let Some(w) = sim.sinks.trace.as_mut() {
        w.flush()?;
    }
    if let Some(w) = sim.sinks.verdicts.as_mut() {
        w.flush()?;
    }
    debug_assert!(sim.metrics.is_conserved());
    let flagged = sim
        .sites
        .iter()
        .map(|s| {
            s.detector
                .as_ref()
                .map_or_else(Vec::new, |d| d.malicious_ids().collect())
        })
        .collect();
    Ok(RunOutput {
        metrics: sim.metrics,
        events: sched.executed(),
        vehicles: sim.vehicles,
        flagged,
    })
}

impl<'a> Simulation<'a> {
    fn new(cfg: &ScenarioConfig, sinks: Sinks<'a>) -> Self {
        let road = RoadModel::from_config(cfg);
        let params = &cfg.detection;
        let mobility = MobilityParams {
            v_min: params.v_min,
            v_max: params.v_max,
            resample: Some(cfg.speed_resample),
        };
        let mut mobility_rng = stream_rng(cfg.seed, Stream::Mobility);
        let channel_rng = stream_rng(cfg.seed, Stream::Channel);
        let mut attacker_rng = stream_rng(cfg.seed, Stream::Attacker);

        let mut vehicles = Vec::new();
        let mut bounds = Vec::new();
        let mut cadence = Vec::new();
        let cbr_interval = 1.0 / cfg.cbr_rate;
        for id in 0..cfg.density {
            let pos = road.area.sample(&mut mobility_rng);
            let heading = sample_heading(&mut mobility_rng);
            let speed = sample_speed(&mut mobility_rng, params.v_min, params.v_max);
            let speed_age = mobility_rng.gen_range(0.0..cfg.speed_resample);
            let base = mobility_rng.gen_range(0.0..cbr_interval);
            vehicles.push(VehicleState {
                id,
                pos,
                speed,
                heading,
                role: Role::Legitimate,
                admitted: false,
                speed_age,
            });
            bounds.push(road.area);
            cadence.push(Cadence {
                base,
                interval: cbr_interval,
                count: 0,
            });
        }

        let profile = &cfg.attacker;
        let mut ghost_ids = Vec::new();
        let mut ghost_cadence = None;
        if profile.mode != AttackMode::None {
            let role = match profile.mode {
                AttackMode::Flood => Role::Flooder,
                AttackMode::GhostJoin => Role::Ghost,
                _ => Role::FalseInfo,
            };
            let interval = match profile.mode {
                AttackMode::FalseInfo => cbr_interval,
                _ => 1.0 / profile.rate,
            };
            for k in 0..profile.count {
                let home = road.rsru_positions[k as usize % road.rsru_positions.len()];
                let patrol = Bounds::inscribed(home, cfg.tx_range, &road.area);
                let pos = patrol.sample(&mut attacker_rng);
                let heading = sample_heading(&mut attacker_rng);
                let speed = sample_speed(&mut attacker_rng, params.v_min, params.v_max);
                let base = attack::onset(profile, attacker_rng.gen_range(0.0..interval));
                vehicles.push(VehicleState {
                    id: cfg.density + k,
                    pos,
                    speed,
                    heading,
                    role,
                    admitted: false,
                    speed_age: 0.0,
                });
                bounds.push(patrol);
                cadence.push(Cadence {
                    base,
                    interval,
                    count: 0,
                });
            }
            if profile.mode == AttackMode::GhostJoin && profile.ghost_count > 0 {
                let first = cfg.density + profile.count;
                ghost_ids = (first..first + profile.ghost_count).collect();
                let base = attack::onset(profile, attacker_rng.gen_range(0.0..interval));
                ghost_cadence = Some(Cadence {
                    base,
                    interval,
                    count: 0,
                });
            }
        }

        let sites = road
            .rsru_positions
            .iter()
            .map(|&pos| Site {
                pos,
                verifier: Verifier::new(cfg.buffer_capacity, cfg.verify_delay),
                detector: (cfg.detector == DetectorKind::PSecure)
                    .then(|| RsruState::new(params.clone())),
            })
            .collect();

        let n = vehicles.len();
        Self {
            cfg: cfg.clone(),
            hop: HopDelay::from_config(cfg),
            mobility,
            vehicles,
            bounds,
            cadence,
            seqs: vec![0; n],
            legit: cfg.density,
            ghost_seqs: vec![0; ghost_ids.len()],
            ghost_ids,
            ghost_cadence,
            sites,
            registry: CredentialRegistry::new(0..cfg.density),
            mobility_rng,
            channel_rng,
            attacker_rng,
            metrics: MetricsAccumulator {
                elapsed: cfg.duration,
                ..Default::default()
            },
            stopping: false,
            sinks,
            road,
        }
    }

    fn is_legit(&self, id: VehicleId) -> bool {
        id < self.legit
    }

    fn prime(&mut self, s: &mut Scheduler<SimEvent>) -> Result<(), EngineError> {
        let end = self.cfg.duration;
        s.schedule(end, SimEvent::EndOfRun)?;
        if self.cfg.move_tick < end {
            s.schedule(self.cfg.move_tick, SimEvent::MoveTick)?;
        }
        let slot = self.cfg.detection.slot_duration;
        if self.cfg.detector == DetectorKind::PSecure && slot < end {
            s.schedule(slot, SimEvent::AssessTick)?;
        }
        let ghost_hosts = matches!(self.cfg.attacker.mode, AttackMode::GhostJoin);
        for (i, c) in self.cadence.iter().enumerate() {
            let hosts_only = ghost_hosts && i >= self.legit as usize;
            if !hosts_only && c.first() < end {
                s.schedule(c.first(), SimEvent::Emit(Emitter::Vehicle(i)))?;
            }
        }
        if let Some(c) = self.ghost_cadence.filter(|c| c.first() < end) {
            s.schedule(c.first(), SimEvent::Emit(Emitter::GhostBurst))?;
        }
        Ok(())
    }

    fn handle(&mut self, s: &mut Scheduler<SimEvent>, ev: Event<SimEvent>) -> Result<(), SimError> {
        let t = ev.time;
        if let Some(w) = self.sinks.trace.as_mut() {
            writeln!(
                w,
                "{t}\t{}\t{:016x}",
                ev.payload.kind().as_str(),
                ev.payload.digest()
            )?;
        }
        match ev.payload {
            SimEvent::Emit(Emitter::Vehicle(i)) => self.emit_vehicle(s, i, t)?,
            SimEvent::Emit(Emitter::GhostBurst) => self.emit_ghosts(s, t)?,
            SimEvent::Deliver { rsru, packet } => self.deliver(s, rsru, packet, t)?,
            SimEvent::VerifyDone { rsru } => self.verify_done(s, rsru, t)?,
            SimEvent::MoveTick => {
                self.move_all();
                self.reschedule(s, t + self.cfg.move_tick, SimEvent::MoveTick)?;
            }
            SimEvent::AssessTick => {
                for site in &mut self.sites {
                    if let Some(det) = site.detector.as_mut() {
                        det.phase2_assess(t);
                    }
                }
                self.reschedule(
                    s,
                    t + self.cfg.detection.slot_duration,
                    SimEvent::AssessTick,
                )?;
            }
            SimEvent::EndOfRun => self.stopping = true,
        }
        Ok(())
    }

    /// Schedules periodic work strictly before the end of the run.
    fn reschedule(
        &self,
        s: &mut Scheduler<SimEvent>,
        at: f64,
        ev: SimEvent,
    ) -> Result<(), EngineError> {
        if !self.stopping && at < self.cfg.duration {
            s.schedule(at, ev)?;
        }
        Ok(())
    }

    fn move_all(&mut self) {
        let dt = self.cfg.move_tick;
        let legit = self.legit as usize;
        for (i, v) in self.vehicles.iter_mut().enumerate() {
            let rng = if i < legit {
                &mut self.mobility_rng
            } else {
                &mut self.attacker_rng
            };
            *v = advance_vehicle(v, &self.bounds[i], dt, &self.mobility, rng);
        }
    }

    fn emit_vehicle(
        &mut self,
        s: &mut Scheduler<SimEvent>,
        i: usize,
        t: f64,
    ) -> Result<(), SimError> {
        let v = &self.vehicles[i];
        let rsru = self.road.nearest_rsru(&v.pos);
        let site_pos = self.sites[rsru].pos;
        let seq = self.seqs[i];
        self.seqs[i] += 1;
        let size = self.cfg.packet_size;
        let params = &self.cfg.detection;
        let profile = &self.cfg.attacker;

        let packet = match v.role {
            Role::Legitimate => {
                let joining = !v.admitted && in_range(&v.pos, &site_pos, self.cfg.tx_range);
                let kind = if joining {
                    PacketKind::JoinRequest
                } else {
                    PacketKind::Beacon
                };
                Packet {
                    seq,
                    sender: v.id,
                    kind,
                    reported_speed: v.speed,
                    reported_pos: v.pos,
                    ts_send: t,
                    size,
                }
            }
            Role::Flooder => attack::flood_emit(v, profile, params, t, seq, size).0,
            Role::FalseInfo => attack::false_info_emit(v, profile, params, t, seq, size),
            Role::Ghost => unreachable!("ghost hosts emit through bursts"),
        };
        let from = v.pos;
        let legit = v.role == Role::Legitimate;
        if legit && packet.kind == PacketKind::JoinRequest {
            self.vehicles[i].admitted = true;
        }

        if legit {
            self.metrics.sent += 1;
        } else {
            self.metrics.attack_sent += 1;
        }
        let rng = if legit {
            &mut self.channel_rng
        } else {
            &mut self.attacker_rng
        };
        match transmit(&from, &site_pos, self.cfg.tx_range, t, &self.hop, rng) {
            TransmitOutcome::Deliver { at } => {
                s.schedule(at, SimEvent::Deliver { rsru, packet })?;
            }
            TransmitOutcome::RangeDrop if legit => self.metrics.range_drops += 1,
            TransmitOutcome::RangeDrop => {}
        }

        let next = self.cadence[i].advance();
        self.reschedule(s, next, SimEvent::Emit(Emitter::Vehicle(i)))?;
        Ok(())
    }

    fn emit_ghosts(&mut self, s: &mut Scheduler<SimEvent>, t: f64) -> Result<(), SimError> {
        let hosts = self.cfg.attacker.count as usize;
        let first_host = self.legit as usize;
        let claim_at = self.sites[0].pos;
        let burst = attack::ghost_join(
            &self.cfg.attacker,
            &self.cfg.detection,
            &self.ghost_ids,
            &mut self.ghost_seqs,
            claim_at,
            self.cfg.tx_range,
            &mut self.attacker_rng,
            t,
            self.cfg.packet_size,
        );
        for (j, packet) in burst.into_iter().enumerate() {
            let host = &self.vehicles[first_host + j % hosts];
            let rsru = self.road.nearest_rsru(&host.pos);
            self.metrics.attack_sent += 1;
            let out = transmit(
                &host.pos,
                &self.sites[rsru].pos,
                self.cfg.tx_range,
                t,
                &self.hop,
                &mut self.attacker_rng,
            );
            if let TransmitOutcome::Deliver { at } = out {
                s.schedule(at, SimEvent::Deliver { rsru, packet })?;
            }
        }
        if let Some(c) = self.ghost_cadence.as_mut() {
            let next = c.advance();
            self.reschedule(s, next, SimEvent::Emit(Emitter::GhostBurst))?;
        }
        Ok(())
    }

    fn deliver(
        &mut self,
        s: &mut Scheduler<SimEvent>,
        rsru: usize,
        packet: Packet,
        t: f64,
    ) -> Result<(), SimError> {
        let legit = self.is_legit(packet.sender);
        let site = &mut self.sites[rsru];
        if let Some(det) = site.detector.as_mut() {
            let verdict = det.vet(&packet, t);
            if let Some(w) = self.sinks.verdicts.as_mut() {
                let p = det.observed_rate(packet.sender, t);
                writeln!(
                    w,
                    "{t}\t{}\t{}\t{p}\t{}",
                    packet.sender,
                    verdict.as_str(),
                    packet.reported_speed
                )?;
            }
            if legit {
                self.metrics.legit_vetted += 1;
                if verdict != Verdict::Accept {
                    self.metrics.false_positives += 1;
                }
            }
            if verdict != Verdict::Accept {
                if legit {
                    self.metrics.verdict_drops += 1;
                } else {
                    self.metrics.attack_blocked += 1;
                }
                return Ok(());
            }
        }
        match site.verifier.offer(packet, t) {
            Offer::Started { done_at } => {
                s.schedule(done_at, SimEvent::VerifyDone { rsru })?;
            }
            Offer::Queued => {}
            Offer::BufferDrop if legit => self.metrics.buffer_drops += 1,
            Offer::BufferDrop => {}
        }
        Ok(())
    }

    fn verify_done(
        &mut self,
        s: &mut Scheduler<SimEvent>,
        rsru: usize,
        t: f64,
    ) -> Result<(), SimError> {
        let site = &mut self.sites[rsru];
        let done = site.verifier.finish(t);
        if let Some(next) = done.next_done_at {
            s.schedule(next, SimEvent::VerifyDone { rsru })?;
        }
        let packet = done.packet;
        let flagged = site
            .detector
            .as_ref()
            .is_some_and(|d| d.is_malicious(packet.sender));
        let authentic = baseline_confirm(&packet, &self.registry) == Confirmation::Authentic;
        if self.is_legit(packet.sender) {
            if authentic && !flagged {
                self.metrics.record_delivery(t - packet.ts_send);
            } else {
                self.metrics.verdict_drops += 1;
            }
        } else if !authentic {
            self.metrics.attack_confirmed_forged += 1;
        }
        Ok(())
    }
}
