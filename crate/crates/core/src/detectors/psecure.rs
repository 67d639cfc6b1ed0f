//! Two-phase roadside detector.
//!
//! Phase 1 vets every delivered packet on arrival: stale timestamps are
//! discarded, then the sender's windowed packet rate and its speed are
//! matched against the high-rate and low-speed attack signatures.
//! Phase 2 is admission control: join requests allocate a slot and bump a
//! per-vehicle counter, a second request inside one slot is malicious, and
//! a periodic assessment validates pending vehicles and flags any vehicle
//! whose request count dwarfs its peers.
//!
//! Both phases run before confirmation, so packets from detected senders
//! never occupy the RSRU buffer or verifier.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::domain::{DetectionParams, Packet, PacketKind, Position, SpeedSource, VehicleId};

/// Expected packets per second for a vehicle moving at `v`: `alpha * |v - v_max| / 2`.
pub fn expected_packet_rate(v: f64, params: &DetectionParams) -> f64 {
    params.alpha * (v - params.v_max).abs() / 2.0
}

/// Arrival timestamps of one sender inside the trailing rate window.
#[derive(Debug, Clone)]
pub struct RateHistory {
    window: f64,
    arrivals: VecDeque<f64>,
}

impl RateHistory {
    pub fn new(window: f64) -> Self {
        Self {
            window,
            arrivals: VecDeque::new(),
        }
    }

    fn evict(&mut self, now: f64) {
        while self
            .arrivals
            .front()
            .is_some_and(|&t| t <= now - self.window)
        {
            self.arrivals.pop_front();
        }
    }

    pub fn record(&mut self, t: f64) {
        self.evict(t);
        self.arrivals.push_back(t);
    }

    /// Packets per second over `(now - window, now]`.
    pub fn rate(&mut self, now: f64) -> f64 {
        self.evict(now);
        self.arrivals.len() as f64 / self.window
    }

    pub fn retained(&self) -> usize {
        self.arrivals.len()
    }
}

/// Outcome of vetting one delivered packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Accept,
    DiscardStale,
    AttackHighRate,
    AttackLowSpeed,
    /// Sender is known malicious, or admission control refused the request.
    RejectUnverified,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Accept => "Accept",
            Verdict::DiscardStale => "DiscardStale",
            Verdict::AttackHighRate => "AttackHighRate",
            Verdict::AttackLowSpeed => "AttackLowSpeed",
            Verdict::RejectUnverified => "RejectUnverified",
        }
    }

    pub fn is_attack(&self) -> bool {
        matches!(self, Verdict::AttackHighRate | Verdict::AttackLowSpeed)
    }
}

/// The phase-1 decision on already-measured quantities. Rules apply in order:
/// staleness, high rate with excess speed, low speed, optional rate consistency.
pub fn phase1_rule(ts_delta: f64, rate: f64, speed: f64, params: &DetectionParams) -> Verdict {
    if ts_delta > params.ts_threshold {
        return Verdict::DiscardStale;
    }
    if rate >= params.m_max && speed >= params.v_max {
        return Verdict::AttackHighRate;
    }
    if rate <= params.m_max && speed <= params.v_min {
        return Verdict::AttackLowSpeed;
    }
    if params.rate_consistency && rate > expected_packet_rate(speed, params) + params.rate_slack {
        return Verdict::AttackHighRate;
    }
    Verdict::Accept
}

/// Vets `pkt` arriving at `t_recv` using its reported speed. Fresh packets are
/// recorded in `hist` before the rate is read.
pub fn phase1_check(
    pkt: &Packet,
    hist: &mut RateHistory,
    params: &DetectionParams,
    t_recv: f64,
) -> Verdict {
    phase1_check_with_speed(pkt, pkt.reported_speed, hist, params, t_recv)
}

fn phase1_check_with_speed(
    pkt: &Packet,
    speed: f64,
    hist: &mut RateHistory,
    params: &DetectionParams,
    t_recv: f64,
) -> Verdict {
    let ts_delta = t_recv - pkt.ts_send;
    if ts_delta > params.ts_threshold {
        return Verdict::DiscardStale;
    }
    hist.record(t_recv);
    let rate = hist.rate(t_recv);
    phase1_rule(ts_delta, rate, speed, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pending,
    Valid,
    Malicious,
}

/// Admission record the RSRU keeps per vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRecord {
    pub vehicle_id: VehicleId,
    pub admitted_at: f64,
    pub slot_id: u32,
    pub request_count: u64,
    pub step_count: u64,
    pub last_request_slot: i64,
    last_step_slot: Option<i64>,
    status: Status,
}

impl VerificationRecord {
    pub fn new(vehicle_id: VehicleId, admitted_at: f64, slot_id: u32, slot: i64) -> Self {
        Self {
            vehicle_id,
            admitted_at,
            slot_id,
            request_count: 1,
            step_count: 0,
            last_request_slot: slot,
            last_step_slot: None,
            status: Status::Pending,
        }
    }

    pub fn status(&self) -> Status {
        self.status
    }

    /// Pending becomes Valid; other states are left alone.
    pub fn mark_valid(&mut self) {
        if self.status == Status::Pending {
            self.status = Status::Valid;
        }
    }

    /// Malicious is terminal.
    pub fn mark_malicious(&mut self) {
        self.status = Status::Malicious;
    }

    /// Counts at most one heartbeat per slot.
    pub fn record_step(&mut self, slot: i64) {
        if self.last_step_slot != Some(slot) {
            self.last_step_slot = Some(slot);
            self.step_count += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdmitOutcome {
    Admitted(u32),
    RejectUnverified,
    FlaggedMalicious,
}

/// Last reference point used to estimate a sender's speed from its reports.
#[derive(Debug, Clone, Copy)]
struct SpeedTrack {
    pos: Position,
    at: f64,
    estimate: Option<f64>,
}

/// Working memory of one RSRU running the two-phase detector.
#[derive(Debug, Clone)]
pub struct RsruState {
    params: DetectionParams,
    histories: HashMap<VehicleId, RateHistory>,
    records: BTreeMap<VehicleId, VerificationRecord>,
    malicious: BTreeSet<VehicleId>,
    tracks: HashMap<VehicleId, SpeedTrack>,
    next_slot: u32,
}

impl RsruState {
    pub fn new(params: DetectionParams) -> Self {
        Self {
            params,
            histories: HashMap::new(),
            records: BTreeMap::new(),
            malicious: BTreeSet::new(),
            tracks: HashMap::new(),
            next_slot: 0,
        }
    }

    pub fn params(&self) -> &DetectionParams {
        &self.params
    }

    pub fn record(&self, id: VehicleId) -> Option<&VerificationRecord> {
        self.records.get(&id)
    }

    pub fn records(&self) -> impl Iterator<Item = &VerificationRecord> {
        self.records.values()
    }

    pub fn is_malicious(&self, id: VehicleId) -> bool {
        self.malicious.contains(&id)
    }

    pub fn malicious_ids(&self) -> impl Iterator<Item = VehicleId> + '_ {
        self.malicious.iter().copied()
    }

    /// Current observed rate of `id`, packets per second.
    pub fn observed_rate(&mut self, id: VehicleId, now: f64) -> f64 {
        self.histories.get_mut(&id).map_or(0.0, |h| h.rate(now))
    }

    fn slot_index(&self, t: f64) -> i64 {
        (t / self.params.slot_duration).floor() as i64
    }

    fn flag(&mut self, id: VehicleId) {
        self.malicious.insert(id);
        if let Some(rec) = self.records.get_mut(&id) {
            rec.mark_malicious();
        }
    }

    /// Full pipeline for one delivered packet: known-malicious check, phase 1,
    /// then admission for join requests or heartbeat accounting for data.
    pub fn vet(&mut self, pkt: &Packet, t_recv: f64) -> Verdict {
        if self.is_malicious(pkt.sender) {
            return Verdict::RejectUnverified;
        }
        let speed = match self.params.speed_source {
            SpeedSource::Reported => pkt.reported_speed,
            SpeedSource::Derived => self.derived_speed(pkt),
        };
        let hist = self
            .histories
            .entry(pkt.sender)
            .or_insert_with(|| RateHistory::new(self.params.rate_window));
        let verdict = phase1_check_with_speed(pkt, speed, hist, &self.params, t_recv);
        if verdict.is_attack() {
            self.flag(pkt.sender);
        }
        if verdict != Verdict::Accept {
            return verdict;
        }

        match pkt.kind {
            PacketKind::JoinRequest => match self.phase2_admit(pkt, t_recv) {
                AdmitOutcome::Admitted(_) => Verdict::Accept,
                AdmitOutcome::RejectUnverified | AdmitOutcome::FlaggedMalicious => {
                    Verdict::RejectUnverified
                }
            },
            PacketKind::Beacon | PacketKind::AlertMsg => {
                let slot = self.slot_index(t_recv);
                if let Some(rec) = self.records.get_mut(&pkt.sender) {
                    rec.record_step(slot);
                }
                Verdict::Accept
            }
        }
    }

    /// Speed estimated from successive reported positions, measured over at
    /// least one rate window. Falls back to the reported speed until an
    /// estimate exists.
    fn derived_speed(&mut self, pkt: &Packet) -> f64 {
        let span = self.params.rate_window;
        let track = self.tracks.entry(pkt.sender).or_insert(SpeedTrack {
            pos: pkt.reported_pos,
            at: pkt.ts_send,
            estimate: None,
        });
        let dt = pkt.ts_send - track.at;
        if dt >= span {
            track.estimate = Some(track.pos.distance(&pkt.reported_pos) / dt);
            track.pos = pkt.reported_pos;
            track.at = pkt.ts_send;
        }
        track.estimate.unwrap_or(pkt.reported_speed)
    }

    /// Admission control for a join request that passed phase 1.
    pub fn phase2_admit(&mut self, req: &Packet, t: f64) -> AdmitOutcome {
        if self.is_malicious(req.sender) {
            return AdmitOutcome::RejectUnverified;
        }
        let slot = self.slot_index(t);
        match self.records.get_mut(&req.sender) {
            None => {
                let slot_id = self.next_slot;
                self.next_slot += 1;
                self.records.insert(
                    req.sender,
                    VerificationRecord::new(req.sender, t, slot_id, slot),
                );
                AdmitOutcome::Admitted(slot_id)
            }
            Some(rec) => {
                rec.request_count += 1;
                if rec.last_request_slot == slot {
                    self.flag(req.sender);
                    return AdmitOutcome::FlaggedMalicious;
                }
                rec.last_request_slot = slot;
                AdmitOutcome::Admitted(rec.slot_id)
            }
        }
    }

    /// Periodic assessment. Returns the vehicles newly flagged malicious, in id order.
    pub fn phase2_assess(&mut self, t: f64) -> Vec<VehicleId> {
        let slot_duration = self.params.slot_duration;
        let tolerance = self.params.step_tolerance;
        for rec in self.records.values_mut() {
            if rec.status == Status::Pending {
                let expected = ((t - rec.admitted_at) / slot_duration).floor().max(0.0) as u64;
                if rec.step_count.abs_diff(expected) <= tolerance {
                    rec.mark_valid();
                }
            }
        }

        // Busiest and runner-up request counts, to get "max over every other" per record.
        let mut top: Option<(VehicleId, u64)> = None;
        let mut second = 0u64;
        for rec in self.records.values() {
            match top {
                Some((_, best)) if rec.request_count <= best => {
                    second = second.max(rec.request_count)
                }
                _ => {
                    if let Some((_, best)) = top {
                        second = second.max(best);
                    }
                    top = Some((rec.vehicle_id, rec.request_count));
                }
            }
        }

        let mut flagged = Vec::new();
        for rec in self.records.values() {
            if rec.status == Status::Malicious {
                continue;
            }
            let peer_max = match top {
                Some((id, best)) if id != rec.vehicle_id => best,
                _ => second,
            };
            let threshold = self.params.flood_factor * peer_max.max(1) as f64;
            if rec.request_count as f64 > threshold {
                flagged.push(rec.vehicle_id);
            }
        }
        for id in &flagged {
            self.flag(*id);
        }
        flagged
    }
}
