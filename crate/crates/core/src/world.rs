//! Physical layer: mobility, radio range gating, per-hop delay and the
//! RSRU receive buffer.

use std::collections::VecDeque;

use rand::Rng;

use crate::domain::{Packet, Position, ScenarioConfig, VehicleState};

/// Axis-aligned region a vehicle bounces within.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Position,
    pub max: Position,
}

impl Bounds {
    pub fn area(width: f64, height: f64) -> Self {
        Self {
            min: Position::new(0.0, 0.0),
            max: Position::new(width, height),
        }
    }

    /// Square inscribed in the coverage disc around `center`, clipped to `outer`.
    pub fn inscribed(center: Position, radius: f64, outer: &Bounds) -> Self {
        let half = radius / std::f64::consts::SQRT_2;
        Self {
            min: Position::new(
                (center.x - half).max(outer.min.x),
                (center.y - half).max(outer.min.y),
            ),
            max: Position::new(
                (center.x + half).min(outer.max.x),
                (center.y + half).min(outer.max.y),
            ),
        }
    }

    pub fn contains(&self, p: &Position) -> bool {
        (self.min.x..=self.max.x).contains(&p.x) && (self.min.y..=self.max.y).contains(&p.y)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Position {
        Position::new(
            sample_closed(rng, self.min.x, self.max.x),
            sample_closed(rng, self.min.y, self.max.y),
        )
    }
}

fn sample_closed<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// The road area and its roadside units.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadModel {
    pub area: Bounds,
    pub rsru_positions: Vec<Position>,
    pub move_tick: f64,
}

impl RoadModel {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            area: Bounds::area(cfg.area_width, cfg.area_height),
            rsru_positions: cfg.effective_rsrus(),
            move_tick: cfg.move_tick,
        }
    }

    /// Index of the unit closest to `p`; ties go to the lower index.
    pub fn nearest_rsru(&self, p: &Position) -> usize {
        let mut best = 0;
        for (i, r) in self.rsru_positions.iter().enumerate().skip(1) {
            if p.distance_sq(r) < p.distance_sq(&self.rsru_positions[best]) {
                best = i;
            }
        }
        best
    }
}

/// Speed envelope and resampling cadence of a mobile vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityParams {
    pub v_min: f64,
    pub v_max: f64,
    /// Seconds between speed resamples; `None` keeps the speed fixed.
    pub resample: Option<f64>,
}

/// Uniform draw from the open interval `(lo, hi)`.
pub fn sample_speed<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    loop {
        let v = rng.gen_range(lo..hi);
        if v > lo {
            return v;
        }
    }
}

pub fn sample_heading<R: Rng>(rng: &mut R) -> (f64, f64) {
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    (theta.cos(), theta.sin())
}

/// Reflects `p` back into `[lo, hi]`; returns the new coordinate and whether the
/// direction flipped.
fn reflect(mut p: f64, lo: f64, hi: f64) -> (f64, bool) {
    if hi <= lo {
        return (lo, false);
    }
    let mut flipped = false;
    loop {
        if p > hi {
            p = 2.0 * hi - p;
        } else if p < lo {
            p = 2.0 * lo - p;
        } else {
            return (p, flipped);
        }
        flipped = !flipped;
    }
}

/// Moves a vehicle for `dt` seconds, bouncing off the edges of `bounds`.
pub fn advance_vehicle<R: Rng>(
    v: &VehicleState,
    bounds: &Bounds,
    dt: f64,
    mobility: &MobilityParams,
    rng: &mut R,
) -> VehicleState {
    debug_assert!(dt > 0.0);
    let mut next = v.clone();
    let (hx, hy) = v.heading;
    let (x, fx) = reflect(v.pos.x + v.speed * hx * dt, bounds.min.x, bounds.max.x);
    let (y, fy) = reflect(v.pos.y + v.speed * hy * dt, bounds.min.y, bounds.max.y);
    next.pos = Position::new(x, y);
    next.heading = (if fx { -hx } else { hx }, if fy { -hy } else { hy });

    if let Some(interval) = mobility.resample {
        next.speed_age += dt;
        if next.speed_age >= interval {
            next.speed_age -= interval;
            next.speed = sample_speed(rng, mobility.v_min, mobility.v_max);
        }
    }
    next
}

/// Inclusive Euclidean range test.
pub fn in_range(a: &Position, b: &Position, range: f64) -> bool {
    a.distance_sq(b) <= range * range
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopDelay {
    pub base: f64,
    pub jitter: f64,
}

impl HopDelay {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            base: cfg.hop_delay_base,
            jitter: cfg.hop_delay_jitter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransmitOutcome {
    /// Arrival time at the RSRU.
    Deliver {
        at: f64,
    },
    RangeDrop,
}

/// Single-hop vehicle-to-RSRU transmission at time `t`.
///
/// Jitter is drawn only for in-range transmissions.
pub fn transmit<R: Rng>(
    from: &Position,
    rsru: &Position,
    tx_range: f64,
    t: f64,
    hop: &HopDelay,
    rng: &mut R,
) -> TransmitOutcome {
    if !in_range(from, rsru, tx_range) {
        return TransmitOutcome::RangeDrop;
    }
    let jitter = if hop.jitter > 0.0 {
        rng.gen_range(0.0..hop.jitter)
    } else {
        0.0
    };
    TransmitOutcome::Deliver {
        at: t + hop.base + jitter,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnqueueOutcome {
    Accepted,
    BufferDrop,
}

/// Bounded FIFO of packets waiting at an RSRU.
#[derive(Debug, Clone)]
pub struct RsruBuffer {
    queue: VecDeque<Packet>,
    capacity: usize,
}

impl RsruBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            queue: VecDeque::with_capacity(capacity.min(4096)),
            capacity,
        }
    }

    pub fn enqueue(&mut self, pkt: Packet) -> EnqueueOutcome {
        if self.queue.len() >= self.capacity {
            return EnqueueOutcome::BufferDrop;
        }
        self.queue.push_back(pkt);
        debug_assert!(self.queue.len() <= self.capacity);
        EnqueueOutcome::Accepted
    }

    pub fn dequeue(&mut self) -> Option<Packet> {
        self.queue.pop_front()
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}
