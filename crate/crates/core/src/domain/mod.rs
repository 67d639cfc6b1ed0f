//! Core value types and scenario configuration shared by every subsystem.
//!
//! All types here are plain immutable data. A [`ScenarioConfig`] fully
//! determines a run together with its seed.

mod text;

use std::fmt;
use std::str::FromStr;

pub use text::{ConfigError, SetError};

/// Identifier of a vehicle, or of a forged identity.
pub type VehicleId = u32;

/// A point in the simulated area, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_sq(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(&self, other: &Position) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

/// Which detector runs at the roadside units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorKind {
    /// Two-phase detection ahead of confirmation.
    PSecure,
    /// Confirm-time detection only.
    Baseline,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 2] = [DetectorKind::PSecure, DetectorKind::Baseline];

    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorKind::PSecure => "psecure",
            DetectorKind::Baseline => "baseline",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "psecure" | "p-secure" => Ok(DetectorKind::PSecure),
            "baseline" | "obumodelvanet" => Ok(DetectorKind::Baseline),
            other => Err(format!("unknown detector `{other}`")),
        }
    }
}

/// Where the RSRU takes a sender's speed from during phase-1 vetting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeedSource {
    /// The speed the packet claims.
    Reported,
    /// Speed estimated from the sender's successive reported positions.
    Derived,
}

impl SpeedSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpeedSource::Reported => "reported",
            SpeedSource::Derived => "derived",
        }
    }
}

impl FromStr for SpeedSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "reported" => Ok(SpeedSource::Reported),
            "derived" => Ok(SpeedSource::Derived),
            other => Err(format!("unknown speed source `{other}`")),
        }
    }
}

/// Tunables of the roadside detector.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionParams {
    /// Maximum packet capacity per window (M).
    pub m_max: f64,
    /// Road coefficient used by the expected-rate model.
    pub alpha: f64,
    /// Maximum vehicle speed, m/s.
    pub v_max: f64,
    /// Minimum vehicle speed, m/s.
    pub v_min: f64,
    /// Largest tolerated receive-minus-send timestamp gap, seconds.
    pub ts_threshold: f64,
    /// Window over which a sender's packet rate is measured, seconds.
    pub rate_window: f64,
    /// Admission slot length, seconds. Also the assessment period.
    pub slot_duration: f64,
    /// A vehicle is flagged when its request count exceeds this multiple of its busiest peer.
    pub flood_factor: f64,
    /// Allowed heartbeat miscount before a pending vehicle stays pending.
    pub step_tolerance: u64,
    /// Enables the observed-vs-expected rate consistency rule (off by default).
    pub rate_consistency: bool,
    /// Slack for the consistency rule, packets/second.
    pub rate_slack: f64,
    pub speed_source: SpeedSource,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            m_max: 20.0,
            alpha: 1.0,
            v_max: 30.0,
            v_min: 5.0,
            ts_threshold: 0.1,
            rate_window: 1.0,
            slot_duration: 0.1,
            flood_factor: 2.0,
            step_tolerance: 1,
            rate_consistency: false,
            rate_slack: 10.0,
            speed_source: SpeedSource::Reported,
        }
    }
}

/// Adversary behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackMode {
    None,
    /// High-rate beacon flooding.
    Flood,
    /// Join requests from forged identities.
    GhostJoin,
    /// Honest-rate alerts carrying a forged stopped-vehicle speed.
    FalseInfo,
}

impl AttackMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttackMode::None => "none",
            AttackMode::Flood => "flood",
            AttackMode::GhostJoin => "ghost",
            AttackMode::FalseInfo => "falseinfo",
        }
    }
}

impl fmt::Display for AttackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(AttackMode::None),
            "flood" => Ok(AttackMode::Flood),
            "ghost" | "ghostjoin" => Ok(AttackMode::GhostJoin),
            "falseinfo" | "false_info" => Ok(AttackMode::FalseInfo),
            other => Err(format!("unknown attack mode `{other}`")),
        }
    }
}

/// Speed an attacker writes into its packets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForgedSpeed {
    /// Mode default: `v_max + 5` for floods, `0` for false alerts, mid-envelope for ghosts.
    Auto,
    /// The attacker's true physical speed.
    Honest,
    Fixed(f64),
}

impl fmt::Display for ForgedSpeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForgedSpeed::Auto => f.write_str("auto"),
            ForgedSpeed::Honest => f.write_str("honest"),
            ForgedSpeed::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for ForgedSpeed {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "auto" => Ok(ForgedSpeed::Auto),
            "honest" => Ok(ForgedSpeed::Honest),
            other => other
                .parse::<f64>()
                .map(ForgedSpeed::Fixed)
                .map_err(|_| format!("invalid forged speed `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackerProfile {
    pub mode: AttackMode,
    /// Number of physical attacker vehicles.
    pub count: u32,
    /// Per-attacker emission rate for floods, per-ghost request rate for ghost joins.
    pub rate: f64,
    pub ghost_count: u32,
    pub start_time: f64,
    pub forged_speed: ForgedSpeed,
}

impl Default for AttackerProfile {
    fn default() -> Self {
        Self {
            mode: AttackMode::None,
            count: 10,
            rate: 100.0,
            ghost_count: 10,
            start_time: 0.0,
            forged_speed: ForgedSpeed::Auto,
        }
    }
}

/// Every tunable of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Free-form label copied into output rows.
    pub name: String,
    pub area_width: f64,
    pub area_height: f64,
    pub tx_range: f64,
    /// Number of legitimate vehicles.
    pub density: u32,
    pub duration: f64,
    pub seed: u64,
    pub detector: DetectorKind,
    /// Legitimate beacon rate, packets/second per vehicle.
    pub cbr_rate: f64,
    pub buffer_capacity: usize,
    pub hop_delay_base: f64,
    pub hop_delay_jitter: f64,
    /// Per-packet confirmation time at the RSRU, seconds.
    pub verify_delay: f64,
    pub packet_size: u32,
    /// Mobility update period, seconds.
    pub move_tick: f64,
    /// Interval between legitimate speed resamples, seconds.
    pub speed_resample: f64,
    /// Roadside units. Empty means a single unit at the area center.
    pub rsru_positions: Vec<Position>,
    pub attacker: AttackerProfile,
    pub detection: DetectionParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "default".to_string(),
            area_width: 1000.0,
            area_height: 1000.0,
            tx_range: 250.0,
            density: 100,
            duration: 200.0,
            seed: 1,
            detector: DetectorKind::PSecure,
            cbr_rate: 4.0,
            buffer_capacity: 150,
            hop_delay_base: 0.002,
            hop_delay_jitter: 0.001,
            verify_delay: 0.002,
            packet_size: 512,
            move_tick: 0.5,
            speed_resample: 10.0,
            rsru_positions: Vec::new(),
            attacker: AttackerProfile::default(),
            detection: DetectionParams::default(),
        }
    }
}

impl ScenarioConfig {
    /// The roadside unit positions actually used by a run.
    pub fn effective_rsrus(&self) -> Vec<Position> {
        if self.rsru_positions.is_empty() {
            vec![Position::new(self.area_width / 2.0, self.area_height / 2.0)]
        } else {
            self.rsru_positions.clone()
        }
    }
}

/// Role of a simulated vehicle. The RSRU never sees this directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Legitimate,
    Flooder,
    /// Physical host of forged identities.
    Ghost,
    FalseInfo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: VehicleId,
    pub pos: Position,
    /// Physical speed, m/s.
    pub speed: f64,
    /// Unit heading vector.
    pub heading: (f64, f64),
    pub role: Role,
    /// Whether the vehicle has already submitted its join request.
    pub admitted: bool,
    /// Seconds since the last speed resample.
    pub speed_age: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketKind {
    Beacon,
    JoinRequest,
    AlertMsg,
}

impl PacketKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PacketKind::Beacon => "beacon",
            PacketKind::JoinRequest => "join",
            PacketKind::AlertMsg => "alert",
        }
    }
}

/// One application message in flight.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub seq: u64,
    pub sender: VehicleId,
    pub kind: PacketKind,
    pub reported_speed: f64,
    pub reported_pos: Position,
    /// Stamped by the channel at emission.
    pub ts_send: f64,
    pub size: u32,
}

/// One violated configuration bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rule)
    }
}

/// Returns every bound the configuration violates; an empty list means valid.
pub fn validate_config(cfg: &ScenarioConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut check = |ok: bool, field: &'static str, rule: &str| {
        if !ok {
            out.push(Violation {
                field,
                rule: rule.to_string(),
            });
        }
    };

    check(
        !cfg.name.contains([',', '"', '#', '\n', '\r']),
        "name",
        "name contains no comma, quote, hash or newline",
    );
    check(
        cfg.area_width > 0.0 && cfg.area_width.is_finite(),
        "area_width",
        "area_width > 0",
    );
    check(
        cfg.area_height > 0.0 && cfg.area_height.is_finite(),
        "area_height",
        "area_height > 0",
    );
    check(cfg.tx_range > 0.0, "tx_range", "tx_range > 0");
    check(cfg.density >= 1, "density", "density ≥ 1");
    check(
        cfg.duration > 0.0 && cfg.duration.is_finite(),
        "duration",
        "duration > 0",
    );
    check(
        cfg.cbr_rate > 0.0 && cfg.cbr_rate.is_finite(),
        "cbr_rate",
        "cbr_rate > 0",
    );
    check(
        cfg.buffer_capacity >= 1,
        "buffer_capacity",
        "buffer_capacity ≥ 1",
    );
    check(
        cfg.hop_delay_base >= 0.0,
        "hop_delay_base",
        "hop_delay_base ≥ 0",
    );
    check(
        cfg.hop_delay_jitter >= 0.0,
        "hop_delay_jitter",
        "hop_delay_jitter ≥ 0",
    );
    check(cfg.verify_delay >= 0.0, "verify_delay", "verify_delay ≥ 0");
    check(
        cfg.move_tick > 0.0 && cfg.move_tick.is_finite(),
        "move_tick",
        "move_tick > 0",
    );
    check(
        cfg.speed_resample > 0.0,
        "speed_resample",
        "speed_resample > 0",
    );
    for p in &cfg.rsru_positions {
        let inside =
            (0.0..=cfg.area_width).contains(&p.x) && (0.0..=cfg.area_height).contains(&p.y);
        check(inside, "rsru_positions", "rsru position inside area");
    }

    let d = &cfg.detection;
    check(d.m_max >= 1.0, "detection.m_max", "m_max ≥ 1");
    check(d.alpha >= 0.0, "detection.alpha", "alpha ≥ 0");
    check(d.v_min >= 0.0, "detection.v_min", "v_min ≥ 0");
    check(d.v_min < d.v_max, "detection.v_max", "v_min < v_max");
    check(
        d.ts_threshold > 0.0,
        "detection.ts_threshold",
        "ts_threshold > 0",
    );
    check(
        d.rate_window > 0.0,
        "detection.rate_window",
        "rate_window > 0",
    );
    check(
        d.slot_duration > 0.0 && d.slot_duration.is_finite(),
        "detection.slot_duration",
        "slot_duration > 0",
    );
    check(
        d.flood_factor >= 1.0,
        "detection.flood_factor",
        "flood_factor ≥ 1",
    );
    check(
        d.rate_slack >= 0.0,
        "detection.rate_slack",
        "rate_slack ≥ 0",
    );

    let a = &cfg.attacker;
    if a.mode != AttackMode::None {
        check(a.count >= 1, "attacker.count", "attacker.count ≥ 1");
        check(
            a.start_time >= 0.0,
            "attacker.start_time",
            "attacker.start_time ≥ 0",
        );
        if let ForgedSpeed::Fixed(v) = a.forged_speed {
            check(
                v >= 0.0,
                "attacker.forged_speed",
                "attacker.forged_speed ≥ 0",
            );
        }
        match a.mode {
            AttackMode::Flood => check(
                a.rate > cfg.cbr_rate,
                "attacker.rate",
                "attacker.rate > cbr_rate",
            ),
            AttackMode::GhostJoin => check(
                a.rate > 0.0 && a.rate.is_finite(),
                "attacker.rate",
                "attacker.rate > 0",
            ),
            _ => {}
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rules(cfg: &ScenarioConfig) -> Vec<String> {
        validate_config(cfg).into_iter().map(|v| v.rule).collect()
    }

    #[test]
    fn default_config_is_valid() {
        let cfg = ScenarioConfig::default();
        assert!(validate_config(&cfg).is_empty());
        assert_eq!(cfg.area_width, 1000.0);
        assert_eq!(cfg.area_height, 1000.0);
        assert_eq!(cfg.tx_range, 250.0);
        assert_eq!(cfg.buffer_capacity, 150);
        assert_eq!(cfg.detection.m_max, 20.0);
    }

    #[test]
    fn table_durations_and_densities_are_valid() {
        for duration in [200.0, 400.0, 600.0, 800.0, 1000.0, 1200.0] {
            for density in [20, 40, 60, 80, 100, 120, 140, 150] {
                let cfg = ScenarioConfig {
                    duration,
                    density,
                    ..Default::default()
                };
                assert!(validate_config(&cfg).is_empty());
            }
        }
    }

    #[test]
    fn zero_density_is_reported() {
        let cfg = ScenarioConfig {
            density: 0,
            ..Default::default()
        };
        assert_eq!(rules(&cfg), vec!["density ≥ 1"]);
    }

    #[test]
    fn degenerate_speed_envelope_is_reported() {
        let mut cfg = ScenarioConfig::default();
        cfg.detection.v_min = 30.0;
        cfg.detection.v_max = 30.0;
        assert_eq!(rules(&cfg), vec!["v_min < v_max"]);
    }

    #[test]
    fn flood_must_exceed_cbr() {
        let mut cfg = ScenarioConfig::default();
        cfg.attacker.mode = AttackMode::Flood;
        cfg.attacker.rate = 4.0;
        assert_eq!(rules(&cfg), vec!["attacker.rate > cbr_rate"]);
        cfg.attacker.mode = AttackMode::None;
        assert!(rules(&cfg).is_empty());
    }

    #[test]
    fn nan_fields_are_rejected() {
        let mut cfg = ScenarioConfig {
            tx_range: f64::NAN,
            ..Default::default()
        };
        cfg.detection.ts_threshold = f64::NAN;
        assert_eq!(rules(&cfg), vec!["tx_range > 0", "ts_threshold > 0"]);
    }

    #[test]
    fn rsru_outside_area_is_reported() {
        let cfg = ScenarioConfig {
            rsru_positions: vec![Position::new(500.0, 500.0), Position::new(1200.0, 3.0)],
            ..Default::default()
        };
        assert_eq!(rules(&cfg), vec!["rsru position inside area"]);
        assert_eq!(cfg.effective_rsrus().len(), 2);
        assert_eq!(
            ScenarioConfig::default().effective_rsrus(),
            vec![Position::new(500.0, 500.0)]
        );
    }

    #[test]
    fn enum_spellings_parse() {
        assert!("both".parse::<DetectorKind>().is_err());
        assert_eq!("PSecure".parse::<DetectorKind>(), Ok(DetectorKind::PSecure));
        assert_eq!("ghost".parse::<AttackMode>(), Ok(AttackMode::GhostJoin));
        assert_eq!("honest".parse::<ForgedSpeed>(), Ok(ForgedSpeed::Honest));
        assert_eq!("35".parse::<ForgedSpeed>(), Ok(ForgedSpeed::Fixed(35.0)));
    }
}
