//! Flat `key = value` scenario files.
//!
//! One assignment per line, `#` starts a comment, list values are
//! comma-separated. Nested profile fields use dotted keys
//! (`attacker.rate`, `detection.m_max`). Keys missing from a file keep
//! their default value.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use super::{Position, ScenarioConfig};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value for `{key}`: {reason}")]
    InvalidValue {
        line: usize,
        key: String,
        reason: String,
    },
}

/// Failure to apply a single assignment.
#[derive(Debug, Error, PartialEq)]
pub enum SetError {
    #[error("unknown key")]
    UnknownKey,
    #[error("{0}")]
    Invalid(String),
}

fn parse<T: FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.trim().parse::<T>().map_err(|e| e.to_string())
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(format!("not a boolean: `{other}`")),
    }
}

fn parse_positions(v: &str) -> Result<Vec<Position>, String> {
    let v = v.trim();
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|item| {
            let (x, y) = item
                .split_once(':')
                .ok_or_else(|| format!("position `{}` is not `x:y`", item.trim()))?;
            Ok(Position::new(parse(x)?, parse(y)?))
        })
        .collect()
}

impl ScenarioConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SetError> {
        self.assign(key, value)
            .map_err(SetError::Invalid)?
            .then_some(())
            .ok_or(SetError::UnknownKey)
    }

    /// Returns `Ok(false)` for an unknown key.
    fn assign(&mut self, key: &str, value: &str) -> Result<bool, String> {
        let a = &mut self.attacker;
        let d = &mut self.detection;
        match key {
            "name" => self.name = value.trim().to_string(),
            "area_width" => self.area_width = parse(value)?,
            "area_height" => self.area_height = parse(value)?,
            "tx_range" => self.tx_range = parse(value)?,
            "density" => self.density = parse(value)?,
            "duration" => self.duration = parse(value)?,
            "seed" => self.seed = parse(value)?,
            "detector" => self.detector = parse(value)?,
            "cbr_rate" => self.cbr_rate = parse(value)?,
            "buffer_capacity" => self.buffer_capacity = parse(value)?,
            "hop_delay_base" => self.hop_delay_base = parse(value)?,
            "hop_delay_jitter" => self.hop_delay_jitter = parse(value)?,
            "verify_delay" => self.verify_delay = parse(value)?,
            "packet_size" => self.packet_size = parse(value)?,
            "move_tick" => self.move_tick = parse(value)?,
            "speed_resample" => self.speed_resample = parse(value)?,
            "rsru_positions" => self.rsru_positions = parse_positions(value)?,
            "attacker.mode" => a.mode = parse(value)?,
            "attacker.count" => a.count = parse(value)?,
            "attacker.rate" => a.rate = parse(value)?,
            "attacker.ghost_count" => a.ghost_count = parse(value)?,
            "attacker.start_time" => a.start_time = parse(value)?,
            "attacker.forged_speed" => a.forged_speed = parse(value)?,
            "detection.m_max" => d.m_max = parse(value)?,
            "detection.alpha" => d.alpha = parse(value)?,
            "detection.v_max" => d.v_max = parse(value)?,
            "detection.v_min" => d.v_min = parse(value)?,
            "detection.ts_threshold" => d.ts_threshold = parse(value)?,
            "detection.rate_window" => d.rate_window = parse(value)?,
            "detection.slot_duration" => d.slot_duration = parse(value)?,
            "detection.flood_factor" => d.flood_factor = parse(value)?,
            "detection.step_tolerance" => d.step_tolerance = parse(value)?,
            "detection.rate_consistency" => d.rate_consistency = parse_bool(value)?,
            "detection.rate_slack" => d.rate_slack = parse(value)?,
            "detection.speed_source" => d.speed_source = parse(value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Parses a scenario file on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let key = key.trim();
            cfg.set(key, value).map_err(|e| match e {
                SetError::UnknownKey => ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                },
                SetError::Invalid(reason) => ConfigError::InvalidValue {
                    line,
                    key: key.to_string(),
                    reason,
                },
            })?;
        }
        Ok(cfg)
    }

    /// Renders every field; `from_text(to_text(c)) == c`.
    pub fn to_text(&self) -> String {
        let a = &self.attacker;
        let d = &self.detection;
        let rsrus = self
            .rsru_positions
            .iter()
            .map(|p| format!("{}:{}", p.x, p.y))
            .collect::<Vec<_>>()
            .join(", ");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("name", self.name.clone());
        kv("area_width", self.area_width.to_string());
        kv("area_height", self.area_height.to_string());
        kv("tx_range", self.tx_range.to_string());
        kv("density", self.density.to_string());
        kv("duration", self.duration.to_string());
        kv("seed", self.seed.to_string());
        kv("detector", self.detector.to_string());
        kv("cbr_rate", self.cbr_rate.to_string());
        kv("buffer_capacity", self.buffer_capacity.to_string());
        kv("hop_delay_base", self.hop_delay_base.to_string());
        kv("hop_delay_jitter", self.hop_delay_jitter.to_string());
        kv("verify_delay", self.verify_delay.to_string());
        kv("packet_size", self.packet_size.to_string());
        kv("move_tick", self.move_tick.to_string());
        kv("speed_resample", self.speed_resample.to_string());
        kv("rsru_positions", rsrus);
        kv("attacker.mode", a.mode.to_string());
        kv("attacker.count", a.count.to_string());
        kv("attacker.rate", a.rate.to_string());
        kv("attacker.ghost_count", a.ghost_count.to_string());
        kv("attacker.start_time", a.start_time.to_string());
        kv("attacker.forged_speed", a.forged_speed.to_string());
        kv("detection.m_max", d.m_max.to_string());
        kv("detection.alpha", d.alpha.to_string());
        kv("detection.v_max", d.v_max.to_string());
        kv("detection.v_min", d.v_min.to_string());
        kv("detection.ts_threshold", d.ts_threshold.to_string());
        kv("detection.rate_window", d.rate_window.to_string());
        kv("detection.slot_duration", d.slot_duration.to_string());
        kv("detection.flood_factor", d.flood_factor.to_string());
        kv("detection.step_tolerance", d.step_tolerance.to_string());
        kv("detection.rate_consistency", d.rate_consistency.to_string());
        kv("detection.rate_slack", d.rate_slack.to_string());
        kv(
            "detection.speed_source",
            d.speed_source.as_str().to_string(),
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AttackMode, DetectorKind, ForgedSpeed, SpeedSource};
    use proptest::prelude::*;

    #[test]
    fn parses_comments_and_dotted_keys() {
        let cfg = ScenarioConfig::from_text(
            "# sweep base\n\
             density = 60   # vehicles\n\
             detector = baseline\n\
             attacker.mode = flood\n\
             detection.m_max = 25\n\
             rsru_positions = 250:250, 750:750\n",
        )
        .unwrap();
        assert_eq!(cfg.density, 60);
        assert_eq!(cfg.detector, DetectorKind::Baseline);
        assert_eq!(cfg.attacker.mode, AttackMode::Flood);
        assert_eq!(cfg.detection.m_max, 25.0);
        assert_eq!(
            cfg.rsru_positions,
            vec![Position::new(250.0, 250.0), Position::new(750.0, 750.0)]
        );
    }

    #[test]
    fn reports_line_numbers() {
        assert_eq!(
            ScenarioConfig::from_text("density = 3\nbogus = 1\n"),
            Err(ConfigError::UnknownKey {
                line: 2,
                key: "bogus".into()
            })
        );
        assert_eq!(
            ScenarioConfig::from_text("\n\njust words"),
            Err(ConfigError::Syntax { line: 3 })
        );
        assert!(matches!(
            ScenarioConfig::from_text("density = -4"),
            Err(ConfigError::InvalidValue { line: 1, .. })
        ));
    }

    #[test]
    fn default_round_trips() {
        let cfg = ScenarioConfig::default();
        assert_eq!(ScenarioConfig::from_text(&cfg.to_text()).unwrap(), cfg);
    }

    fn arb_config() -> impl Strategy<Value = ScenarioConfig> {
        (
            (
                1.0f64..5000.0,
                1.0f64..5000.0,
                0.1f64..2000.0,
                1u32..500,
                0.5f64..5000.0,
                any::<u64>(),
            ),
            (
                any::<bool>(),
                0.01f64..50.0,
                1usize..1000,
                0.0f64..0.1,
                0.0f64..0.1,
                0.0f64..0.1,
            ),
            (
                0usize..4,
                0u32..50,
                0.0f64..1000.0,
                0u32..50,
                0.0f64..100.0,
                prop_oneof![
                    Just(ForgedSpeed::Auto),
                    Just(ForgedSpeed::Honest),
                    (0.0f64..100.0).prop_map(ForgedSpeed::Fixed),
                ],
            ),
            (
                1.0f64..100.0,
                0.0f64..5.0,
                0.0f64..20.0,
                20.0f64..60.0,
                0.001f64..1.0,
                any::<bool>(),
            ),
            proptest::collection::vec((0.0f64..1000.0, 0.0f64..1000.0), 0..3),
        )
            .prop_map(|(w, c, a, d, rsrus)| {
                let mut cfg = ScenarioConfig {
                    name: "prop".into(),
                    area_width: w.0,
                    area_height: w.1,
                    tx_range: w.2,
                    density: w.3,
                    duration: w.4,
                    seed: w.5,
                    detector: if c.0 {
                        DetectorKind::PSecure
                    } else {
                        DetectorKind::Baseline
                    },
                    cbr_rate: c.1,
                    buffer_capacity: c.2,
                    hop_delay_base: c.3,
                    hop_delay_jitter: c.4,
                    verify_delay: c.5,
                    rsru_positions: rsrus
                        .into_iter()
                        .map(|(x, y)| Position::new(x, y))
                        .collect(),
                    ..Default::default()
                };
                cfg.attacker.mode = [
                    AttackMode::None,
                    AttackMode::Flood,
                    AttackMode::GhostJoin,
                    AttackMode::FalseInfo,
                ][a.0];
                cfg.attacker.count = a.1;
                cfg.attacker.rate = a.2;
                cfg.attacker.ghost_count = a.3;
                cfg.attacker.start_time = a.4;
                cfg.attacker.forged_speed = a.5;
                cfg.detection.m_max = d.0;
                cfg.detection.alpha = d.1;
                cfg.detection.v_min = d.2;
                cfg.detection.v_max = d.3;
                cfg.detection.ts_threshold = d.4;
                cfg.detection.rate_consistency = d.5;
                cfg.detection.speed_source = if d.5 {
                    SpeedSource::Derived
                } else {
                    SpeedSource::Reported
                };
                cfg
            })
    }

    proptest! {
        #[test]
        fn text_form_round_trips(cfg in arb_config()) {
            let back = ScenarioConfig::from_text(&cfg.to_text()).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
