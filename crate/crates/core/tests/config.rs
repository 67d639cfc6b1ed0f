use proptest::prelude::*;
use vanet_sim::domain::{validate_config, AttackMode, ScenarioConfig};

/// One seeded mistake and the field it should be reported against.
fn corrupt(cfg: &mut ScenarioConfig, which: u8, x: f64) -> &'static str {
    match which {
        0 => {
            cfg.density = 0;
            "density"
        }
        1 => {
            cfg.detection.v_min = cfg.detection.v_max + x;
            "detection.v_max"
        }
        2 => {
            cfg.tx_range = -x;
            "tx_range"
        }
        3 => {
            cfg.detection.ts_threshold = -x;
            "detection.ts_threshold"
        }
        4 => {
            cfg.duration = -x;
            "duration"
        }
        5 => {
            cfg.buffer_capacity = 0;
            "buffer_capacity"
        }
        _ => {
            cfg.attacker.mode = AttackMode::Flood;
            cfg.attacker.rate = cfg.cbr_rate * (1.0 - x.min(1.0));
            "attacker.rate"
        }
    }
}

proptest! {
    #[test]
    fn seeded_violations_are_reported(which in 0u8..7, x in 0.0f64..50.0) {
        let mut cfg = ScenarioConfig::default();
        prop_assert!(validate_config(&cfg).is_empty());
        let field = corrupt(&mut cfg, which, x);
        let v = validate_config(&cfg);
        prop_assert!(v.iter().any(|v| v.field == field), "{field}: {v:?}");
    }

    #[test]
    fn text_round_trip_keeps_validity(density in 1u32..500, duration in 1.0f64..2000.0) {
        let cfg = ScenarioConfig { density, duration, ..Default::default() };
        let back = ScenarioConfig::from_text(&cfg.to_text()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert!(validate_config(&back).is_empty());
    }
}
