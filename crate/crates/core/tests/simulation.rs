use proptest::prelude::*;
use vanet_sim::domain::{AttackMode, DetectorKind, ForgedSpeed, ScenarioConfig};
use vanet_sim::metrics::{drop_rate, mean_e2e_delay, pdr, throughput};
use vanet_sim::sim::{simulate, simulate_with, Sinks};

fn scenario(detector: DetectorKind, mode: AttackMode, seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig {
        density: 50,
        duration: 40.0,
        seed,
        detector,
        ..Default::default()
    };
    cfg.attacker.mode = mode;
    cfg
}

#[test]
fn lossless_when_everyone_is_covered() {
    for detector in DetectorKind::ALL {
        let mut cfg = scenario(detector, AttackMode::None, 3);
        cfg.tx_range = 1500.0;
        let m = simulate(&cfg).unwrap().metrics;
        assert_eq!(pdr(&m), Some(100.0));
        assert_eq!(drop_rate(&m), Some(0.0));
        // At least one hop plus one verification; 200 pkt/s against a 500 pkt/s
        // verifier adds only a short queueing wait on top.
        let d = mean_e2e_delay(&m).unwrap();
        assert!((0.004..0.01).contains(&d), "{d}");
        assert_eq!(throughput(&m), Some(m.sent as f64 / cfg.duration));
    }
}

#[test]
fn cbr_sets_the_offered_load() {
    let cfg = scenario(DetectorKind::Baseline, AttackMode::None, 1);
    let m = simulate(&cfg).unwrap().metrics;
    assert_eq!(m.sent, 50 * 4 * 40);
}

#[test]
fn attacker_does_not_perturb_legitimate_mobility() {
    for mode in [
        AttackMode::Flood,
        AttackMode::GhostJoin,
        AttackMode::FalseInfo,
    ] {
        let quiet = simulate(&scenario(DetectorKind::PSecure, AttackMode::None, 5)).unwrap();
        let noisy = simulate(&scenario(DetectorKind::PSecure, mode, 5)).unwrap();
        assert_eq!(quiet.vehicles[..50], noisy.vehicles[..50], "{mode}");
        assert_eq!(quiet.metrics.sent, noisy.metrics.sent);
    }
}

#[test]
fn detectors_see_identical_legitimate_traffic() {
    let a = simulate(&scenario(DetectorKind::PSecure, AttackMode::Flood, 8)).unwrap();
    let b = simulate(&scenario(DetectorKind::Baseline, AttackMode::Flood, 8)).unwrap();
    assert_eq!(a.metrics.sent, b.metrics.sent);
    assert_eq!(a.metrics.range_drops, b.metrics.range_drops);
    assert_eq!(a.vehicles, b.vehicles);
}

#[test]
fn psecure_blocks_each_attack_mode() {
    for mode in [
        AttackMode::Flood,
        AttackMode::GhostJoin,
        AttackMode::FalseInfo,
    ] {
        let cfg = scenario(DetectorKind::PSecure, mode, 2);
        let out = simulate(&cfg).unwrap();
        assert!(!out.flagged[0].is_empty(), "{mode}");
        assert!(
            out.flagged[0].iter().all(|id| *id >= 50),
            "{mode} flagged a legitimate vehicle"
        );
        assert_eq!(out.metrics.false_positives, 0);
        // Before detection each attacker can slip at most one window's worth of
        // packets past phase 1.
        let budget = u64::from(cfg.attacker.count.max(cfg.attacker.ghost_count)) * 20;
        assert!(
            out.metrics.attack_confirmed_forged <= budget,
            "{mode}: {}",
            out.metrics.attack_confirmed_forged
        );
        assert!(out.metrics.attack_blocked > out.metrics.attack_confirmed_forged);
    }
}

#[test]
fn honest_speed_flood_reaches_the_verifier() {
    let mut cfg = scenario(DetectorKind::PSecure, AttackMode::Flood, 2);
    cfg.attacker.forged_speed = ForgedSpeed::Honest;
    let out = simulate(&cfg).unwrap();
    assert!(out.flagged[0].is_empty());
    assert!(out.metrics.attack_confirmed_forged > 0);
}

#[test]
fn late_onset_leaves_the_prefix_clean() {
    let mut cfg = scenario(DetectorKind::Baseline, AttackMode::Flood, 4);
    cfg.attacker.start_time = 100.0;
    let late = simulate(&cfg).unwrap().metrics;
    let quiet = simulate(&scenario(DetectorKind::Baseline, AttackMode::None, 4))
        .unwrap()
        .metrics;
    assert_eq!(late.attack_sent, 0);
    assert_eq!(late, quiet);
}

#[test]
fn trace_and_verdicts_repeat_exactly() {
    let cfg = scenario(DetectorKind::PSecure, AttackMode::GhostJoin, 6);
    let once = || {
        let (mut t, mut v) = (Vec::new(), Vec::new());
        let out = simulate_with(
            &cfg,
            Sinks {
                trace: Some(&mut t),
                verdicts: Some(&mut v),
            },
        )
        .unwrap();
        (out.metrics, t, v)
    };
    let a = once();
    assert!(!a.1.is_empty() && !a.2.is_empty());
    assert_eq!(a, once());
}

#[test]
fn seeds_change_the_run() {
    let a = simulate(&scenario(DetectorKind::PSecure, AttackMode::None, 1)).unwrap();
    let b = simulate(&scenario(DetectorKind::PSecure, AttackMode::None, 2)).unwrap();
    assert_ne!(a.vehicles, b.vehicles);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conservation_and_metric_ranges(
        density in 1u32..80,
        duration in 1.0f64..30.0,
        seed in 0u64..1000,
        mode in prop_oneof![Just(AttackMode::None), Just(AttackMode::Flood), Just(AttackMode::GhostJoin), Just(AttackMode::FalseInfo)],
        psecure in any::<bool>(),
        buffer in 1usize..200,
    ) {
        let detector = if psecure { DetectorKind::PSecure } else { DetectorKind::Baseline };
        let mut cfg = ScenarioConfig { density, duration, seed, detector, buffer_capacity: buffer, ..Default::default() };
        cfg.attacker.mode = mode;
        let out = simulate(&cfg).unwrap();
        let m = &out.metrics;
        prop_assert!(m.is_conserved());
        if let Some(p) = pdr(m) {
            prop_assert!((0.0..=100.0).contains(&p));
            prop_assert_eq!(drop_rate(m).unwrap(), 1.0 - p / 100.0);
        }
        prop_assert!(throughput(m).unwrap() >= 0.0);
        prop_assert!(m.delay_samples.iter().all(|d| *d > 0.0));
        prop_assert!(out.flagged.iter().flatten().all(|id| *id >= density));
    }
}
