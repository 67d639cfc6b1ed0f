//! Adversary traffic generators.

use rand::Rng;

use crate::domain::{
    AttackMode, AttackerProfile, DetectionParams, ForgedSpeed, Packet, PacketKind, Position,
    VehicleId, VehicleState,
};

/// Speed an attacker of `mode` writes into its packets, given its true speed.
pub fn forged_speed(profile: &AttackerProfile, params: &DetectionParams, honest: f64) -> f64 {
    match profile.forged_speed {
        ForgedSpeed::Honest => honest,
        ForgedSpeed::Fixed(v) => v,
        ForgedSpeed::Auto => match profile.mode {
            AttackMode::Flood => params.v_max + 5.0,
            AttackMode::FalseInfo => 0.0,
            AttackMode::GhostJoin | AttackMode::None => (params.v_min + params.v_max) / 2.0,
        },
    }
}

/// Time of the first attack emission at or after `start_time`, staggered by `offset`.
pub fn onset(profile: &AttackerProfile, offset: f64) -> f64 {
    profile.start_time + offset
}

/// One flood beacon at `t` and the time of the next one.
pub fn flood_emit(
    att: &VehicleState,
    profile: &AttackerProfile,
    params: &DetectionParams,
    t: f64,
    seq: u64,
    size: u32,
) -> (Packet, f64) {
    debug_assert_eq!(profile.mode, AttackMode::Flood);
    debug_assert!(t >= profile.start_time);
    let pkt = Packet {
        seq,
        sender: att.id,
        kind: PacketKind::Beacon,
        reported_speed: forged_speed(profile, params, att.speed),
        reported_pos: att.pos,
        ts_send: t,
        size,
    };
    (pkt, t + 1.0 / profile.rate)
}

/// A burst with one join request per forged identity. Each claims a random
/// position near `rsru`.
#[allow(clippy::too_many_arguments)]
pub fn ghost_join<R: Rng>(
    profile: &AttackerProfile,
    params: &DetectionParams,
    ghosts: &[VehicleId],
    seqs: &mut [u64],
    rsru: Position,
    radius: f64,
    rng: &mut R,
    t: f64,
    size: u32,
) -> Vec<Packet> {
    debug_assert_eq!(profile.mode, AttackMode::GhostJoin);
    ghosts
        .iter()
        .zip(seqs.iter_mut())
        .map(|(&id, seq)| {
            let r = radius * rng.gen_range(0.0f64..1.0).sqrt();
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let speed = forged_speed(profile, params, (params.v_min + params.v_max) / 2.0);
            let pkt = Packet {
                seq: *seq,
                sender: id,
                kind: PacketKind::JoinRequest,
                reported_speed: speed,
                reported_pos: Position::new(rsru.x + r * theta.cos(), rsru.y + r * theta.sin()),
                ts_send: t,
                size,
            };
            *seq += 1;
            pkt
        })
        .collect()
}

/// A false alert at honest rate claiming `forged` speed, placed at the attacker's position.
pub fn false_info_emit(
    att: &VehicleState,
    profile: &AttackerProfile,
    params: &DetectionParams,
    t: f64,
    seq: u64,
    size: u32,
) -> Packet {
    debug_assert_eq!(profile.mode, AttackMode::FalseInfo);
    Packet {
        seq,
        sender: att.id,
        kind: PacketKind::AlertMsg,
        reported_speed: forged_speed(profile, params, att.speed),
        reported_pos: att.pos,
        ts_send: t,
        size,
    }
}
