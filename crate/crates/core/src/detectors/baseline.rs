//! Confirm-time verification at the RSRU.
//!
//! Every admitted packet waits in the bounded buffer for a single
//! work-conserving verifier that spends a fixed time per packet. The
//! baseline detector relies on this stage alone, so attack traffic is only
//! recognized after it has consumed buffer space and verifier time.

use std::collections::BTreeSet;

use crate::domain::{Packet, VehicleId};
use crate::world::{EnqueueOutcome, RsruBuffer};

/// Credentials enrolled with the roadside infrastructure.
#[derive(Debug, Clone, Default)]
pub struct CredentialRegistry {
    enrolled: BTreeSet<VehicleId>,
}

impl CredentialRegistry {
    pub fn new(ids: impl IntoIterator<Item = VehicleId>) -> Self {
        Self {
            enrolled: ids.into_iter().collect(),
        }
    }

    pub fn is_enrolled(&self, id: VehicleId) -> bool {
        self.enrolled.contains(&id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Confirmation {
    Authentic,
    Forged,
}

/// Outcome of confirming one packet.
pub fn baseline_confirm(pkt: &Packet, registry: &CredentialRegistry) -> Confirmation {
    if registry.is_enrolled(pkt.sender) {
        Confirmation::Authentic
    } else {
        Confirmation::Forged
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Offer {
    /// Verifier was idle; the packet is in service until `done_at`.
    Started {
        done_at: f64,
    },
    Queued,
    BufferDrop,
}

/// Packet leaving the verifier, and when the next one finishes if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Finished {
    pub packet: Packet,
    pub next_done_at: Option<f64>,
}

/// Buffer plus single-server verifier.
#[derive(Debug, Clone)]
pub struct Verifier {
    buffer: RsruBuffer,
    in_service: Option<Packet>,
    verify_delay: f64,
}

impl Verifier {
    pub fn new(capacity: usize, verify_delay: f64) -> Self {
        Self {
            buffer: RsruBuffer::new(capacity),
            in_service: None,
            verify_delay,
        }
    }

    pub fn queued(&self) -> usize {
        self.buffer.len()
    }

    pub fn busy(&self) -> bool {
        self.in_service.is_some()
    }

    /// Hands an arriving packet to the verifier at time `t`.
    pub fn offer(&mut self, pkt: Packet, t: f64) -> Offer {
        if self.in_service.is_none() {
            debug_assert!(self.buffer.is_empty());
            self.in_service = Some(pkt);
            return Offer::Started {
                done_at: t + self.verify_delay,
            };
        }
        match self.buffer.enqueue(pkt) {
            EnqueueOutcome::Accepted => Offer::Queued,
            EnqueueOutcome::BufferDrop => Offer::BufferDrop,
        }
    }

    /// Completes the packet in service at time `t` and starts the next one.
    ///
    /// Panics if the verifier is idle; a completion is only ever scheduled by
    /// a started service.
    pub fn finish(&mut self, t: f64) -> Finished {
        let packet = self
            .in_service
            .take()
            .expect("verifier completion while idle");
        self.in_service = self.buffer.dequeue();
        let next_done_at = self.in_service.as_ref().map(|_| t + self.verify_delay);
        Finished {
            packet,
            next_done_at,
        }
    }
}
