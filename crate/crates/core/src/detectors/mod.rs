//! Roadside detectors.

pub mod baseline;
pub mod psecure;

pub use baseline::{baseline_confirm, Confirmation, CredentialRegistry, Finished, Offer, Verifier};
pub use psecure::{
    expected_packet_rate, phase1_check, phase1_rule, AdmitOutcome, RateHistory, RsruState, Status,
    Verdict, VerificationRecord,
};
