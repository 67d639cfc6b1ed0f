//! Discrete-event VANET simulator comparing an on-arrival two-phase DoS
//! detector against a confirm-time baseline at the roadside unit.

pub mod attack;
pub mod cli;
pub mod detectors;
pub mod domain;
pub mod engine;
pub mod metrics;
pub mod sim;
pub mod world;
