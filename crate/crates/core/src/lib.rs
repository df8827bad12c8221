//! Simulator for secure full-duplex links with movable antennas.
//!
//! A base station with movable transmit and receive arrays serves an uplink
//! and a downlink user while an eavesdropper listens to both. The crate
//! provides the field-response channel model, secrecy-rate metrics, and an
//! alternating optimizer over antenna positions (PSO), transmit covariances
//! (SCA on a difference-of-concave objective) and the receive combiner
//! (closed form), together with the benchmark schemes and sweep harness.
//!
//! Numerical code is generic over [`Real`], implemented for `f32` and `f64`.

pub mod ao;
pub mod channel;
pub mod config;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod positioning;
pub mod receive;
pub mod rng;
pub mod scalar;
pub mod transmit;

pub use ao::{AoConfig, AoOutcome, AoSeeds, Scheme, alternating_optimize, run_scheme};
pub use config::SystemConfig;
pub use error::{Error, Result, Stage};
pub use harness::ExperimentRecord;
pub use metrics::DuplexMode;
pub use scalar::Real;

pub type Scenario64 = channel::Scenario<f64>;
pub type Scenario32 = channel::Scenario<f32>;
pub type Layout64 = channel::AntennaLayout<f64>;
pub type Layout32 = channel::AntennaLayout<f32>;
pub type Channels64 = channel::Channels<f64>;
pub type Channels32 = channel::Channels<f32>;
pub type State64 = metrics::BeamformingState<f64>;
pub type State32 = metrics::BeamformingState<f32>;
pub type Outcome64 = ao::AoOutcome<f64>;
pub type Outcome32 = ao::AoOutcome<f32>;
