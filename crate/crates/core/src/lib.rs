//! Link-level simulation of a malicious reconfigurable intelligent surface
//! (RIS) jamming a downlink multi-user massive MIMO system.
//!
//! The base station spatially multiplexes users with a block-diagonalization
//! precoder built only from direct-link statistics. An attacker controlling a
//! passive RIS tunes its phases by projected gradient ascent to re-inject
//! inter-user interference, and users counter it with null-space receivers
//! that either suppress every reflection or harness their own.
//!
//! Module map:
//! - [`scenario`]: configuration, geometry and unit conversions
//! - [`channel`]: covariance factors, channel draws, cascade operators, CSI errors
//! - [`precoder`]: outer/inner base-station precoders
//! - [`attacker`]: weighted stacked operator and phase optimizer
//! - [`receiver`]: F-MIT, H-MIT and unmitigated receivers, per-symbol SINR
//! - [`harness`]: trials, sweeps, aggregation
//! - [`output`]: CSV and manifest emission

pub mod attacker;
pub mod channel;
pub mod error;
pub mod exec;
pub mod harness;
pub mod linalg;
pub mod output;
pub mod precoder;
pub mod receiver;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
pub use exec::Execution;
pub use scenario::{load_scenario, SystemConfig};
