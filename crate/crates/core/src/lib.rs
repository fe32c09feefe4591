//! Models for erasure-based secret-key agreement over directional mmWave links.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the pure
//! computational pieces:
//!
//! * [`rfmath`]: dB conversions and the wiretap-code rate algebra.
//! * [`secrecy`]: the packet-erasure key agreement protocol and an exhaustive
//!   secrecy checker.
//! * [`antenna`]: element pattern, planar array factor and sector codebooks.
//! * [`channel`]: outdoor stochastic channel with spatially consistent
//!   shadowing, and an image-method ray tracer for car platoons.
//! * [`sls`]: the transmit sector-level sweep with secret-carrying beacons.
//! * [`spatial`]: ENSB maps, insecure areas and volumes.
//!
//! File formats, scenario configuration and the command line live in the
//! `mmkey` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod antenna;
pub mod channel;
pub mod geometry;
pub mod rfmath;
pub mod rng;
pub mod secrecy;
pub mod sls;
pub mod spatial;

pub use geometry::Point3;
pub use rfmath::{Db, Dbm, RateBreakdown, WiretapCode};
