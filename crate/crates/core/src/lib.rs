//! Discrete-event simulation of GALS networks built from parity-encoded,
//! 2-phase, bundled-data token links.
//!
//! Each autonomous processing block (APB) owns a register and a rendezvous
//! module (GPRM). A GPRM emits a local clock edge when every link it
//! controls shows its token, and at that instant its flow-control policy
//! decides which tokens leave and through which delay channel.
//!
//! - [`model`]: links, parity encoding, APBs and topology validation.
//! - [`sim`]: the deterministic event kernel and trace export.
//! - [`policies`]: channel selection, the PN generator and the thermal model.
//! - [`analysis`]: throughput, clock-edge spectra and resource estimates.
//! - [`config`]: the TOML topology format.
//! - [`sweep`]: independent runs mapped in parallel (feature `parallel`).

pub mod analysis;
pub mod builders;
pub mod config;
pub mod model;
pub mod policies;
pub mod sim;
pub mod sweep;
mod time;

pub use time::{ParseTimeError, Time};
