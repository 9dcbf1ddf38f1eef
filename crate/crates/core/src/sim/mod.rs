//! Event kernel: GPRM firing, token delivery, reset/release and the
//! dynamic bundled-data check.

mod engine;
mod event;
mod trace;

pub use engine::{Environment, Limit, SimError, SimOptions, Simulator, Step};
pub use event::{Event, EventKind, EventQueue};
pub use trace::{ThermalSample, TokenMove, TokenPhase, Trace, Violation};

use crate::model::Network;

/// Resets `network` and runs it to `limit`, returning the trace.
pub fn simulate(network: Network, opts: SimOptions, limit: Limit) -> Result<Trace, SimError> {
    let mut sim = Simulator::reset(network, opts)?;
    sim.run_until(limit)?;
    Ok(sim.into_trace())
}
