//! Flow-control policies, the PN generator and the environment model.

mod flow;
pub mod lfsr;
pub mod thermal;

pub use flow::{Action, CustomPolicy, DecisionContext, FlowPolicy, Sensor};
pub use lfsr::{lfsr_next, Lfsr};
pub use thermal::{effective_delay, thermal_step, ThermalModel};

use crate::model::{ChannelId, LinkId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("policy references channel {channel} which {link} does not have in its sending direction")]
    UnknownChannel { link: LinkId, channel: ChannelId },
    #[error("policy references {link}, which is not an endpoint of this GPRM")]
    UnknownEndpoint { link: LinkId },
    #[error("LFSR state is zero")]
    ZeroState,
    #[error("invalid LFSR taps {0:?} (positions 1..=16, must include 16)")]
    InvalidTaps(Vec<u8>),
    #[error("burst period must be at least 1")]
    InvalidBurst,
    #[error("custom policy returned {got} actions for {expected} endpoints")]
    BadDecision { expected: usize, got: usize },
}
