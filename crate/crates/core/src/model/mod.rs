//! Links, parity-encoded tokens, rendezvous modules and processing blocks.

mod link;
mod network;
mod parity;
mod validate;

pub use link::{
    Channel, ChannelId, Direction, InFlight, Link, LinkId, LinkKind, LinkState, Side,
    TokenLocation,
};
pub use network::{
    Apb, ApbId, CustomLogic, Endpoint, Gprm, GprmId, LinkRole, LogicFunction, Network, Word,
};
pub use parity::{evaluate_parity, Bits, Convention};
pub use validate::{validate_topology, ValidationReport, Warning};

/// Upper bound on channels per link direction (one bit each in [`Bits`]).
pub const MAX_CHANNELS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("protocol violation on link {link}: token present at both endpoints")]
    ProtocolViolation { link: LinkId },
    #[error("link {link}: sending side does not hold the token")]
    TokenNotHeld { link: LinkId },
    #[error("link {link}: a transition is already in flight")]
    TransitionInFlight { link: LinkId },
    #[error("link {link}: no transition in flight to deliver")]
    NothingInFlight { link: LinkId },
    #[error("link {link}: channel {channel} does not exist in the {direction:?} direction")]
    UnknownChannel {
        link: LinkId,
        direction: Direction,
        channel: ChannelId,
    },
    #[error("link {link}: closed-loop links have no backward direction")]
    NoBackwardOnLoop { link: LinkId },
    #[error("malformed network: {0}")]
    MalformedNetwork(String),
}
