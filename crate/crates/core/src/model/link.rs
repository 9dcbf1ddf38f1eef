use std::fmt;

use serde::{Deserialize, Serialize};

use super::network::GprmId;
use super::parity::{evaluate_parity, Bits, Convention};
use super::ModelError;
use crate::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub u32);

impl LinkId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct ChannelId(pub u16);

impl ChannelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ch{}", self.0)
    }
}

/// One delay unit of a link direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Channel {
    pub id: ChannelId,
    pub delay: Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkKind {
    Communication,
    ClosedLoop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    A,
    B,
}

/// `Forward` is driven by endpoint A (producer, or the owning GPRM of a
/// loop); `Backward` by endpoint B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

/// A parity-encoded channel bundle. For communication links endpoint A is
/// the producer (output role) and B the consumer (input role). For closed
/// loops both endpoints are the same GPRM and only forward channels exist.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: LinkId,
    pub name: String,
    pub kind: LinkKind,
    pub endpoint_a: GprmId,
    pub endpoint_b: GprmId,
    pub fwd: Vec<Channel>,
    pub bwd: Vec<Channel>,
    /// Endpoint evaluating XNOR, i.e. the token holder after reset.
    pub xnor_side: Side,
}

impl Link {
    pub fn communication(
        id: LinkId,
        name: impl Into<String>,
        producer: GprmId,
        consumer: GprmId,
        fwd: &[Time],
        bwd: &[Time],
    ) -> Self {
        Link {
            id,
            name: name.into(),
            kind: LinkKind::Communication,
            endpoint_a: producer,
            endpoint_b: consumer,
            fwd: channels(fwd),
            bwd: channels(bwd),
            xnor_side: Side::A,
        }
    }

    pub fn closed_loop(id: LinkId, name: impl Into<String>, gprm: GprmId, delays: &[Time]) -> Self {
        Link {
            id,
            name: name.into(),
            kind: LinkKind::ClosedLoop,
            endpoint_a: gprm,
            endpoint_b: gprm,
            fwd: channels(delays),
            bwd: Vec::new(),
            xnor_side: Side::A,
        }
    }

    pub fn is_loop(&self) -> bool {
        self.kind == LinkKind::ClosedLoop
    }

    pub fn channels(&self, direction: Direction) -> &[Channel] {
        match direction {
            Direction::Forward => &self.fwd,
            Direction::Backward => &self.bwd,
        }
    }

    pub fn channel(&self, direction: Direction, channel: ChannelId) -> Result<&Channel, ModelError> {
        self.channels(direction)
            .get(channel.index())
            .ok_or(ModelError::UnknownChannel {
                link: self.id,
                direction,
                channel,
            })
    }

    pub fn endpoint(&self, side: Side) -> GprmId {
        match side {
            Side::A => self.endpoint_a,
            Side::B => self.endpoint_b,
        }
    }

    pub fn sender(&self, direction: Direction) -> Side {
        match direction {
            Direction::Forward => Side::A,
            Direction::Backward => Side::B,
        }
    }

    pub fn receiver(&self, direction: Direction) -> Side {
        match (self.kind, direction) {
            (LinkKind::ClosedLoop, _) => Side::A,
            (_, Direction::Forward) => Side::B,
            (_, Direction::Backward) => Side::A,
        }
    }

    pub fn convention(&self, side: Side) -> Convention {
        if side == self.xnor_side {
            Convention::Xnor
        } else {
            Convention::Xor
        }
    }
}

fn channels(delays: &[Time]) -> Vec<Channel> {
    delays
        .iter()
        .enumerate()
        .map(|(i, &delay)| Channel {
            id: ChannelId(i as u16),
            delay,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenLocation {
    AtA,
    AtB,
    InFlight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InFlight {
    pub direction: Direction,
    pub channel: ChannelId,
    pub arrival: Time,
}

/// Flip-flop outputs on both sides plus the delayed copies visible at each
/// endpoint. `received_b` mirrors `ff_a` on a communication link;
/// `received_a` mirrors `ff_b`, or `ff_a` itself on a closed loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkState {
    pub ff_a: Bits,
    pub ff_b: Bits,
    pub received_a: Bits,
    pub received_b: Bits,
    pub in_flight: Option<InFlight>,
}

impl LinkState {
    /// All flip-flops and wires at 0.
    pub fn reset(link: &Link) -> Self {
        let (received_a, received_b) = match link.kind {
            LinkKind::Communication => (Bits::zeros(link.bwd.len()), Bits::zeros(link.fwd.len())),
            LinkKind::ClosedLoop => (Bits::zeros(link.fwd.len()), Bits::zeros(0)),
        };
        LinkState {
            ff_a: Bits::zeros(link.fwd.len()),
            ff_b: Bits::zeros(link.bwd.len()),
            received_a,
            received_b,
            in_flight: None,
        }
    }

    pub fn parity(&self, link: &Link, side: Side) -> bool {
        match side {
            Side::A => evaluate_parity(self.ff_a, self.received_a, link.convention(Side::A)),
            Side::B => evaluate_parity(self.ff_b, self.received_b, link.convention(Side::B)),
        }
    }

    pub fn token_location(&self, link: &Link) -> Result<TokenLocation, ModelError> {
        let at_a = self.parity(link, Side::A);
        if link.is_loop() {
            return Ok(if at_a {
                TokenLocation::AtA
            } else {
                TokenLocation::InFlight
            });
        }
        match (at_a, self.parity(link, Side::B)) {
            (true, true) => Err(ModelError::ProtocolViolation { link: link.id }),
            (true, false) => Ok(TokenLocation::AtA),
            (false, true) => Ok(TokenLocation::AtB),
            (false, false) => Ok(TokenLocation::InFlight),
        }
    }

    pub fn holds_token(&self, link: &Link, side: Side) -> Result<bool, ModelError> {
        let loc = self.token_location(link)?;
        Ok(matches!(
            (loc, side),
            (TokenLocation::AtA, Side::A) | (TokenLocation::AtB, Side::B)
        ))
    }

    /// Toggles the sender's flip-flop for `channel`; the transition arrives
    /// after the channel's nominal delay.
    pub fn toggle_channel(
        &mut self,
        link: &Link,
        direction: Direction,
        channel: ChannelId,
        now: Time,
    ) -> Result<InFlight, ModelError> {
        if link.is_loop() && direction == Direction::Backward {
            return Err(ModelError::NoBackwardOnLoop { link: link.id });
        }
        let delay = link.channel(direction, channel)?.delay;
        self.toggle_channel_with_delay(link, direction, channel, now, delay)
    }

    /// Same as [`toggle_channel`](Self::toggle_channel) with an explicit
    /// propagation delay (temperature-scaled, overhead included).
    pub fn toggle_channel_with_delay(
        &mut self,
        link: &Link,
        direction: Direction,
        channel: ChannelId,
        now: Time,
        delay: Time,
    ) -> Result<InFlight, ModelError> {
        if link.is_loop() && direction == Direction::Backward {
            return Err(ModelError::NoBackwardOnLoop { link: link.id });
        }
        link.channel(direction, channel)?;
        if self.in_flight.is_some() {
            return Err(ModelError::TransitionInFlight { link: link.id });
        }
        if !self.holds_token(link, link.sender(direction))? {
            return Err(ModelError::TokenNotHeld { link: link.id });
        }
        match direction {
            Direction::Forward => self.ff_a.toggle(channel.index()),
            Direction::Backward => self.ff_b.toggle(channel.index()),
        }
        let flight = InFlight {
            direction,
            channel,
            arrival: now + delay,
        };
        self.in_flight = Some(flight);
        Ok(flight)
    }

    /// Propagates the in-flight transition to the receiving wires.
    pub fn deliver(&mut self, link: &Link) -> Result<InFlight, ModelError> {
        let flight = self
            .in_flight
            .take()
            .ok_or(ModelError::NothingInFlight { link: link.id })?;
        let ch = flight.channel.index();
        match (link.kind, flight.direction) {
            (LinkKind::ClosedLoop, _) => self.received_a.set(ch, self.ff_a.get(ch)),
            (_, Direction::Forward) => self.received_b.set(ch, self.ff_a.get(ch)),
            (_, Direction::Backward) => self.received_a.set(ch, self.ff_b.get(ch)),
        }
        Ok(flight)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comm() -> Link {
        Link::communication(
            LinkId(0),
            "l0",
            GprmId(0),
            GprmId(1),
            &[Time(4000), Time(6000)],
            &[Time(1000)],
        )
    }

    #[test]
    fn fresh_state_token_at_xnor_side() {
        let l = comm();
        assert_eq!(LinkState::reset(&l).token_location(&l).unwrap(), TokenLocation::AtA);
        let mut flipped = comm();
        flipped.xnor_side = Side::B;
        assert_eq!(
            LinkState::reset(&flipped).token_location(&flipped).unwrap(),
            TokenLocation::AtB
        );
    }

    #[test]
    fn toggle_then_deliver_moves_token() {
        let l = comm();
        let mut s = LinkState::reset(&l);
        let f = s
            .toggle_channel(&l, Direction::Forward, ChannelId(0), Time(0))
            .unwrap();
        assert_eq!(f.arrival, Time(4000));
        assert_eq!(s.token_location(&l).unwrap(), TokenLocation::InFlight);
        s.deliver(&l).unwrap();
        // hand trace: ff_a=[1,0], recv_b=[1,0], ff_b=[0]; B: XOR(0 ^ 1) = 1
        assert_eq!(s.token_location(&l).unwrap(), TokenLocation::AtB);
        s.toggle_channel(&l, Direction::Backward, ChannelId(0), Time(5000))
            .unwrap();
        s.deliver(&l).unwrap();
        assert_eq!(s.token_location(&l).unwrap(), TokenLocation::AtA);
    }

    #[test]
    fn sending_without_token_fails() {
        let l = comm();
        let mut s = LinkState::reset(&l);
        let err = s
            .toggle_channel(&l, Direction::Backward, ChannelId(0), Time(0))
            .unwrap_err();
        assert_eq!(err, ModelError::TokenNotHeld { link: LinkId(0) });
    }

    #[test]
    fn double_send_is_rejected() {
        let l = comm();
        let mut s = LinkState::reset(&l);
        s.toggle_channel(&l, Direction::Forward, ChannelId(0), Time(0))
            .unwrap();
        let err = s
            .toggle_channel(&l, Direction::Forward, ChannelId(1), Time(0))
            .unwrap_err();
        assert_eq!(err, ModelError::TransitionInFlight { link: LinkId(0) });
    }

    #[test]
    fn unknown_channel() {
        let l = comm();
        let mut s = LinkState::reset(&l);
        assert!(matches!(
            s.toggle_channel(&l, Direction::Forward, ChannelId(5), Time(0)),
            Err(ModelError::UnknownChannel { .. })
        ));
    }

    #[test]
    fn loop_token_leaves_and_returns() {
        let l = Link::closed_loop(LinkId(3), "loop", GprmId(0), &[Time(10_000)]);
        let mut s = LinkState::reset(&l);
        assert_eq!(s.token_location(&l).unwrap(), TokenLocation::AtA);
        s.toggle_channel(&l, Direction::Forward, ChannelId(0), Time(0))
            .unwrap();
        assert_eq!(s.token_location(&l).unwrap(), TokenLocation::InFlight);
        s.deliver(&l).unwrap();
        assert_eq!(s.token_location(&l).unwrap(), TokenLocation::AtA);
        assert!(matches!(
            s.toggle_channel(&l, Direction::Backward, ChannelId(0), Time(0)),
            Err(ModelError::NoBackwardOnLoop { .. })
        ));
    }

    #[test]
    fn corrupted_state_reports_violation() {
        let l = comm();
        let mut s = LinkState::reset(&l);
        s.received_b.toggle(0);
        assert_eq!(
            s.token_location(&l),
            Err(ModelError::ProtocolViolation { link: LinkId(0) })
        );
    }
}
