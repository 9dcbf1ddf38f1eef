use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::model::{ChannelId, Direction, GprmId, LinkId};
use crate::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    ParityArrival {
        link: LinkId,
        direction: Direction,
        channel: ChannelId,
        /// GPRM on the receiving side; orders same-instant arrivals.
        to: GprmId,
    },
    Release {
        gprm: GprmId,
    },
    EnvironmentStep {
        dt: Time,
    },
}

impl EventKind {
    fn priority(&self) -> u8 {
        match self {
            // an environment step at t closes the window [t - dt, t)
            EventKind::EnvironmentStep { .. } => 0,
            EventKind::ParityArrival { .. } => 1,
            EventKind::Release { .. } => 2,
        }
    }

    /// Secondary key inside one priority class: target GPRM, then link.
    fn target(&self) -> (u32, u32) {
        match self {
            EventKind::ParityArrival { link, to, .. } => (to.0, link.0),
            EventKind::Release { gprm } => (gprm.0, 0),
            EventKind::EnvironmentStep { .. } => (0, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub time: Time,
    pub seq: u64,
    pub kind: EventKind,
}

impl Event {
    fn key(&self) -> (Time, u8, (u32, u32), u64) {
        (self.time, self.kind.priority(), self.kind.target(), self.seq)
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-queue ordered by (time, kind priority, target GPRM, link, seq).
/// The result does not depend on insertion order except through `seq`,
/// which only breaks ties that cannot occur between legal events.
#[derive(Debug, Clone, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Event>>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: Time, kind: EventKind) -> Event {
        let ev = Event {
            time,
            seq: self.next_seq,
            kind,
        };
        self.next_seq += 1;
        self.heap.push(Reverse(ev));
        ev
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|r| r.0)
    }

    pub fn peek(&self) -> Option<&Event> {
        self.heap.peek().map(|r| &r.0)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.heap.iter().map(|r| &r.0)
    }
}
