#![allow(dead_code)]

use std::collections::HashSet;
use std::path::PathBuf;

use gals::model::{LinkId, LinkKind, Network, Side, TokenLocation};
use gals::sim::{EventKind, Limit, SimError, SimOptions, Simulator, Step, TokenPhase, Trace};

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Token positions replayed from the departure/arrival log alone, with no
/// access to flip-flop state.
pub struct TokenTracker {
    loc: Vec<TokenLocation>,
    seen: usize,
}

impl TokenTracker {
    pub fn new(net: &Network) -> Self {
        let loc = net
            .links
            .iter()
            .map(|l| match (l.kind, l.xnor_side) {
                (LinkKind::Communication, Side::B) => TokenLocation::AtB,
                _ => TokenLocation::AtA,
            })
            .collect();
        TokenTracker { loc, seen: 0 }
    }

    pub fn replay(&mut self, net: &Network, trace: &Trace) -> Result<(), String> {
        for m in &trace.tokens[self.seen..] {
            let link = net.link(m.link);
            let at = &mut self.loc[m.link.index()];
            match m.phase {
                TokenPhase::Depart => {
                    let side = link.sender(m.direction);
                    let expect = if side == Side::A { TokenLocation::AtA } else { TokenLocation::AtB };
                    if *at != expect {
                        return Err(format!("{} departed from {:?} while token was {:?}", m.link, side, at));
                    }
                    *at = TokenLocation::InFlight;
                }
                TokenPhase::Arrive => {
                    if *at != TokenLocation::InFlight {
                        return Err(format!("{} arrival with no token in flight", m.link));
                    }
                    *at = if link.receiver(m.direction) == Side::A {
                        TokenLocation::AtA
                    } else {
                        TokenLocation::AtB
                    };
                }
            }
        }
        self.seen = trace.tokens.len();
        Ok(())
    }

    pub fn location(&self, link: LinkId) -> TokenLocation {
        self.loc[link.index()]
    }
}

#[derive(Debug, Default, Clone)]
pub struct CheckedRun {
    pub events: u64,
    pub violations: usize,
    pub trace: Trace,
}

/// Steps the network one event at a time and, after every step, checks
/// each link's parity-derived token location against the replayed log and
/// that no link has two arrivals queued.
pub fn run_checked(net: Network, limit: Limit) -> Result<CheckedRun, String> {
    let mut tracker = TokenTracker::new(&net);
    let mut sim = Simulator::reset(net, SimOptions::default()).map_err(|e| e.to_string())?;
    loop {
        let due = match limit {
            Limit::Events(n) => sim.events_processed() < n,
            Limit::Time(t) => sim.queue().peek().is_some_and(|e| e.time <= t),
        };
        if !due {
            break;
        }
        match sim.step() {
            Ok(Step::Quiescent) => break,
            Ok(Step::Processed(_)) => {}
            Err(e @ SimError::Protocol { .. }) => return Err(format!("protocol: {e}")),
            Err(e) => return Err(e.to_string()),
        }
        tracker.replay(sim.network(), sim.trace())?;
        for link in &sim.network().links {
            let parity = sim.token_location(link.id).map_err(|e| format!("t={}: {e}", sim.clock()))?;
            if parity != tracker.location(link.id) {
                return Err(format!(
                    "t={}: {} parity says {:?}, log says {:?}",
                    sim.clock(),
                    link.id,
                    parity,
                    tracker.location(link.id)
                ));
            }
        }
        let mut pending = HashSet::new();
        for e in sim.queue().iter() {
            if let EventKind::ParityArrival { link, .. } = e.kind {
                if !pending.insert(link) {
                    return Err(format!("t={}: two arrivals queued on {link}", sim.clock()));
                }
            }
        }
    }
    Ok(CheckedRun {
        events: sim.events_processed(),
        violations: sim.trace().violations.len(),
        trace: sim.into_trace(),
    })
}
