//! Programmatic network construction and the standard topologies.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    Apb, ApbId, ChannelId, GprmId, Link, LinkId, LogicFunction, Network, Side,
};
use crate::policies::FlowPolicy;
use crate::Time;

/// Incremental builder; every APB gets the GPRM with the same index.
#[derive(Debug, Clone, Default)]
pub struct NetworkBuilder {
    apbs: Vec<Apb>,
    links: Vec<Link>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn apb(&mut self, name: impl Into<String>, logic: LogicFunction) -> ApbId {
        let id = ApbId(self.apbs.len() as u32);
        self.apbs.push(Apb::new(id, name, logic));
        id
    }

    pub fn apb_mut(&mut self, id: ApbId) -> &mut Apb {
        &mut self.apbs[id.index()]
    }

    fn gprm(&self, apb: ApbId) -> GprmId {
        self.apbs[apb.index()].gprm
    }

    /// Link with the producer at side A (XNOR side, so the token starts
    /// there and the first item can leave immediately).
    pub fn communication(
        &mut self,
        name: impl Into<String>,
        from: ApbId,
        to: ApbId,
        fwd: &[Time],
        bwd: &[Time],
    ) -> LinkId {
        let id = LinkId(self.links.len() as u32);
        let (a, b) = (self.gprm(from), self.gprm(to));
        self.links.push(Link::communication(id, name, a, b, fwd, bwd));
        id
    }

    pub fn closed_loop(&mut self, name: impl Into<String>, apb: ApbId, delays: &[Time]) -> LinkId {
        let id = LinkId(self.links.len() as u32);
        let g = self.gprm(apb);
        self.links.push(Link::closed_loop(id, name, g, delays));
        id
    }

    pub fn datapath(&mut self, apb: ApbId, link: LinkId, worst: Time) -> &mut Self {
        self.apbs[apb.index()].datapath.insert(link, worst);
        self
    }

    pub fn policy(&mut self, apb: ApbId, policy: FlowPolicy) -> &mut Self {
        self.apbs[apb.index()].policy = policy;
        self
    }

    pub fn halt_after(&mut self, apb: ApbId, firings: u64) -> &mut Self {
        self.apbs[apb.index()].halt_after = Some(firings);
        self
    }

    /// Moves the initial token of a communication link to `side`.
    pub fn xnor(&mut self, link: LinkId, side: Side) -> &mut Self {
        self.links[link.index()].xnor_side = side;
        self
    }

    pub fn build(self) -> Network {
        Network::new(self.apbs, self.links)
    }
}

/// Half the shortest channel: a datapath bound every channel satisfies.
fn safe_datapath(delays: &[Time]) -> Time {
    Time(delays.iter().map(|d| d.0).min().unwrap_or(0) / 2)
}

/// A lone APB whose closed loop has the given channel delays. The counter
/// register emits one item per edge.
pub fn oscillator_channels(delays: &[Time]) -> Network {
    let mut b = NetworkBuilder::new();
    let osc = b.apb("osc", LogicFunction::CounterSource);
    let l = b.closed_loop("loop", osc, delays);
    b.datapath(osc, l, safe_datapath(delays));
    b.build()
}

pub fn oscillator(period: Time) -> Network {
    oscillator_channels(&[period])
}

/// Oscillator whose loop picks 9 ns or 11 ns from the PN sequence, with a
/// 10 ns reference channel for the undithered variant.
pub fn dithered_oscillator(short: Time, long: Time, reference: Time, seed: u16) -> Network {
    let mut net = oscillator_channels(&[short, long, reference]);
    let mut policy = FlowPolicy::spread(LinkId(0), (ChannelId(0), ChannelId(1)), seed, FlowPolicy::default())
        .expect("nonzero seed");
    if let FlowPolicy::SpreadSpectrum { reference: r, .. } = &mut policy {
        *r = ChannelId(2);
    }
    net.apbs[0].policy = policy;
    net
}

/// `source -> s1 -> ... -> sN -> sink`, uniform delays, source stops after
/// `items` firings when given.
pub fn pipeline(stages: usize, fwd: Time, bwd: Time, items: Option<u64>) -> Network {
    pipeline_with(stages, items, |_| (vec![fwd], vec![bwd]))
}

/// Pipeline with per-link channel delays from `delays(link_index)`.
pub fn pipeline_with(
    stages: usize,
    items: Option<u64>,
    mut delays: impl FnMut(usize) -> (Vec<Time>, Vec<Time>),
) -> Network {
    let mut b = NetworkBuilder::new();
    let mut prev = b.apb("src", LogicFunction::CounterSource);
    if let Some(n) = items {
        b.halt_after(prev, n);
    }
    for i in 0..=stages {
        let next = if i == stages {
            b.apb("snk", LogicFunction::RecordingSink)
        } else {
            b.apb(format!("s{}", i + 1), LogicFunction::Passthrough)
        };
        let (fwd, bwd) = delays(i);
        let l = b.communication(format!("l{i}"), prev, next, &fwd, &bwd);
        b.datapath(prev, l, safe_datapath(&fwd));
        prev = next;
    }
    b.build()
}

/// `src -> fork -> {left, right} -> join -> snk`; the join adds its inputs.
pub fn fork_join(fwd: Time, bwd: Time, items: Option<u64>) -> Network {
    fork_join_with(items, |_| (vec![fwd], vec![bwd]))
}

pub fn fork_join_with(
    items: Option<u64>,
    mut delays: impl FnMut(usize) -> (Vec<Time>, Vec<Time>),
) -> Network {
    let mut b = NetworkBuilder::new();
    let src = b.apb("src", LogicFunction::CounterSource);
    if let Some(n) = items {
        b.halt_after(src, n);
    }
    let fork = b.apb("fork", LogicFunction::Passthrough);
    let left = b.apb("left", LogicFunction::Passthrough);
    let right = b.apb("right", LogicFunction::Passthrough);
    let join = b.apb("join", LogicFunction::Accumulator);
    let snk = b.apb("snk", LogicFunction::RecordingSink);
    let edges = [
        ("in", src, fork),
        ("fl", fork, left),
        ("fr", fork, right),
        ("lj", left, join),
        ("rj", right, join),
        ("out", join, snk),
    ];
    for (i, (name, from, to)) in edges.into_iter().enumerate() {
        let (fwd, bwd) = delays(i);
        let l = b.communication(name, from, to, &fwd, &bwd);
        b.datapath(from, l, safe_datapath(&fwd));
    }
    b.build()
}

/// `nodes` passthrough stages in a cycle holding `items` data tokens
/// (on the first `items` links). Needs `1 <= items < nodes`.
pub fn ring(nodes: usize, items: usize, fwd: Time, bwd: Time) -> Network {
    ring_with(nodes, items, |_| (vec![fwd], vec![bwd]))
}

pub fn ring_with(
    nodes: usize,
    items: usize,
    mut delays: impl FnMut(usize) -> (Vec<Time>, Vec<Time>),
) -> Network {
    let mut b = NetworkBuilder::new();
    let ids: Vec<ApbId> = (0..nodes)
        .map(|i| b.apb(format!("r{i}"), LogicFunction::Passthrough))
        .collect();
    for i in 0..nodes {
        let (from, to) = (ids[i], ids[(i + 1) % nodes]);
        let (fwd, bwd) = delays(i);
        let l = b.communication(format!("l{i}"), from, to, &fwd, &bwd);
        b.datapath(from, l, safe_datapath(&fwd));
        if i < items {
            b.xnor(l, Side::B);
        }
    }
    b.build()
}

/// `src -> seq -> snk` where `seq` accumulates its input over `every`
/// loop cycles before passing tokens on.
pub fn sequential_machine(loop_delay: Time, every: u32, items: u64) -> Network {
    sequential_machine_with(every, Some(items), &[loop_delay], |_| {
        (vec![Time::ns(5)], vec![Time::ns(5)])
    })
}

pub fn sequential_machine_with(
    every: u32,
    items: Option<u64>,
    loop_delays: &[Time],
    mut delays: impl FnMut(usize) -> (Vec<Time>, Vec<Time>),
) -> Network {
    let mut b = NetworkBuilder::new();
    let src = b.apb("src", LogicFunction::CounterSource);
    if let Some(n) = items {
        b.halt_after(src, n);
    }
    let seq = b.apb("seq", LogicFunction::Accumulator);
    let snk = b.apb("snk", LogicFunction::RecordingSink);
    let (f0, b0) = delays(0);
    let l0 = b.communication("in", src, seq, &f0, &b0);
    b.datapath(src, l0, safe_datapath(&f0));
    let (f1, b1) = delays(1);
    let l1 = b.communication("out", seq, snk, &f1, &b1);
    b.datapath(seq, l1, safe_datapath(&f1));
    let lp = b.closed_loop("loop", seq, loop_delays);
    b.datapath(seq, lp, safe_datapath(loop_delays));
    b.policy(seq, FlowPolicy::burst(every, FlowPolicy::default()));
    b.build()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    Pipeline { stages: usize },
    ForkJoin,
    Ring { nodes: usize, items: usize },
    Sequential { every: u32 },
}

/// A randomly drawn legal network. Channel delays are uniform in
/// 1..=100 ns with 1 to 3 channels per direction; flow control picks a
/// random fixed channel per endpoint, or dithers one endpoint.
#[derive(Debug, Clone)]
pub struct RandomTopology {
    pub kind: TopologyKind,
    pub network: Network,
    /// Source item budget, set for pipelines only.
    pub items: Option<u64>,
}

pub fn random_topology(seed: u64, min_events: u64) -> RandomTopology {
    fn channels(rng: &mut ChaCha8Rng) -> Vec<Time> {
        let n = rng.random_range(1..=3);
        (0..n).map(|_| Time(rng.random_range(1_000..=100_000))).collect()
    }
    fn delays(rng: &mut ChaCha8Rng, _link: usize) -> (Vec<Time>, Vec<Time>) {
        (channels(rng), channels(rng))
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let kind = match rng.random_range(0..4) {
        0 => TopologyKind::Pipeline {
            stages: rng.random_range(1..=6),
        },
        1 => TopologyKind::ForkJoin,
        2 => {
            let nodes = rng.random_range(2..=6);
            TopologyKind::Ring {
                nodes,
                items: rng.random_range(1..nodes),
            }
        }
        _ => TopologyKind::Sequential {
            every: rng.random_range(1..=4),
        },
    };
    let (mut network, items) = match kind {
        TopologyKind::Pipeline { stages } => {
            // Every item costs one forward and one backward arrival per link.
            let links = stages as u64 + 1;
            let items = min_events.div_ceil(2 * links) + 1;
            let net = pipeline_with(stages, Some(items), |i| delays(&mut rng, i));
            (net, Some(items))
        }
        TopologyKind::ForkJoin => (fork_join_with(None, |i| delays(&mut rng, i)), None),
        TopologyKind::Ring { nodes, items } => {
            (ring_with(nodes, items, |i| delays(&mut rng, i)), None)
        }
        TopologyKind::Sequential { every } => {
            let lp = channels(&mut rng);
            let net = sequential_machine_with(every, None, &lp, |i| delays(&mut rng, i));
            (net, None)
        }
    };
    randomize_policies(&mut network, &mut rng);
    RandomTopology {
        kind,
        network,
        items,
    }
}

fn randomize_policies(net: &mut Network, rng: &mut ChaCha8Rng) {
    let gprms = net.gprms();
    for g in gprms {
        let apb = &mut net.apbs[g.apb.index()];
        let base = FlowPolicy::fixed(g.endpoints.iter().map(|e| {
            let n = net.links[e.link.index()].channels(e.role.send_direction()).len();
            (e.link, ChannelId(rng.random_range(0..n) as u16))
        }));
        let base = match &apb.policy {
            FlowPolicy::Burst { every, .. } => FlowPolicy::burst(*every, base),
            _ => base,
        };
        let multi: Vec<_> = g
            .endpoints
            .iter()
            .filter(|e| net.links[e.link.index()].channels(e.role.send_direction()).len() >= 2)
            .collect();
        apb.policy = match multi.choose(rng) {
            Some(e) if rng.random_bool(0.3) => {
                FlowPolicy::spread(e.link, (ChannelId(0), ChannelId(1)), rng.random_range(1..=u16::MAX), base)
                    .expect("nonzero seed")
            }
            _ => base,
        };
    }
}
