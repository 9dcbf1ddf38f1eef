use crate::model::{
    validate_topology, ApbId, ChannelId, Direction, Gprm, GprmId, LinkId, LinkKind, LinkRole,
    LinkState, ModelError, Network, Side, TokenLocation, Word,
};
use crate::policies::thermal::scale_delay;
use crate::policies::{thermal_step, Action, DecisionContext, FlowPolicy, PolicyError, ThermalModel};
use crate::Time;

use super::event::{Event, EventKind, EventQueue};
use super::trace::{ThermalSample, TokenMove, TokenPhase, Trace, Violation};

/// Thermal coupling: the device temperature is recomputed every `dt` from
/// the clock edges counted in the window, and every delay is scaled by it.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub model: ThermalModel,
    pub dt: Time,
    /// `(time, new r_th)` steps, e.g. a cooling-fan failure.
    pub failures: Vec<(Time, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    /// Added to the departure of every outgoing transition.
    pub gprm_overhead: Time,
    pub record_tokens: bool,
    pub record_registers: bool,
    pub environment: Option<Environment>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            gprm_overhead: Time::ZERO,
            record_tokens: true,
            record_registers: true,
            environment: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    /// Process every event with `time <= t`.
    Time(Time),
    /// Stop once this many events have been processed in total.
    Events(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Processed(Event),
    Quiescent,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid network: {0}")]
    Network(ModelError),
    #[error("t={time}: {source}")]
    Protocol { time: Time, source: ModelError },
    #[error("t={time}: stall decision at GPRM `{name}`: flow control kept every token")]
    StallDecision { time: Time, gprm: GprmId, name: String },
    #[error("t={time}: GPRM `{name}`: {source}")]
    Policy {
        time: Time,
        gprm: GprmId,
        name: String,
        source: PolicyError,
    },
}

#[derive(Debug, Clone, Copy)]
struct Payload {
    value: Word,
    valid_at: Time,
}

#[derive(Debug, Clone, Copy)]
struct Snapshot {
    value: Word,
    fresh: bool,
}

#[derive(Debug, Clone, Copy)]
struct GprmState {
    hold: bool,
    firings: u64,
}

#[derive(Debug, Clone)]
struct ThermalRuntime {
    model: ThermalModel,
    failures: Vec<(Time, f64)>,
    next_failure: usize,
    edges_at_last: u64,
}

/// Deterministic event kernel for one network.
#[derive(Debug, Clone)]
pub struct Simulator {
    net: Network,
    gprms: Vec<Gprm>,
    opts: SimOptions,
    clock: Time,
    queue: EventQueue,
    links: Vec<LinkState>,
    /// Data bundled with the in-flight forward transition of each link.
    payload: Vec<Option<Payload>>,
    /// Consumer-side input data of each communication link.
    snapshots: Vec<Snapshot>,
    gstate: Vec<GprmState>,
    registers: Vec<Word>,
    policies: Vec<FlowPolicy>,
    thermal: Option<ThermalRuntime>,
    total_edges: u64,
    events: u64,
    trace: Trace,
}

impl Simulator {
    /// All flip-flops at 0, every GPRM held low, one release per GPRM
    /// queued at t = 0.
    pub fn reset(network: Network, opts: SimOptions) -> Result<Self, SimError> {
        validate_topology(&network).map_err(SimError::Network)?;
        let gprms = network.gprms();
        let links: Vec<LinkState> = network.links.iter().map(LinkState::reset).collect();
        let snapshots = network
            .links
            .iter()
            .map(|l| {
                let producer = network.apb_of_gprm(l.endpoint_a).expect("validated");
                Snapshot {
                    value: producer.initial,
                    fresh: l.kind == LinkKind::Communication && l.xnor_side == Side::B,
                }
            })
            .collect();
        let mut queue = EventQueue::new();
        for g in &gprms {
            queue.push(Time::ZERO, EventKind::Release { gprm: g.id });
        }
        let thermal = opts.environment.as_ref().map(|env| {
            queue.push(env.dt, EventKind::EnvironmentStep { dt: env.dt });
            let mut failures = env.failures.clone();
            failures.sort_by_key(|f| f.0);
            ThermalRuntime {
                model: env.model,
                failures,
                next_failure: 0,
                edges_at_last: 0,
            }
        });
        Ok(Simulator {
            trace: Trace::new(gprms.len(), network.apbs.len()),
            gstate: vec![GprmState { hold: true, firings: 0 }; gprms.len()],
            registers: network.apbs.iter().map(|a| a.initial).collect(),
            policies: network.apbs.iter().map(|a| a.policy.clone()).collect(),
            payload: vec![None; network.links.len()],
            snapshots,
            links,
            gprms,
            queue,
            thermal,
            opts,
            net: network,
            clock: Time::ZERO,
            total_edges: 0,
            events: 0,
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn gprms(&self) -> &[Gprm] {
        &self.gprms
    }

    pub fn clock(&self) -> Time {
        self.clock
    }

    pub fn events_processed(&self) -> u64 {
        self.events
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    pub fn queue(&self) -> &EventQueue {
        &self.queue
    }

    pub fn link_state(&self, link: LinkId) -> &LinkState {
        &self.links[link.index()]
    }

    pub fn token_location(&self, link: LinkId) -> Result<TokenLocation, ModelError> {
        self.links[link.index()].token_location(self.net.link(link))
    }

    pub fn register(&self, apb: ApbId) -> Word {
        self.registers[apb.index()]
    }

    pub fn is_held(&self, gprm: GprmId) -> bool {
        self.gstate[gprm.index()].hold
    }

    pub fn temperature(&self) -> Option<f64> {
        self.thermal.as_ref().map(|t| t.model.t_device)
    }

    pub fn thermal_model(&self) -> Option<&ThermalModel> {
        self.thermal.as_ref().map(|t| &t.model)
    }

    /// Evaluates token location on every link; fails on double presence.
    pub fn check_all_links(&self) -> Result<(), SimError> {
        for link in &self.net.links {
            self.links[link.id.index()]
                .token_location(link)
                .map_err(|source| SimError::Protocol {
                    time: self.clock,
                    source,
                })?;
        }
        Ok(())
    }

    /// Pops and processes the earliest event, then fires every GPRM it
    /// made ready.
    pub fn step(&mut self) -> Result<Step, SimError> {
        let Some(ev) = self.queue.pop() else {
            return Ok(Step::Quiescent);
        };
        debug_assert!(ev.time >= self.clock);
        self.clock = ev.time;
        self.events += 1;
        match ev.kind {
            EventKind::ParityArrival {
                link,
                direction,
                channel,
                to,
            } => {
                self.arrive(link, direction, channel)?;
                self.settle(&[to])?;
            }
            EventKind::Release { gprm } => {
                self.gstate[gprm.index()].hold = false;
                self.settle(&[gprm])?;
            }
            EventKind::EnvironmentStep { dt } => self.environment_step(dt),
        }
        Ok(Step::Processed(ev))
    }

    /// Steps until the limit or quiescence. Can be called again with a
    /// larger limit to resume.
    pub fn run_until(&mut self, limit: Limit) -> Result<&Trace, SimError> {
        match limit {
            Limit::Time(t) => {
                while self.queue.peek().is_some_and(|e| e.time <= t) {
                    self.step()?;
                }
                self.trace.end = self.trace.end.max(t);
            }
            Limit::Events(n) => {
                while self.events < n {
                    if self.step()? == Step::Quiescent {
                        break;
                    }
                }
                self.trace.end = self.trace.end.max(self.clock);
            }
        }
        Ok(&self.trace)
    }

    fn protocol(&self, source: ModelError) -> SimError {
        SimError::Protocol {
            time: self.clock,
            source,
        }
    }

    fn name(&self, gprm: GprmId) -> String {
        self.net.apb(self.gprms[gprm.index()].apb).name.clone()
    }

    fn endpoint_side(role: LinkRole) -> Side {
        match role {
            LinkRole::Output | LinkRole::Loop => Side::A,
            LinkRole::Input => Side::B,
        }
    }

    /// First endpoint of `gprm` that does not show its token.
    fn missing_token(&self, gprm: GprmId) -> Result<Option<LinkId>, SimError> {
        for ep in &self.gprms[gprm.index()].endpoints {
            let link = self.net.link(ep.link);
            let held = self.links[ep.link.index()]
                .holds_token(link, Self::endpoint_side(ep.role))
                .map_err(|e| self.protocol(e))?;
            if !held {
                return Ok(Some(ep.link));
            }
        }
        Ok(None)
    }

    fn halted(&self, gprm: GprmId) -> bool {
        let apb = self.net.apb(self.gprms[gprm.index()].apb);
        apb.halt_after
            .is_some_and(|n| self.gstate[gprm.index()].firings >= n)
    }

    /// AND of all token-presence bits, forced low by reset hold or halt.
    pub fn is_ready(&self, gprm: GprmId) -> Result<bool, SimError> {
        if self.gstate[gprm.index()].hold || self.halted(gprm) {
            return Ok(false);
        }
        Ok(self.missing_token(gprm)?.is_none())
    }

    fn settle(&mut self, candidates: &[GprmId]) -> Result<(), SimError> {
        let mut ids = candidates.to_vec();
        ids.sort();
        ids.dedup();
        loop {
            let mut fired = false;
            for &g in &ids {
                if self.is_ready(g)? {
                    self.fire_gprm(g)?;
                    fired = true;
                }
            }
            if !fired {
                return Ok(());
            }
        }
    }

    fn delay_factor(&self) -> Option<f64> {
        self.thermal.as_ref().map(|t| t.model.delay_factor())
    }

    fn scaled(&self, d: Time) -> Time {
        match self.delay_factor() {
            Some(f) => scale_delay(d, f),
            None => d,
        }
    }

    /// Clock pulse: record the edge, update the register from pre-firing
    /// values, consult flow control with the same values and send the
    /// selected tokens.
    pub fn fire_gprm(&mut self, gprm: GprmId) -> Result<(), SimError> {
        if let Some(link) = self.missing_token(gprm)? {
            return Err(self.protocol(ModelError::TokenNotHeld { link }));
        }
        let now = self.clock;
        let g = gprm.index();
        let apb_id = self.gprms[g].apb;
        let endpoints = self.gprms[g].endpoints.clone();

        let inputs: Vec<Word> = endpoints
            .iter()
            .filter(|e| e.role == LinkRole::Input)
            .map(|e| self.snapshots[e.link.index()].value)
            .collect();
        let register = self.registers[apb_id.index()];

        let ctx = DecisionContext {
            endpoints: &endpoints,
            links: &self.net.links,
            register,
            inputs: &inputs,
            temperature: self.temperature(),
        };
        let actions = self.policies[apb_id.index()]
            .decide(&ctx)
            .map_err(|source| SimError::Policy {
                time: now,
                gprm,
                name: self.name(gprm),
                source,
            })?;
        if actions.iter().all(|a| *a == Action::Keep) {
            return Err(SimError::StallDecision {
                time: now,
                gprm,
                name: self.name(gprm),
            });
        }

        let apb = self.net.apb(apb_id);
        let next = apb.logic.eval(register, &inputs, apb.width);

        self.trace.edges[g].push(now);
        self.total_edges += 1;
        self.gstate[g].firings += 1;
        self.registers[apb_id.index()] = next;
        if self.opts.record_registers {
            self.trace.registers[apb_id.index()].push((now, next));
        }
        let mut fresh = false;
        let mut has_inputs = false;
        for ep in endpoints.iter().filter(|e| e.role == LinkRole::Input) {
            has_inputs = true;
            fresh |= std::mem::replace(&mut self.snapshots[ep.link.index()].fresh, false);
        }
        if fresh || !has_inputs {
            self.trace.items[apb_id.index()].push((now, next));
        }

        for (ep, action) in endpoints.iter().zip(actions) {
            let Action::Send(channel) = action else {
                continue;
            };
            self.send(gprm, ep.link, ep.role, channel, next)?;
        }
        Ok(())
    }

    fn send(
        &mut self,
        gprm: GprmId,
        link_id: LinkId,
        role: LinkRole,
        channel: ChannelId,
        value: Word,
    ) -> Result<(), SimError> {
        let now = self.clock;
        let link = self.net.link(link_id);
        let direction = role.send_direction();
        let nominal = link
            .channel(direction, channel)
            .map_err(|e| self.protocol(e))?
            .delay;
        let delay = self.scaled(nominal) + self.opts.gprm_overhead;
        let flight = self.links[link_id.index()]
            .toggle_channel_with_delay(link, direction, channel, now, delay)
            .map_err(|e| self.protocol(e))?;

        if role != LinkRole::Input {
            let apb = self.net.apb(self.gprms[gprm.index()].apb);
            let worst = apb.datapath.get(&link_id).copied().unwrap_or(Time::ZERO);
            self.payload[link_id.index()] = Some(Payload {
                value,
                valid_at: now + self.scaled(worst),
            });
        }
        let to = link.endpoint(link.receiver(direction));
        self.queue.push(
            flight.arrival,
            EventKind::ParityArrival {
                link: link_id,
                direction,
                channel,
                to,
            },
        );
        if self.opts.record_tokens {
            self.trace.tokens.push(TokenMove {
                time: now,
                link: link_id,
                phase: TokenPhase::Depart,
                direction,
                channel,
                from: gprm,
                to,
            });
        }
        Ok(())
    }

    fn arrive(
        &mut self,
        link_id: LinkId,
        direction: Direction,
        channel: ChannelId,
    ) -> Result<(), SimError> {
        let link = self.net.link(link_id);
        let flight = self.links[link_id.index()]
            .deliver(link)
            .map_err(|e| self.protocol(e))?;
        debug_assert_eq!((flight.direction, flight.channel), (direction, channel));
        if self.opts.record_tokens {
            self.trace.tokens.push(TokenMove {
                time: self.clock,
                link: link_id,
                phase: TokenPhase::Arrive,
                direction,
                channel,
                from: link.endpoint(link.sender(direction)),
                to: link.endpoint(link.receiver(direction)),
            });
        }
        if let Some(v) = self.check_bundling(link_id, direction, channel, self.clock) {
            self.trace.violations.push(v);
        }
        if let Some(p) = self.payload[link_id.index()].take() {
            if link.kind == LinkKind::Communication {
                self.snapshots[link_id.index()] = Snapshot {
                    value: p.value,
                    fresh: true,
                };
            }
        }
        Ok(())
    }

    /// Compares a data-carrying arrival against the time its bundled data
    /// becomes valid. Backward (request) transitions are never checked.
    pub fn check_bundling(
        &self,
        link: LinkId,
        direction: Direction,
        channel: ChannelId,
        arrival: Time,
    ) -> Option<Violation> {
        if direction == Direction::Backward {
            return None;
        }
        let p = self.payload[link.index()]?;
        if arrival >= p.valid_at {
            return None;
        }
        let l = self.net.link(link);
        Some(Violation {
            time: arrival,
            link,
            channel,
            consumer: l.endpoint(l.receiver(direction)),
            data_valid: p.valid_at,
            slack: arrival.signed_diff(p.valid_at),
        })
    }

    fn environment_step(&mut self, dt: Time) {
        let now = self.clock;
        let total = self.total_edges;
        let Some(rt) = self.thermal.as_mut() else {
            return;
        };
        while rt.next_failure < rt.failures.len() && rt.failures[rt.next_failure].0 <= now {
            rt.model.r_th = rt.failures[rt.next_failure].1;
            rt.next_failure += 1;
        }
        let edges = total - rt.edges_at_last;
        rt.edges_at_last = total;
        rt.model = thermal_step(&rt.model, edges, dt.as_secs_f64());
        self.trace.thermal.push(ThermalSample {
            time: now,
            temperature: rt.model.t_device,
            edges,
            r_th: rt.model.r_th,
        });
        self.queue.push(now + dt, EventKind::EnvironmentStep { dt });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{self, NetworkBuilder};
    use crate::model::LogicFunction;

    fn run(net: Network, limit: Limit) -> Trace {
        let mut sim = Simulator::reset(net, SimOptions::default()).unwrap();
        sim.run_until(limit).unwrap().clone()
    }

    #[test]
    fn empty_queue_is_quiescent() {
        let mut sim = Simulator::reset(builders::pipeline(1, Time(10), Time(10), Some(0)), SimOptions::default()).unwrap();
        while sim.step().unwrap() != Step::Quiescent {}
        assert_eq!(sim.step().unwrap(), Step::Quiescent);
        assert!(sim.trace().total_edges() == 0);
    }

    #[test]
    fn reset_holds_every_gprm_and_queues_releases() {
        let sim = Simulator::reset(builders::sequential_machine(Time(20_000), 3, 5), SimOptions::default()).unwrap();
        assert!(sim.gprms().iter().all(|g| sim.is_held(g.id)));
        assert_eq!(sim.queue().len(), 3);
        assert!(sim.queue().iter().all(|e| e.time == Time::ZERO && matches!(e.kind, EventKind::Release { .. })));
        // loop token starts at its own GPRM
        assert_eq!(sim.token_location(LinkId(2)).unwrap(), TokenLocation::AtA);
        let s = sim.link_state(LinkId(0));
        assert_eq!((s.ff_a.parity(), s.ff_b.parity()), (false, false));
    }

    #[test]
    fn oscillator_edges_every_loop_delay() {
        let t = run(builders::oscillator(Time(10_000)), Limit::Time(Time(100_000)));
        let expect: Vec<Time> = (0..=10).map(|k| Time(k * 10_000)).collect();
        assert_eq!(t.edges[0], expect);
        assert_eq!(t.end, Time(100_000));
    }

    #[test]
    fn overhead_lengthens_period() {
        let mut sim = Simulator::reset(
            builders::oscillator(Time(10_000)),
            SimOptions {
                gprm_overhead: Time(250),
                ..SimOptions::default()
            },
        )
        .unwrap();
        let t = sim.run_until(Limit::Time(Time(30_750))).unwrap();
        assert_eq!(t.edges[0], vec![Time(0), Time(10_250), Time(20_500), Time(30_750)]);
    }

    #[test]
    fn limit_zero_processes_only_releases() {
        let mut sim = Simulator::reset(builders::pipeline(2, Time(5000), Time(5000), None), SimOptions::default()).unwrap();
        sim.run_until(Limit::Time(Time::ZERO)).unwrap();
        // four releases, src fired and nothing else is due at t = 0
        assert_eq!(sim.events_processed(), 4);
        assert!(sim.queue().iter().all(|e| e.time > Time::ZERO));
    }

    #[test]
    fn run_is_resumable() {
        let mut sim = Simulator::reset(builders::oscillator(Time(7_000)), SimOptions::default()).unwrap();
        sim.run_until(Limit::Time(Time(20_000))).unwrap();
        sim.run_until(Limit::Time(Time(70_000))).unwrap();
        let whole = run(builders::oscillator(Time(7_000)), Limit::Time(Time(70_000)));
        assert_eq!(sim.trace(), &whole);
    }

    #[test]
    fn fifo_delivers_source_sequence() {
        let t = run(builders::pipeline(3, Time(5000), Time(3000), Some(100)), Limit::Time(Time::us(100)));
        let got: Vec<u64> = t.items[4].iter().map(|x| x.1).collect();
        let expect: Vec<u64> = (1..=100).collect();
        assert_eq!(got, expect);
        assert!(t.violations.is_empty());
    }

    #[test]
    fn pipeline_stage_sends_forward_and_backward() {
        let net = builders::pipeline(1, Time(5000), Time(3000), Some(1));
        let mut sim = Simulator::reset(net, SimOptions::default()).unwrap();
        sim.run_until(Limit::Time(Time(5000))).unwrap();
        // s1 fired at 5000: request back to src and item on to snk
        let departs: Vec<_> = sim
            .trace()
            .tokens
            .iter()
            .filter(|m| m.phase == TokenPhase::Depart && m.time == Time(5000))
            .map(|m| (m.link, m.direction))
            .collect();
        assert_eq!(departs, vec![(LinkId(0), Direction::Backward), (LinkId(1), Direction::Forward)]);
        let pending: Vec<_> = sim.queue().iter().map(|e| e.time).collect();
        assert!(pending.contains(&Time(8000)) && pending.contains(&Time(10_000)));
    }

    #[test]
    fn sequential_machine_bursts_on_its_loop() {
        let net = builders::sequential_machine(Time(20_000), 3, 2);
        let t = run(net, Limit::Time(Time::us(1)));
        // seq: input arrives at 5000, then loop cycles at 20 ns
        assert_eq!(&t.edges[1][..3], &[Time(5000), Time(25_000), Time(45_000)]);
        // accumulates item 1 three times before passing it on
        assert_eq!(t.items[2][0].1, 3);
    }

    #[test]
    fn all_keep_is_a_stall_decision() {
        let mut b = NetworkBuilder::new();
        let src = b.apb("src", LogicFunction::CounterSource);
        let seq = b.apb("seq", LogicFunction::Accumulator);
        let snk = b.apb("snk", LogicFunction::RecordingSink);
        let l0 = b.communication("in", src, seq, &[Time(5000)], &[Time(1000)]);
        let l1 = b.communication("out", seq, snk, &[Time(5000)], &[Time(1000)]);
        b.datapath(src, l0, Time(100));
        b.datapath(seq, l1, Time(100));
        b.policy(seq, FlowPolicy::burst(3, FlowPolicy::default()));
        let mut sim = Simulator::reset(b.build(), SimOptions::default()).unwrap();
        let err = sim.run_until(Limit::Time(Time::us(1))).unwrap_err();
        assert_eq!(
            err,
            SimError::StallDecision {
                time: Time(5000),
                gprm: GprmId(1),
                name: "seq".into()
            }
        );
    }

    #[test]
    fn fire_without_tokens_is_rejected() {
        let mut sim = Simulator::reset(builders::pipeline(1, Time(5000), Time(3000), None), SimOptions::default()).unwrap();
        let err = sim.fire_gprm(GprmId(2)).unwrap_err();
        assert!(matches!(
            err,
            SimError::Protocol {
                source: ModelError::TokenNotHeld { .. },
                ..
            }
        ));
    }

    fn two_stage(fwd: u64, worst: u64) -> Network {
        let mut b = NetworkBuilder::new();
        let src = b.apb("src", LogicFunction::CounterSource);
        let snk = b.apb("snk", LogicFunction::RecordingSink);
        let l = b.communication("l", src, snk, &[Time(fwd)], &[Time(1000)]);
        b.datapath(src, l, Time(worst));
        b.halt_after(src, 3);
        b.build()
    }

    #[test]
    fn short_channel_records_negative_slack() {
        let t = run(two_stage(3000, 4000), Limit::Time(Time::us(1)));
        assert_eq!(t.violations.len(), 3);
        let v = t.violations[0];
        assert_eq!((v.time, v.data_valid, v.slack), (Time(3000), Time(4000), -1000));
        assert_eq!(v.consumer, GprmId(1));
    }

    #[test]
    fn sufficient_channel_records_nothing() {
        let t = run(two_stage(5000, 4000), Limit::Time(Time::us(1)));
        assert!(t.violations.is_empty());
        assert_eq!(t.items[1].len(), 3);
    }

    #[test]
    fn backward_transitions_are_not_checked() {
        let mut sim = Simulator::reset(two_stage(5000, 4000), SimOptions::default()).unwrap();
        sim.run_until(Limit::Time(Time(5000))).unwrap();
        assert_eq!(sim.check_bundling(LinkId(0), Direction::Backward, ChannelId(0), Time(5000)), None);
    }

    #[test]
    fn event_limit_counts_all_events() {
        let mut sim = Simulator::reset(builders::oscillator(Time(1000)), SimOptions::default()).unwrap();
        sim.run_until(Limit::Events(11)).unwrap();
        assert_eq!(sim.events_processed(), 11);
        // release + 10 loop arrivals
        assert_eq!(sim.trace().edges[0].len(), 11);
        assert_eq!(sim.trace().end, Time(10_000));
    }

    #[test]
    fn identical_runs_give_identical_traces() {
        let net = builders::dithered_oscillator(Time(9000), Time(11_000), Time(10_000), 0xACE1);
        let a = run(net.clone(), Limit::Time(Time::us(50)));
        let b = run(net, Limit::Time(Time::us(50)));
        assert_eq!(a, b);
    }

    #[test]
    fn thermal_coupling_slows_a_hot_oscillator() {
        let model = ThermalModel {
            t_ambient: 25.0,
            t_device: 75.0,
            r_th: 10.0,
            c_th: 1.0,
            p_static: 0.0,
            p_per_edge: 0.0,
            delay_coeff: 0.002,
            t_ref: 25.0,
        };
        let opts = SimOptions {
            environment: Some(Environment {
                model,
                dt: Time::us(1),
                failures: vec![],
            }),
            ..SimOptions::default()
        };
        let mut sim = Simulator::reset(builders::oscillator(Time(10_000)), opts).unwrap();
        sim.run_until(Limit::Time(Time(22_000))).unwrap();
        // 75 °C: factor 1.1
        assert_eq!(sim.trace().edges[0], vec![Time(0), Time(11_000), Time(22_000)]);
    }

    #[test]
    fn failure_step_changes_resistance() {
        let model = ThermalModel {
            t_ambient: 25.0,
            t_device: 25.0,
            r_th: 10.0,
            c_th: 1.0,
            p_static: 0.0,
            p_per_edge: 0.0,
            delay_coeff: 0.0,
            t_ref: 25.0,
        };
        let opts = SimOptions {
            environment: Some(Environment {
                model,
                dt: Time(1000),
                failures: vec![(Time(3000), 20.0)],
            }),
            ..SimOptions::default()
        };
        let mut sim = Simulator::reset(builders::oscillator(Time(10_000)), opts).unwrap();
        sim.run_until(Limit::Time(Time(5000))).unwrap();
        let r: Vec<f64> = sim.trace().thermal.iter().map(|s| s.r_th).collect();
        assert_eq!(r, vec![10.0, 10.0, 20.0, 20.0, 20.0]);
        assert_eq!(sim.trace().thermal[0].edges, 1);
    }
}
