use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::lfsr::Lfsr;
use super::PolicyError;
use crate::model::{ChannelId, Endpoint, Link, LinkId, LinkKind, LinkRole, Word};

/// What an endpoint does with its token at a firing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Send(ChannelId),
    Keep,
}

/// Arguments seen by the flow-control logic: the same pre-firing values the
/// logic function receives, plus the temperature sensor reading when an
/// environment model is active.
#[derive(Debug, Clone, Copy)]
pub struct DecisionContext<'a> {
    pub endpoints: &'a [Endpoint],
    pub links: &'a [Link],
    pub register: Word,
    pub inputs: &'a [Word],
    pub temperature: Option<f64>,
}

type DecideFn = dyn Fn(&DecisionContext<'_>) -> Vec<Action> + Send + Sync;

/// A user-supplied pure decision function returning one action per
/// endpoint, in endpoint order.
#[derive(Clone)]
pub struct CustomPolicy {
    pub decide: Arc<DecideFn>,
    /// Declares that the function may keep every communication token.
    pub retains_tokens: bool,
}

impl CustomPolicy {
    pub fn new(
        retains_tokens: bool,
        f: impl Fn(&DecisionContext<'_>) -> Vec<Action> + Send + Sync + 'static,
    ) -> Self {
        CustomPolicy {
            decide: Arc::new(f),
            retains_tokens,
        }
    }
}

impl fmt::Debug for CustomPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPolicy")
            .field("retains_tokens", &self.retains_tokens)
            .finish_non_exhaustive()
    }
}

impl PartialEq for CustomPolicy {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.decide, &other.decide) && self.retains_tokens == other.retains_tokens
    }
}

/// Temperature sensor with optional additive Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensor {
    pub noise_sd: f64,
    pub seed: u64,
    rng: ChaCha8Rng,
}

impl Sensor {
    pub fn new(noise_sd: f64, seed: u64) -> Self {
        Sensor {
            noise_sd,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn read(&mut self, t: f64) -> f64 {
        if self.noise_sd > 0.0 {
            let n = Normal::new(0.0, self.noise_sd).expect("finite noise");
            t + n.sample(&mut self.rng)
        } else {
            t
        }
    }
}

/// Flow-control logic of one APB.
#[derive(Debug, Clone, PartialEq)]
pub enum FlowPolicy {
    /// Send every token, each on a fixed channel (channel 0 when unlisted).
    FixedForward { channels: BTreeMap<LinkId, ChannelId> },
    /// Pick between two channels of `endpoint` from the PN sequence.
    /// `reference` is the channel used by the undithered variant.
    SpreadSpectrum {
        endpoint: LinkId,
        pair: (ChannelId, ChannelId),
        reference: ChannelId,
        lfsr: Lfsr,
        base: Box<FlowPolicy>,
    },
    /// Pick the channel of `endpoint` from a temperature threshold table:
    /// the entry with the highest threshold not above the sensed value wins.
    Adaptive {
        endpoint: LinkId,
        thresholds: Vec<(f64, ChannelId)>,
        sensor: Box<Sensor>,
        base: Box<FlowPolicy>,
    },
    /// Sequential operation: communication tokens leave only on every
    /// `every`-th firing, loop tokens on every firing.
    Burst {
        every: u32,
        fired: u64,
        base: Box<FlowPolicy>,
    },
    Custom(CustomPolicy),
}

impl Default for FlowPolicy {
    fn default() -> Self {
        FlowPolicy::FixedForward {
            channels: BTreeMap::new(),
        }
    }
}

impl FlowPolicy {
    pub fn fixed(channels: impl IntoIterator<Item = (LinkId, ChannelId)>) -> Self {
        FlowPolicy::FixedForward {
            channels: channels.into_iter().collect(),
        }
    }

    pub fn spread(
        endpoint: LinkId,
        pair: (ChannelId, ChannelId),
        seed: u16,
        base: FlowPolicy,
    ) -> Result<Self, PolicyError> {
        Ok(FlowPolicy::SpreadSpectrum {
            endpoint,
            pair,
            reference: pair.0,
            lfsr: Lfsr::new(seed)?,
            base: Box::new(base),
        })
    }

    pub fn adaptive(
        endpoint: LinkId,
        mut thresholds: Vec<(f64, ChannelId)>,
        sensor: Sensor,
        base: FlowPolicy,
    ) -> Self {
        thresholds.sort_by(|a, b| a.0.total_cmp(&b.0));
        FlowPolicy::Adaptive {
            endpoint,
            thresholds,
            sensor: Box::new(sensor),
            base: Box::new(base),
        }
    }

    pub fn burst(every: u32, base: FlowPolicy) -> Self {
        FlowPolicy::Burst {
            every,
            fired: 0,
            base: Box::new(base),
        }
    }

    /// One decision per endpoint of the owning GPRM, in endpoint order.
    /// Advances the policy state (PN register, sensor noise, burst counter).
    pub fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Vec<Action>, PolicyError> {
        let actions = self.decide_raw(ctx)?;
        if actions.len() != ctx.endpoints.len() {
            return Err(PolicyError::BadDecision {
                expected: ctx.endpoints.len(),
                got: actions.len(),
            });
        }
        for (ep, act) in ctx.endpoints.iter().zip(&actions) {
            if let Action::Send(ch) = act {
                check_channel(ctx.links, *ep, *ch)?;
            }
        }
        Ok(actions)
    }

    fn decide_raw(&mut self, ctx: &DecisionContext<'_>) -> Result<Vec<Action>, PolicyError> {
        match self {
            FlowPolicy::FixedForward { channels } => Ok(ctx
                .endpoints
                .iter()
                .map(|ep| Action::Send(channels.get(&ep.link).copied().unwrap_or_default()))
                .collect()),
            FlowPolicy::SpreadSpectrum {
                endpoint,
                pair,
                lfsr,
                base,
                ..
            } => {
                let mut actions = base.decide_raw(ctx)?;
                let bit = lfsr.next_bit()?;
                let idx = position(ctx, *endpoint)?;
                if let Action::Send(_) = actions[idx] {
                    actions[idx] = Action::Send(if bit { pair.1 } else { pair.0 });
                }
                Ok(actions)
            }
            FlowPolicy::Adaptive {
                endpoint,
                thresholds,
                sensor,
                base,
            } => {
                let mut actions = base.decide_raw(ctx)?;
                let idx = position(ctx, *endpoint)?;
                if let Some(t) = ctx.temperature {
                    let sensed = sensor.read(t);
                    let pick = thresholds.iter().rev().find(|(above, _)| sensed >= *above);
                    if let (Some((_, ch)), Action::Send(_)) = (pick, actions[idx]) {
                        actions[idx] = Action::Send(*ch);
                    }
                }
                Ok(actions)
            }
            FlowPolicy::Burst { every, fired, base } => {
                let mut actions = base.decide_raw(ctx)?;
                *fired += 1;
                if *fired % u64::from((*every).max(1)) != 0 {
                    for (ep, act) in ctx.endpoints.iter().zip(actions.iter_mut()) {
                        if ep.role != LinkRole::Loop {
                            *act = Action::Keep;
                        }
                    }
                }
                Ok(actions)
            }
            FlowPolicy::Custom(c) => Ok((c.decide)(ctx)),
        }
    }

    /// Static check that every referenced endpoint and channel exists.
    pub fn check(&self, endpoints: &[Endpoint], links: &[Link]) -> Result<(), PolicyError> {
        let find = |link: LinkId| {
            endpoints
                .iter()
                .find(|e| e.link == link)
                .copied()
                .ok_or(PolicyError::UnknownEndpoint { link })
        };
        match self {
            FlowPolicy::FixedForward { channels } => {
                for (&link, &ch) in channels {
                    check_channel(links, find(link)?, ch)?;
                }
                Ok(())
            }
            FlowPolicy::SpreadSpectrum {
                endpoint,
                pair,
                reference,
                base,
                ..
            } => {
                let ep = find(*endpoint)?;
                for ch in [pair.0, pair.1, *reference] {
                    check_channel(links, ep, ch)?;
                }
                base.check(endpoints, links)
            }
            FlowPolicy::Adaptive {
                endpoint,
                thresholds,
                base,
                ..
            } => {
                let ep = find(*endpoint)?;
                for (_, ch) in thresholds {
                    check_channel(links, ep, *ch)?;
                }
                base.check(endpoints, links)
            }
            FlowPolicy::Burst { every, base, .. } => {
                if *every == 0 {
                    return Err(PolicyError::InvalidBurst);
                }
                base.check(endpoints, links)
            }
            FlowPolicy::Custom(_) => Ok(()),
        }
    }

    /// Whether some firing may keep every communication token.
    pub fn may_retain_all_communication(&self) -> bool {
        match self {
            FlowPolicy::FixedForward { .. } => false,
            FlowPolicy::SpreadSpectrum { base, .. } | FlowPolicy::Adaptive { base, .. } => {
                base.may_retain_all_communication()
            }
            FlowPolicy::Burst { every, base, .. } => *every > 1 || base.may_retain_all_communication(),
            FlowPolicy::Custom(c) => c.retains_tokens,
        }
    }

    pub fn has_spread(&self) -> bool {
        match self {
            FlowPolicy::SpreadSpectrum { .. } => true,
            FlowPolicy::Adaptive { base, .. } | FlowPolicy::Burst { base, .. } => base.has_spread(),
            FlowPolicy::FixedForward { .. } | FlowPolicy::Custom(_) => false,
        }
    }

    /// The same policy with dithering replaced by the reference channel.
    pub fn without_dithering(&self) -> FlowPolicy {
        match self {
            FlowPolicy::SpreadSpectrum {
                endpoint,
                reference,
                base,
                ..
            } => base.without_dithering().pinned(*endpoint, *reference),
            FlowPolicy::Adaptive {
                endpoint,
                thresholds,
                sensor,
                base,
            } => FlowPolicy::Adaptive {
                endpoint: *endpoint,
                thresholds: thresholds.clone(),
                sensor: sensor.clone(),
                base: Box::new(base.without_dithering()),
            },
            FlowPolicy::Burst { every, fired, base } => FlowPolicy::Burst {
                every: *every,
                fired: *fired,
                base: Box::new(base.without_dithering()),
            },
            other => other.clone(),
        }
    }

    fn pinned(self, endpoint: LinkId, ch: ChannelId) -> FlowPolicy {
        match self {
            FlowPolicy::FixedForward { mut channels } => {
                channels.insert(endpoint, ch);
                FlowPolicy::FixedForward { channels }
            }
            FlowPolicy::Burst { every, fired, base } => FlowPolicy::Burst {
                every,
                fired,
                base: Box::new(base.pinned(endpoint, ch)),
            },
            FlowPolicy::Adaptive {
                endpoint: e,
                thresholds,
                sensor,
                base,
            } => FlowPolicy::Adaptive {
                endpoint: e,
                thresholds,
                sensor,
                base: Box::new(base.pinned(endpoint, ch)),
            },
            other => other,
        }
    }
}

fn position(ctx: &DecisionContext<'_>, link: LinkId) -> Result<usize, PolicyError> {
    ctx.endpoints
        .iter()
        .position(|e| e.link == link)
        .ok_or(PolicyError::UnknownEndpoint { link })
}

fn check_channel(links: &[Link], ep: Endpoint, ch: ChannelId) -> Result<(), PolicyError> {
    let link = links
        .get(ep.link.index())
        .ok_or(PolicyError::UnknownEndpoint { link: ep.link })?;
    let dir = ep.role.send_direction();
    let exists = match (link.kind, ep.role) {
        (LinkKind::ClosedLoop, LinkRole::Input) => false,
        _ => ch.index() < link.channels(dir).len(),
    };
    if exists {
        Ok(())
    } else {
        Err(PolicyError::UnknownChannel {
            link: ep.link,
            channel: ch,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GprmId;
    use crate::Time;

    fn stage() -> (Vec<Link>, Vec<Endpoint>) {
        let links = vec![
            Link::communication(LinkId(0), "in", GprmId(0), GprmId(1), &[Time(5000)], &[Time(2000)]),
            Link::communication(
                LinkId(1),
                "out",
                GprmId(1),
                GprmId(2),
                &[Time(9000), Time(11_000)],
                &[Time(2000)],
            ),
        ];
        let eps = vec![
            Endpoint {
                link: LinkId(0),
                role: LinkRole::Input,
            },
            Endpoint {
                link: LinkId(1),
                role: LinkRole::Output,
            },
        ];
        (links, eps)
    }

    fn ctx<'a>(links: &'a [Link], eps: &'a [Endpoint], t: Option<f64>) -> DecisionContext<'a> {
        DecisionContext {
            endpoints: eps,
            links,
            register: 0,
            inputs: &[],
            temperature: t,
        }
    }

    #[test]
    fn fixed_forward_sends_everything_on_channel_zero() {
        let (links, eps) = stage();
        let mut p = FlowPolicy::default();
        let a = p.decide(&ctx(&links, &eps, None)).unwrap();
        assert_eq!(a, vec![Action::Send(ChannelId(0)), Action::Send(ChannelId(0))]);
    }

    #[test]
    fn spread_follows_pn_bits() {
        let (links, eps) = stage();
        let mut p =
            FlowPolicy::spread(LinkId(1), (ChannelId(0), ChannelId(1)), 1, FlowPolicy::default())
                .unwrap();
        let mut reference = Lfsr::new(1).unwrap();
        for _ in 0..64 {
            let bit = reference.next_bit().unwrap();
            let a = p.decide(&ctx(&links, &eps, None)).unwrap();
            let want = if bit { ChannelId(1) } else { ChannelId(0) };
            assert_eq!(a[1], Action::Send(want));
            assert_eq!(a[0], Action::Send(ChannelId(0)));
        }
    }

    #[test]
    fn adaptive_picks_slow_channel_when_hot() {
        let (links, eps) = stage();
        let mut p = FlowPolicy::adaptive(
            LinkId(1),
            vec![(80.0, ChannelId(1))],
            Sensor::new(0.0, 0),
            FlowPolicy::default(),
        );
        assert_eq!(p.decide(&ctx(&links, &eps, Some(85.0))).unwrap()[1], Action::Send(ChannelId(1)));
        assert_eq!(p.decide(&ctx(&links, &eps, Some(60.0))).unwrap()[1], Action::Send(ChannelId(0)));
    }

    #[test]
    fn unknown_channel_is_reported() {
        let (links, eps) = stage();
        let mut p = FlowPolicy::fixed([(LinkId(0), ChannelId(4))]);
        assert_eq!(
            p.decide(&ctx(&links, &eps, None)),
            Err(PolicyError::UnknownChannel {
                link: LinkId(0),
                channel: ChannelId(4)
            })
        );
        assert!(p.check(&eps, &links).is_err());
    }

    #[test]
    fn burst_keeps_communication_tokens_between_sends() {
        let mut links = stage().0;
        links.push(Link::closed_loop(LinkId(2), "loop", GprmId(1), &[Time(3000)]));
        let eps = vec![
            Endpoint {
                link: LinkId(0),
                role: LinkRole::Input,
            },
            Endpoint {
                link: LinkId(2),
                role: LinkRole::Loop,
            },
        ];
        let mut p = FlowPolicy::burst(3, FlowPolicy::default());
        let keep = vec![Action::Keep, Action::Send(ChannelId(0))];
        let all = vec![Action::Send(ChannelId(0)); 2];
        let got: Vec<_> = (0..6).map(|_| p.decide(&ctx(&links, &eps, None)).unwrap()).collect();
        assert_eq!(got, vec![keep.clone(), keep.clone(), all.clone(), keep.clone(), keep, all]);
        assert!(p.may_retain_all_communication());
    }

    #[test]
    fn replay_is_deterministic() {
        let (links, eps) = stage();
        let p = FlowPolicy::adaptive(
            LinkId(1),
            vec![(50.0, ChannelId(1))],
            Sensor::new(5.0, 42),
            FlowPolicy::spread(LinkId(1), (ChannelId(0), ChannelId(1)), 0xACE1, FlowPolicy::default())
                .unwrap(),
        );
        let run = |mut p: FlowPolicy| -> Vec<Vec<Action>> {
            (0..100)
                .map(|i| p.decide(&ctx(&links, &eps, Some(40.0 + i as f64 * 0.2))).unwrap())
                .collect()
        };
        assert_eq!(run(p.clone()), run(p));
    }

    #[test]
    fn without_dithering_pins_reference() {
        let (links, eps) = stage();
        let mut p = FlowPolicy::spread(LinkId(1), (ChannelId(0), ChannelId(1)), 7, FlowPolicy::default())
            .unwrap();
        if let FlowPolicy::SpreadSpectrum { reference, .. } = &mut p {
            *reference = ChannelId(1);
        }
        let mut fixed = p.without_dithering();
        assert!(!fixed.has_spread());
        for _ in 0..10 {
            assert_eq!(fixed.decide(&ctx(&links, &eps, None)).unwrap()[1], Action::Send(ChannelId(1)));
        }
    }
}
