//! TOML topology documents: `[sim]`, `[environment]`, `[[apb]]` and
//! `[[link]]` sections. See `docs/config.md` for the grammar.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use toml::Spanned;

use crate::model::{
    validate_topology, Apb, ApbId, ChannelId, Link, LinkId, LinkKind, LogicFunction, Network, Side,
};
use crate::policies::{FlowPolicy, Lfsr, Sensor, ThermalModel};
use crate::sim::{Environment, Limit, SimOptions};
use crate::Time;

/// Parse or semantic error, addressed by line/column when the offending
/// text is known and by field path otherwise.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, "line {l}, column {c}: ")?;
        }
        if !self.field.is_empty() {
            write!(f, "{}: ", self.field)?;
        }
        f.write_str(&self.message)
    }
}

impl ConfigError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            column: None,
            field: field.into(),
            message: message.into(),
        }
    }
}

impl FromStr for Limit {
    type Err = String;

    /// `250us`, `100000` (ps) or `5000ev` (event count).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if let Some(n) = t.strip_suffix("ev") {
            return n
                .parse()
                .map(Limit::Events)
                .map_err(|_| format!("invalid event count `{s}`"));
        }
        t.parse().map(Limit::Time).map_err(|e| e.to_string())
    }
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Limit::Time(t) => f.write_str(&t.to_unit_string()),
            Limit::Events(n) => write!(f, "{n}ev"),
        }
    }
}

impl Serialize for Limit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Limit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

fn is_zero_time(t: &Time) -> bool {
    *t == Time::ZERO
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Seeds PN generators and sensors that do not set their own seed.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until: Option<Limit>,
    #[serde(default, skip_serializing_if = "is_zero_time")]
    pub gprm_overhead: Time,
    /// Throughput window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Time>,
    /// APB whose items the throughput series counts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sink: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum_bin: Option<Time>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nfft: Option<usize>,
    /// Peak-reduction band in Hz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<[f64; 2]>,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub record_tokens: bool,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub record_registers: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            until: None,
            gprm_overhead: Time::ZERO,
            window: None,
            sink: None,
            spectrum_bin: None,
            nfft: None,
            band: None,
            record_tokens: true,
            record_registers: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureConfig {
    pub at: Time,
    pub r_th: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub t_ambient: f64,
    /// Defaults to `t_ambient`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_device: Option<f64>,
    pub r_th: f64,
    pub c_th: f64,
    pub p_static: f64,
    pub p_per_edge: f64,
    pub delay_coeff: f64,
    /// Defaults to `t_ambient`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_ref: Option<f64>,
    /// Thermal update interval; defaults to 1 ms.
    #[serde(default = "default_dt")]
    pub dt: Time,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<FailureConfig>,
}

fn default_dt() -> Time {
    Time::us(1_000)
}

impl EnvironmentConfig {
    pub fn model(&self) -> ThermalModel {
        ThermalModel {
            t_ambient: self.t_ambient,
            t_device: self.t_device.unwrap_or(self.t_ambient),
            r_th: self.r_th,
            c_th: self.c_th,
            p_static: self.p_static,
            p_per_edge: self.p_per_edge,
            delay_coeff: self.delay_coeff,
            t_ref: self.t_ref.unwrap_or(self.t_ambient),
        }
    }

    pub fn environment(&self) -> Environment {
        Environment {
            model: self.model(),
            dt: self.dt,
            failures: self.failures.iter().map(|f| (f.at, f.r_th)).collect(),
        }
    }

    fn check(&self) -> Result<(), ConfigError> {
        let positive = [("r_th", self.r_th), ("c_th", self.c_th)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::field(format!("environment.{name}"), "must be positive"));
            }
        }
        if self.dt == Time::ZERO {
            return Err(ConfigError::field("environment.dt", "must be positive"));
        }
        for (i, f) in self.failures.iter().enumerate() {
            if !(f.r_th > 0.0 && f.r_th.is_finite()) {
                return Err(ConfigError::field(
                    format!("environment.failures[{i}].r_th"),
                    "must be positive",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogicKind {
    CounterSource,
    RecordingSink,
    Passthrough,
    Accumulator,
    CustomTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicyConfig {
    /// Channel per endpoint link name; unlisted endpoints use channel 0.
    Fixed {
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        channels: BTreeMap<String, u16>,
    },
    Spread {
        endpoint: String,
        pair: [u16; 2],
        /// Channel of the undithered variant; defaults to `pair[0]`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference: Option<u16>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u16>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        taps: Option<Vec<u8>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<Box<PolicyConfig>>,
    },
    Adaptive {
        endpoint: String,
        /// `[threshold °C, channel]` pairs.
        thresholds: Vec<(f64, u16)>,
        #[serde(default)]
        noise_sd: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<Box<PolicyConfig>>,
    },
    Burst {
        every: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<Box<PolicyConfig>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApbConfig {
    pub name: Spanned<String>,
    pub logic: LogicKind,
    #[serde(default = "default_width")]
    pub width: u8,
    #[serde(default)]
    pub initial: u64,
    /// Truth table for `custom-table`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halt_after: Option<u64>,
    /// Worst-case datapath delay per output or loop link name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub datapath: BTreeMap<String, Time>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyConfig>,
}

fn default_width() -> u8 {
    32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XnorSide {
    /// Token starts with the producer: the link starts empty.
    #[default]
    Producer,
    /// Token starts with the consumer: the link starts holding one item.
    Consumer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub name: Spanned<String>,
    pub kind: LinkKind,
    /// Producer, or the owning APB of a closed loop.
    pub from: Spanned<String>,
    /// Consumer; absent for closed loops.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<Spanned<String>>,
    pub forward: Vec<Time>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub backward: Vec<Time>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xnor: Option<XnorSide>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<EnvironmentConfig>,
    #[serde(default, rename = "apb")]
    pub apbs: Vec<ApbConfig>,
    #[serde(default, rename = "link")]
    pub links: Vec<LinkConfig>,
    #[serde(skip)]
    source: Option<String>,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

impl TopologyConfig {
    pub fn parse(src: &str) -> Result<Self, ConfigError> {
        let mut cfg: TopologyConfig = toml::from_str(src).map_err(|e| {
            let (line, column) = match e.span() {
                Some(s) => {
                    let (l, c) = line_col(src, s.start);
                    (Some(l), Some(c))
                }
                None => (None, None),
            };
            ConfigError {
                line,
                column,
                field: String::new(),
                message: e.message().trim().to_owned(),
            }
        })?;
        cfg.source = Some(src.to_owned());
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::field("", format!("cannot read: {e}")))?;
        Self::parse(&src)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.sim.seed = seed;
        self
    }

    fn at(&self, span: Range<usize>, field: String, message: String) -> ConfigError {
        let (line, column) = match &self.source {
            Some(src) => {
                let (l, c) = line_col(src, span.start);
                (Some(l), Some(c))
            }
            None => (None, None),
        };
        ConfigError {
            line,
            column,
            field,
            message,
        }
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            gprm_overhead: self.sim.gprm_overhead,
            record_tokens: self.sim.record_tokens,
            record_registers: self.sim.record_registers,
            environment: self.environment.as_ref().map(EnvironmentConfig::environment),
        }
    }

    /// Builds the network and checks it with `validate_topology`.
    pub fn build(&self) -> Result<Network, ConfigError> {
        if let Some(env) = &self.environment {
            env.check()?;
        }
        let mut apb_ids: HashMap<&str, ApbId> = HashMap::new();
        let mut apbs = Vec::new();
        for (i, a) in self.apbs.iter().enumerate() {
            let name = a.name.get_ref().as_str();
            if apb_ids.insert(name, ApbId(i as u32)).is_some() {
                return Err(self.at(
                    a.name.span(),
                    format!("apb[{i}].name"),
                    format!("duplicate APB name `{name}`"),
                ));
            }
            let logic = match (a.logic, &a.table) {
                (LogicKind::CustomTable, Some(t)) => LogicFunction::Table(t.clone()),
                (LogicKind::CustomTable, None) => {
                    return Err(ConfigError::field(format!("apb[{i}].table"), "custom-table needs a table"))
                }
                (_, Some(_)) => {
                    return Err(ConfigError::field(
                        format!("apb[{i}].table"),
                        "only custom-table takes a table",
                    ))
                }
                (LogicKind::CounterSource, None) => LogicFunction::CounterSource,
                (LogicKind::RecordingSink, None) => LogicFunction::RecordingSink,
                (LogicKind::Passthrough, None) => LogicFunction::Passthrough,
                (LogicKind::Accumulator, None) => LogicFunction::Accumulator,
            };
            let mut apb = Apb::new(ApbId(i as u32), name, logic);
            apb.width = a.width;
            apb.initial = a.initial;
            apb.halt_after = a.halt_after;
            apbs.push(apb);
        }

        let lookup_apb = |s: &Spanned<String>, field: String| {
            apb_ids
                .get(s.get_ref().as_str())
                .copied()
                .ok_or_else(|| self.at(s.span(), field, format!("unknown APB `{}`", s.get_ref())))
        };
        let mut link_ids: HashMap<&str, LinkId> = HashMap::new();
        let mut links = Vec::new();
        for (i, l) in self.links.iter().enumerate() {
            let id = LinkId(i as u32);
            let name = l.name.get_ref().as_str();
            if link_ids.insert(name, id).is_some() {
                return Err(self.at(
                    l.name.span(),
                    format!("link[{i}].name"),
                    format!("duplicate link name `{name}`"),
                ));
            }
            let from = lookup_apb(&l.from, format!("link[{i}].from"))?;
            let link = match l.kind {
                LinkKind::Communication => {
                    let to = l.to.as_ref().ok_or_else(|| {
                        ConfigError::field(format!("link[{i}].to"), "communication link needs a consumer")
                    })?;
                    let to = lookup_apb(to, format!("link[{i}].to"))?;
                    let mut link = Link::communication(
                        id,
                        name,
                        apbs[from.index()].gprm,
                        apbs[to.index()].gprm,
                        &l.forward,
                        &l.backward,
                    );
                    if l.xnor == Some(XnorSide::Consumer) {
                        link.xnor_side = Side::B;
                    }
                    link
                }
                LinkKind::ClosedLoop => {
                    if let Some(to) = &l.to {
                        return Err(self.at(
                            to.span(),
                            format!("link[{i}].to"),
                            "closed loop has no consumer".into(),
                        ));
                    }
                    if !l.backward.is_empty() || l.xnor.is_some() {
                        return Err(ConfigError::field(
                            format!("link[{i}]"),
                            "closed loop takes neither backward channels nor xnor",
                        ));
                    }
                    Link::closed_loop(id, name, apbs[from.index()].gprm, &l.forward)
                }
            };
            links.push(link);
        }

        for (i, a) in self.apbs.iter().enumerate() {
            for (lname, t) in &a.datapath {
                let l = link_ids.get(lname.as_str()).ok_or_else(|| {
                    ConfigError::field(format!("apb[{i}].datapath.{lname}"), format!("unknown link `{lname}`"))
                })?;
                apbs[i].datapath.insert(*l, *t);
            }
            if let Some(p) = &a.policy {
                let field = format!("apb[{i}].policy");
                apbs[i].policy = self.policy(p, &link_ids, &field)?;
            }
        }

        let net = Network::new(apbs, links);
        validate_topology(&net).map_err(|e| ConfigError::field("", e.to_string()))?;
        Ok(net)
    }

    fn policy(
        &self,
        p: &PolicyConfig,
        links: &HashMap<&str, LinkId>,
        field: &str,
    ) -> Result<FlowPolicy, ConfigError> {
        let link = |name: &str, f: &str| {
            links
                .get(name)
                .copied()
                .ok_or_else(|| ConfigError::field(format!("{field}.{f}"), format!("unknown link `{name}`")))
        };
        let base = |b: &Option<Box<PolicyConfig>>| match b {
            Some(b) => self.policy(b, links, &format!("{field}.base")),
            None => Ok(FlowPolicy::default()),
        };
        Ok(match p {
            PolicyConfig::Fixed { channels } => {
                let mut m = BTreeMap::new();
                for (name, ch) in channels {
                    m.insert(link(name, &format!("channels.{name}"))?, ChannelId(*ch));
                }
                FlowPolicy::FixedForward { channels: m }
            }
            PolicyConfig::Spread {
                endpoint,
                pair,
                reference,
                seed,
                taps,
                base: b,
            } => {
                let seed = seed.unwrap_or((self.sim.seed % 0xFFFF) as u16 + 1);
                let taps = taps.clone().unwrap_or(crate::policies::lfsr::DEFAULT_TAPS.to_vec());
                let lfsr = Lfsr::with_taps(seed, &taps)
                    .map_err(|e| ConfigError::field(format!("{field}.seed"), e.to_string()))?;
                FlowPolicy::SpreadSpectrum {
                    endpoint: link(endpoint, "endpoint")?,
                    pair: (ChannelId(pair[0]), ChannelId(pair[1])),
                    reference: ChannelId(reference.unwrap_or(pair[0])),
                    lfsr,
                    base: Box::new(base(b)?),
                }
            }
            PolicyConfig::Adaptive {
                endpoint,
                thresholds,
                noise_sd,
                seed,
                base: b,
            } => {
                if !(*noise_sd >= 0.0 && noise_sd.is_finite()) {
                    return Err(ConfigError::field(format!("{field}.noise_sd"), "must be non-negative"));
                }
                FlowPolicy::adaptive(
                    link(endpoint, "endpoint")?,
                    thresholds.iter().map(|&(t, c)| (t, ChannelId(c))).collect(),
                    Sensor::new(*noise_sd, seed.unwrap_or(self.sim.seed)),
                    base(b)?,
                )
            }
            PolicyConfig::Burst { every, base: b } => FlowPolicy::burst(*every, base(b)?),
        })
    }

    pub fn limit(&self) -> Option<Limit> {
        self.sim.until
    }

    /// Document describing `network`, with every seed made explicit.
    /// Fails for custom logic closures and custom policies.
    pub fn from_network(
        network: &Network,
        sim: SimConfig,
        environment: Option<EnvironmentConfig>,
    ) -> Result<Self, ConfigError> {
        let link_name = |l: LinkId| network.link(l).name.clone();
        let apb_name = |g| {
            network
                .apb_of_gprm(g)
                .map(|a| a.name.clone())
                .ok_or_else(|| ConfigError::field("", format!("no APB owns GPRM {g}")))
        };
        let mut apbs = Vec::new();
        for (i, a) in network.apbs.iter().enumerate() {
            let (logic, table) = match &a.logic {
                LogicFunction::CounterSource => (LogicKind::CounterSource, None),
                LogicFunction::RecordingSink => (LogicKind::RecordingSink, None),
                LogicFunction::Passthrough => (LogicKind::Passthrough, None),
                LogicFunction::Accumulator => (LogicKind::Accumulator, None),
                LogicFunction::Table(t) => (LogicKind::CustomTable, Some(t.clone())),
                LogicFunction::Custom(_) => {
                    return Err(ConfigError::field(format!("apb[{i}].logic"), "custom logic has no text form"))
                }
            };
            apbs.push(ApbConfig {
                name: Spanned::new(0..0, a.name.clone()),
                logic,
                width: a.width,
                initial: a.initial,
                table,
                halt_after: a.halt_after,
                datapath: a.datapath.iter().map(|(l, t)| (link_name(*l), *t)).collect(),
                policy: Some(policy_config(&a.policy, &link_name).ok_or_else(|| {
                    ConfigError::field(format!("apb[{i}].policy"), "custom policy has no text form")
                })?),
            });
        }
        let mut links = Vec::new();
        for l in &network.links {
            let delays = |cs: &[crate::model::Channel]| cs.iter().map(|c| c.delay).collect();
            links.push(LinkConfig {
                name: Spanned::new(0..0, l.name.clone()),
                kind: l.kind,
                from: Spanned::new(0..0, apb_name(l.endpoint_a)?),
                to: match l.kind {
                    LinkKind::Communication => Some(Spanned::new(0..0, apb_name(l.endpoint_b)?)),
                    LinkKind::ClosedLoop => None,
                },
                forward: delays(&l.fwd),
                backward: delays(&l.bwd),
                xnor: match (l.kind, l.xnor_side) {
                    (LinkKind::Communication, Side::B) => Some(XnorSide::Consumer),
                    _ => None,
                },
            });
        }
        Ok(TopologyConfig {
            sim,
            environment,
            apbs,
            links,
            source: None,
        })
    }
}

fn policy_config(p: &FlowPolicy, link_name: &dyn Fn(LinkId) -> String) -> Option<PolicyConfig> {
    let boxed = |b: &FlowPolicy| policy_config(b, link_name).map(Box::new);
    Some(match p {
        FlowPolicy::FixedForward { channels } => PolicyConfig::Fixed {
            channels: channels.iter().map(|(l, c)| (link_name(*l), c.0)).collect(),
        },
        FlowPolicy::SpreadSpectrum {
            endpoint,
            pair,
            reference,
            lfsr,
            base,
        } => PolicyConfig::Spread {
            endpoint: link_name(*endpoint),
            pair: [pair.0 .0, pair.1 .0],
            reference: Some(reference.0),
            seed: Some(lfsr.state()),
            taps: Some(lfsr.taps()),
            base: Some(boxed(base)?),
        },
        FlowPolicy::Adaptive {
            endpoint,
            thresholds,
            sensor,
            base,
        } => PolicyConfig::Adaptive {
            endpoint: link_name(*endpoint),
            thresholds: thresholds.iter().map(|(t, c)| (*t, c.0)).collect(),
            noise_sd: sensor.noise_sd,
            seed: Some(sensor.seed),
            base: Some(boxed(base)?),
        },
        FlowPolicy::Burst { every, base, .. } => PolicyConfig::Burst {
            every: *every,
            base: Some(boxed(base)?),
        },
        FlowPolicy::Custom(_) => return None,
    })
}
