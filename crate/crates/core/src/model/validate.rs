use std::collections::HashSet;
use std::fmt;

use super::link::{ChannelId, LinkId, LinkKind, Side};
use super::network::{ApbId, LinkRole, LogicFunction, Network};
use super::{ModelError, MAX_CHANNELS};
use crate::Time;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Warning {
    /// A data-carrying channel is not slower than the datapath it bundles.
    Bundling {
        apb: ApbId,
        apb_name: String,
        link: LinkId,
        link_name: String,
        role: LinkRole,
        channel: ChannelId,
        delay: Time,
        worst_case: Time,
    },
    /// The APB's policy may retain every communication token, but it has no
    /// closed loop to keep clocking itself.
    DeadlockRisk { apb: ApbId, apb_name: String },
}

impl Warning {
    /// `delay - worst_case`, in picoseconds.
    pub fn slack(&self) -> Option<i64> {
        match self {
            Warning::Bundling {
                delay, worst_case, ..
            } => Some(delay.signed_diff(*worst_case)),
            Warning::DeadlockRisk { .. } => None,
        }
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::Bundling {
                apb_name,
                link_name,
                role,
                channel,
                delay,
                worst_case,
                ..
            } => write!(
                f,
                "bundling: apb `{apb_name}` {} link `{link_name}` {channel} delay {delay} <= worst-case {worst_case} (slack {}ps)",
                if *role == LinkRole::Loop { "loop" } else { "output" },
                self.slack().unwrap_or(0)
            ),
            Warning::DeadlockRisk { apb_name, .. } => write!(
                f,
                "deadlock-risk: apb `{apb_name}` may retain all communication tokens but has no closed-loop link"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub warnings: Vec<Warning>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }

    pub fn bundling_warnings(&self) -> impl Iterator<Item = &Warning> {
        self.warnings
            .iter()
            .filter(|w| matches!(w, Warning::Bundling { .. }))
    }

    /// True when `channel` on `link` was flagged as under-delayed.
    pub fn is_warned(&self, link: LinkId, channel: ChannelId) -> bool {
        self.warnings.iter().any(|w| {
            matches!(w, Warning::Bundling { link: l, channel: c, .. } if *l == link && *c == channel)
        })
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        f.write_str(&self.summary())
    }
}

impl ValidationReport {
    /// Warning count, e.g. "1 warning" or "3 warnings".
    pub fn summary(&self) -> String {
        match self.warnings.len() {
            1 => "1 warning".to_string(),
            n => format!("{n} warnings"),
        }
    }
}

fn malformed(msg: impl Into<String>) -> ModelError {
    ModelError::MalformedNetwork(msg.into())
}

/// Structural checks (errors) followed by the static bundling and
/// deadlock checks (warnings).
pub fn validate_topology(network: &Network) -> Result<ValidationReport, ModelError> {
    check_structure(network)?;

    let mut report = ValidationReport::default();
    let gprms = network.gprms();
    for gprm in &gprms {
        let apb = network.apb(gprm.apb);
        for ep in &gprm.endpoints {
            if ep.role == LinkRole::Input {
                continue;
            }
            let link = network.link(ep.link);
            let worst_case = apb.datapath[&ep.link];
            for ch in &link.fwd {
                if ch.delay <= worst_case {
                    report.warnings.push(Warning::Bundling {
                        apb: apb.id,
                        apb_name: apb.name.clone(),
                        link: link.id,
                        link_name: link.name.clone(),
                        role: ep.role,
                        channel: ch.id,
                        delay: ch.delay,
                        worst_case,
                    });
                }
            }
        }
        let has_loop = gprm.endpoints.iter().any(|e| e.role == LinkRole::Loop);
        if !has_loop && apb.policy.may_retain_all_communication() {
            report.warnings.push(Warning::DeadlockRisk {
                apb: apb.id,
                apb_name: apb.name.clone(),
            });
        }
    }
    Ok(report)
}

fn check_structure(network: &Network) -> Result<(), ModelError> {
    let n = network.apbs.len();
    if n == 0 {
        return Err(malformed("network has no APBs"));
    }
    let mut names = HashSet::new();
    let mut gprm_ids = HashSet::new();
    for (i, apb) in network.apbs.iter().enumerate() {
        if apb.id.index() != i {
            return Err(malformed(format!("apb `{}` has id {} at index {i}", apb.name, apb.id)));
        }
        if !names.insert(apb.name.as_str()) {
            return Err(malformed(format!("duplicate apb name `{}`", apb.name)));
        }
        if apb.gprm.index() >= n || !gprm_ids.insert(apb.gprm) {
            return Err(malformed(format!(
                "apb `{}`: gprm {} is out of range or shared with another apb",
                apb.name, apb.gprm
            )));
        }
        if apb.width == 0 || apb.width > 64 {
            return Err(malformed(format!("apb `{}`: width must be 1..=64", apb.name)));
        }
    }

    let mut link_names = HashSet::new();
    for (i, link) in network.links.iter().enumerate() {
        let ctx = |m: &str| malformed(format!("link `{}`: {m}", link.name));
        if link.id.index() != i {
            return Err(ctx("id does not match its position"));
        }
        if !link_names.insert(link.name.as_str()) {
            return Err(ctx("duplicate link name"));
        }
        for g in [link.endpoint_a, link.endpoint_b] {
            if !gprm_ids.contains(&g) {
                return Err(ctx(&format!("endpoint {g} references no GPRM")));
            }
        }
        if link.fwd.is_empty() {
            return Err(ctx("needs at least one forward channel"));
        }
        if link.fwd.len() > MAX_CHANNELS || link.bwd.len() > MAX_CHANNELS {
            return Err(ctx("more than 64 channels in one direction"));
        }
        match link.kind {
            LinkKind::Communication => {
                if link.endpoint_a == link.endpoint_b {
                    return Err(ctx("communication link connects a GPRM to itself"));
                }
                if link.bwd.is_empty() {
                    return Err(ctx("needs at least one backward channel"));
                }
            }
            LinkKind::ClosedLoop => {
                if link.endpoint_a != link.endpoint_b {
                    return Err(ctx("closed loop must start and end at the same GPRM"));
                }
                if !link.bwd.is_empty() {
                    return Err(ctx("closed loop cannot have backward channels"));
                }
                if link.xnor_side != Side::A {
                    return Err(ctx("closed loop token must start at its GPRM"));
                }
            }
        }
        for (j, ch) in link.fwd.iter().chain(&link.bwd).enumerate() {
            let idx = if j < link.fwd.len() { j } else { j - link.fwd.len() };
            if ch.id.index() != idx {
                return Err(ctx("channel ids must be dense and ordered"));
            }
            if ch.delay == Time::ZERO {
                return Err(ctx("channel delay must be positive"));
            }
        }
    }

    let gprms = network.gprms();
    for gprm in &gprms {
        let apb = network.apb(gprm.apb);
        let ctx = |m: String| malformed(format!("apb `{}`: {m}", apb.name));
        if gprm.endpoints.is_empty() {
            return Err(ctx("its GPRM controls no links".into()));
        }
        for ep in &gprm.endpoints {
            let declared = apb.datapath.contains_key(&ep.link);
            if ep.role != LinkRole::Input && !declared {
                let link = network.link(ep.link);
                return Err(ctx(format!("missing worst-case datapath delay for `{}`", link.name)));
            }
        }
        for link in apb.datapath.keys() {
            let ok = gprm
                .endpoints
                .iter()
                .any(|e| e.link == *link && e.role != LinkRole::Input);
            if !ok {
                return Err(ctx(format!(
                    "datapath delay declared for {link}, which is not one of its output or loop links"
                )));
            }
        }
        if let LogicFunction::Table(t) = &apb.logic {
            let inputs = gprm.inputs().count();
            if LogicFunction::table_len(apb.width, inputs) != Some(t.len()) {
                return Err(ctx(format!(
                    "custom table needs 2^(width*(inputs+1)) = 2^{} entries, found {}",
                    apb.width as usize * (inputs + 1),
                    t.len()
                )));
            }
        }
        apb.policy
            .check(&gprm.endpoints, &network.links)
            .map_err(|e| ctx(format!("policy: {e}")))?;
    }
    Ok(())
}
