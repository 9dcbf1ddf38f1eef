use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::link::{Direction, Link, LinkId, LinkKind};
use crate::policies::FlowPolicy;
use crate::Time;

/// Register contents; only the low `width` bits are significant.
pub type Word = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ApbId(pub u32);

impl ApbId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ApbId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GprmId(pub u32);

impl GprmId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for GprmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G{}", self.0)
    }
}

/// Role of a link endpoint for the GPRM that controls it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkRole {
    Output,
    Input,
    Loop,
}

impl LinkRole {
    /// Direction this endpoint drives when it sends its token.
    pub fn send_direction(self) -> Direction {
        match self {
            LinkRole::Output | LinkRole::Loop => Direction::Forward,
            LinkRole::Input => Direction::Backward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Endpoint {
    pub link: LinkId,
    pub role: LinkRole,
}

/// Rendezvous module: the endpoints it ANDs together. Dynamic state (reset
/// hold, clock edges) lives in the simulator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gprm {
    pub id: GprmId,
    pub apb: ApbId,
    pub endpoints: Vec<Endpoint>,
}

impl Gprm {
    pub fn inputs(&self) -> impl Iterator<Item = LinkId> + '_ {
        self.endpoints
            .iter()
            .filter(|e| e.role == LinkRole::Input)
            .map(|e| e.link)
    }
}

type LogicFn = dyn Fn(Word, &[Word]) -> Word + Send + Sync;

/// User-supplied register update; must be pure.
#[derive(Clone)]
pub struct CustomLogic(pub Arc<LogicFn>);

impl CustomLogic {
    pub fn new(f: impl Fn(Word, &[Word]) -> Word + Send + Sync + 'static) -> Self {
        CustomLogic(Arc::new(f))
    }
}

impl fmt::Debug for CustomLogic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomLogic(..)")
    }
}

impl PartialEq for CustomLogic {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

/// Registered logic function of an APB.
#[derive(Debug, Clone, PartialEq)]
pub enum LogicFunction {
    /// `register + 1`; the APB emits one item per firing.
    CounterSource,
    /// Latches the first input.
    RecordingSink,
    /// Copies the first input, or keeps the register when there is none.
    Passthrough,
    /// `register + sum(inputs)`.
    Accumulator,
    /// Truth table indexed by the register and inputs concatenated, register
    /// in the most significant position.
    Table(Vec<Word>),
    Custom(CustomLogic),
}

impl LogicFunction {
    pub fn catalog_name(&self) -> &'static str {
        match self {
            LogicFunction::CounterSource => "counter-source",
            LogicFunction::RecordingSink => "recording-sink",
            LogicFunction::Passthrough => "passthrough",
            LogicFunction::Accumulator => "accumulator",
            LogicFunction::Table(_) => "custom-table",
            LogicFunction::Custom(_) => "custom",
        }
    }

    pub fn eval(&self, register: Word, inputs: &[Word], width: u8) -> Word {
        let v = match self {
            LogicFunction::CounterSource => register.wrapping_add(1),
            LogicFunction::RecordingSink | LogicFunction::Passthrough => {
                inputs.first().copied().unwrap_or(register)
            }
            LogicFunction::Accumulator => inputs
                .iter()
                .fold(register, |acc, &x| acc.wrapping_add(x)),
            LogicFunction::Table(table) => {
                let w = width as u32;
                let idx = inputs.iter().fold(mask(register, width), |acc, &x| {
                    (acc << w) | mask(x, width)
                });
                table.get(idx as usize).copied().unwrap_or(0)
            }
            LogicFunction::Custom(f) => (f.0)(register, inputs),
        };
        mask(v, width)
    }

    /// Table length required for a given width and input count.
    pub fn table_len(width: u8, inputs: usize) -> Option<usize> {
        let bits = width as u32 * (inputs as u32 + 1);
        if bits >= usize::BITS {
            None
        } else {
            Some(1usize << bits)
        }
    }
}

pub(crate) fn mask(v: Word, width: u8) -> Word {
    if width >= 64 {
        v
    } else {
        v & ((1u64 << width) - 1)
    }
}

/// Autonomous processing block: register, logic function, flow-control
/// policy and declared worst-case datapath delays.
#[derive(Debug, Clone, PartialEq)]
pub struct Apb {
    pub id: ApbId,
    pub gprm: GprmId,
    pub name: String,
    pub width: u8,
    pub initial: Word,
    pub logic: LogicFunction,
    pub policy: FlowPolicy,
    /// Worst-case delay per output link (register to destination register)
    /// and per loop link (internal feedback path).
    pub datapath: BTreeMap<LinkId, Time>,
    /// The GPRM is held low by the environment after this many firings.
    pub halt_after: Option<u64>,
}

impl Apb {
    pub fn new(id: ApbId, name: impl Into<String>, logic: LogicFunction) -> Self {
        Apb {
            id,
            gprm: GprmId(id.0),
            name: name.into(),
            width: 32,
            initial: 0,
            logic,
            policy: FlowPolicy::default(),
            datapath: BTreeMap::new(),
            halt_after: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Network {
    pub apbs: Vec<Apb>,
    pub links: Vec<Link>,
}

impl Network {
    pub fn new(apbs: Vec<Apb>, links: Vec<Link>) -> Self {
        Network { apbs, links }
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.index()]
    }

    pub fn apb(&self, id: ApbId) -> &Apb {
        &self.apbs[id.index()]
    }

    pub fn apb_by_name(&self, name: &str) -> Option<&Apb> {
        self.apbs.iter().find(|a| a.name == name)
    }

    pub fn link_by_name(&self, name: &str) -> Option<&Link> {
        self.links.iter().find(|l| l.name == name)
    }

    pub fn apb_of_gprm(&self, gprm: GprmId) -> Option<&Apb> {
        self.apbs.iter().find(|a| a.gprm == gprm)
    }

    /// Derives each GPRM's endpoint list from the links, in link order.
    /// Assumes a structurally valid network (see
    /// [`validate_topology`](super::validate_topology)).
    pub fn gprms(&self) -> Vec<Gprm> {
        let mut gprms: Vec<Gprm> = self
            .apbs
            .iter()
            .map(|a| Gprm {
                id: a.gprm,
                apb: a.id,
                endpoints: Vec::new(),
            })
            .collect();
        gprms.sort_by_key(|g| g.id);
        for link in &self.links {
            let mut push = |g: super::GprmId, role| {
                if let Some(gp) = gprms.iter_mut().find(|gp| gp.id == g) {
                    gp.endpoints.push(Endpoint {
                        link: link.id,
                        role,
                    });
                }
            };
            match link.kind {
                LinkKind::Communication => {
                    push(link.endpoint_a, LinkRole::Output);
                    push(link.endpoint_b, LinkRole::Input);
                }
                LinkKind::ClosedLoop => push(link.endpoint_a, LinkRole::Loop),
            }
        }
        gprms
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_logic_indexes_register_then_inputs() {
        // 1-bit XOR of register and one input
        let t = LogicFunction::Table(vec![0, 1, 1, 0]);
        assert_eq!(t.eval(0, &[1], 1), 1);
        assert_eq!(t.eval(1, &[1], 1), 0);
        assert_eq!(LogicFunction::table_len(1, 1), Some(4));
    }

    #[test]
    fn results_are_masked_to_width() {
        assert_eq!(LogicFunction::CounterSource.eval(255, &[], 8), 0);
        assert_eq!(LogicFunction::Accumulator.eval(250, &[10], 8), 4);
        assert_eq!(LogicFunction::Passthrough.eval(7, &[], 8), 7);
    }
}
