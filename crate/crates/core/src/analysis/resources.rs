use std::fmt;

use super::AnalysisError;
use crate::model::{Direction, Gprm, LinkRole, Network};

/// Channel counts of one communication port, from the GPRM's side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortShape {
    /// Channels this GPRM toggles (forward for outputs, backward for inputs).
    pub driven: u32,
    /// Channels whose wires this GPRM observes.
    pub received: u32,
}

impl PortShape {
    pub const SINGLE: PortShape = PortShape { driven: 1, received: 1 };

    pub fn new(driven: u32, received: u32) -> Self {
        PortShape { driven, received }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GprmShape {
    pub inputs: Vec<PortShape>,
    pub outputs: Vec<PortShape>,
    /// Channel count of each closed loop.
    pub loops: Vec<u32>,
}

impl GprmShape {
    /// Single-channel inputs and outputs, loops with the given channel counts.
    pub fn simple(inputs: usize, outputs: usize, loops: &[u32]) -> Self {
        GprmShape {
            inputs: vec![PortShape::SINGLE; inputs],
            outputs: vec![PortShape::SINGLE; outputs],
            loops: loops.to_vec(),
        }
    }

    pub fn of(network: &Network, gprm: &Gprm) -> Self {
        let mut shape = GprmShape {
            inputs: Vec::new(),
            outputs: Vec::new(),
            loops: Vec::new(),
        };
        for ep in &gprm.endpoints {
            let link = network.link(ep.link);
            let fwd = link.channels(Direction::Forward).len() as u32;
            let bwd = link.channels(Direction::Backward).len() as u32;
            match ep.role {
                LinkRole::Input => shape.inputs.push(PortShape::new(bwd, fwd)),
                LinkRole::Output => shape.outputs.push(PortShape::new(fwd, bwd)),
                LinkRole::Loop => shape.loops.push(fwd),
            }
        }
        shape
    }

    fn ports(&self) -> impl Iterator<Item = &PortShape> {
        self.inputs.iter().chain(&self.outputs)
    }

    fn is_tabulated(&self) -> bool {
        let single = |ps: &[PortShape]| ps.iter().all(|p| *p == PortShape::SINGLE);
        let (i, o) = (self.inputs.len(), self.outputs.len());
        let plain = single(&self.inputs) && single(&self.outputs);
        match self.loops.as_slice() {
            [] if plain => matches!((i, o), (1, 1) | (2, 1) | (1, 2)),
            [] => {
                (i, o) == (1, 1)
                    && self.inputs[0] == PortShape::SINGLE
                    && self.outputs[0] == PortShape::new(2, 1)
            }
            [1] | [2] => plain && (i, o) == (1, 1),
            _ => false,
        }
    }
}

impl fmt::Display for GprmShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ports = |ps: &[PortShape]| {
            ps.iter()
                .map(|p| if p.driven == 1 { "1".into() } else { format!("1x{}", p.driven) })
                .collect::<Vec<String>>()
                .join("+")
        };
        let loops = self
            .loops
            .iter()
            .map(|c| if *c == 1 { "1".into() } else { format!("1x{c}") })
            .collect::<Vec<String>>()
            .join("+");
        write!(
            f,
            "in {} / out {} / loop {}",
            if self.inputs.is_empty() { "0".into() } else { ports(&self.inputs) },
            if self.outputs.is_empty() { "0".into() } else { ports(&self.outputs) },
            if loops.is_empty() { "0".into() } else { loops },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceEstimate {
    pub lut4: u32,
    pub t_ff: u32,
    pub notes: Vec<String>,
}

pub const DESTINATION_NOTE: &str = "An additional LUT input will be required in destination GPRM";

/// LUT and T flip-flop count of a GPRM.
///
/// Without loops and with every port driving one channel, a single T-FF
/// toggles all links at once. Otherwise each driven channel (loop channels
/// included) has its own T-FF. The firing function reads every T-FF and
/// every received wire; up to four inputs fit one LUT and each further LUT
/// in the tree absorbs three more. Shapes outside the tabulated set are
/// marked as extrapolated.
pub fn resource_estimate(shape: &GprmShape) -> Result<ResourceEstimate, AnalysisError> {
    let ports: Vec<&PortShape> = shape.ports().collect();
    if ports.is_empty() && shape.loops.is_empty() {
        return Err(AnalysisError::UnsupportedShape("GPRM controls no link".into()));
    }
    if ports.iter().any(|p| p.driven == 0 || p.received == 0) || shape.loops.contains(&0) {
        return Err(AnalysisError::UnsupportedShape(format!("{shape}: port without channels")));
    }
    let multi = ports.iter().filter(|p| p.driven > 1).count();
    let single = ports.len() - multi;
    let shared = shape.loops.is_empty() && multi == 0;
    if shape.loops.is_empty() && multi > 0 && single >= 2 {
        // whether the single-channel ports share one T-FF is not determined
        return Err(AnalysisError::UnsupportedShape(format!(
            "{shape}: multi-channel port next to several single-channel ports"
        )));
    }

    let driven: u32 = ports.iter().map(|p| p.driven).sum::<u32>() + shape.loops.iter().sum::<u32>();
    let received: u32 = ports.iter().map(|p| p.received).sum::<u32>() + shape.loops.iter().sum::<u32>();
    let t_ff = if shared { 1 } else { driven };
    let inputs = t_ff + received;
    let lut4 = if inputs <= 4 { 1 } else { (inputs - 1).div_ceil(3) };

    let mut notes = Vec::new();
    if !shape.is_tabulated() {
        notes.push(format!("extrapolated: {inputs}-input firing function"));
    }
    if shape.outputs.iter().any(|p| p.driven > 1) {
        notes.push(DESTINATION_NOTE.into());
    }
    Ok(ResourceEstimate { lut4, t_ff, notes })
}
