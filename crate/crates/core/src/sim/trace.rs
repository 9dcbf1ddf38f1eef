use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::model::{ApbId, ChannelId, Direction, GprmId, LinkId, Network, Word};
use crate::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenPhase {
    Depart,
    Arrive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenMove {
    pub time: Time,
    pub link: LinkId,
    pub phase: TokenPhase,
    pub direction: Direction,
    pub channel: ChannelId,
    pub from: GprmId,
    pub to: GprmId,
}

/// A token announced data before the bundled datapath had settled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub time: Time,
    pub link: LinkId,
    pub channel: ChannelId,
    pub consumer: GprmId,
    pub data_valid: Time,
    /// `arrival - data_valid`; negative.
    pub slack: i64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalSample {
    pub time: Time,
    pub temperature: f64,
    pub edges: u64,
    pub r_th: f64,
}

/// Append-only simulation record, sorted by time within each list.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    /// Clock edges per GPRM (indexed by GPRM id).
    pub edges: Vec<Vec<Time>>,
    /// Register value after each firing, per APB. Empty when disabled.
    pub registers: Vec<Vec<(Time, Word)>>,
    /// Items processed per APB: firings that consumed fresh input data, or
    /// every firing of an APB without inputs.
    pub items: Vec<Vec<(Time, Word)>>,
    pub tokens: Vec<TokenMove>,
    pub violations: Vec<Violation>,
    pub thermal: Vec<ThermalSample>,
    /// Time up to which the run has been simulated.
    pub end: Time,
}

impl Trace {
    pub fn new(gprms: usize, apbs: usize) -> Self {
        Trace {
            edges: vec![Vec::new(); gprms],
            registers: vec![Vec::new(); apbs],
            items: vec![Vec::new(); apbs],
            ..Default::default()
        }
    }

    pub fn total_edges(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn delivered(&self, apb: ApbId) -> usize {
        self.items.get(apb.index()).map_or(0, Vec::len)
    }

    /// Every clock edge of every GPRM, sorted by time then GPRM id.
    pub fn all_edges(&self) -> Vec<(Time, GprmId)> {
        let mut all: Vec<_> = self
            .edges
            .iter()
            .enumerate()
            .flat_map(|(g, es)| es.iter().map(move |&t| (t, GprmId(g as u32))))
            .collect();
        all.sort();
        all
    }

    pub fn edges_csv(&self, net: &Network) -> String {
        let mut out = String::from(HEADER);
        let mut ordinal = vec![0usize; self.edges.len()];
        for (t, g) in self.all_edges() {
            let n = &mut ordinal[g.index()];
            let name = net.apb_of_gprm(g).map_or("?", |a| a.name.as_str());
            let _ = writeln!(out, "{},edge,{},,{}", t.as_ps(), field(name), n);
            *n += 1;
        }
        out
    }

    pub fn registers_csv(&self, net: &Network) -> String {
        let mut rows: Vec<(Time, usize, Word)> = self
            .registers
            .iter()
            .enumerate()
            .flat_map(|(a, rs)| rs.iter().map(move |&(t, v)| (t, a, v)))
            .collect();
        rows.sort();
        let mut out = String::from(HEADER);
        for (t, a, v) in rows {
            let _ = writeln!(out, "{},register,{},,{}", t.as_ps(), field(&net.apbs[a].name), v);
        }
        out
    }

    pub fn tokens_csv(&self, net: &Network) -> String {
        let mut out = String::from(HEADER);
        for m in &self.tokens {
            let phase = match m.phase {
                TokenPhase::Depart => "depart",
                TokenPhase::Arrive => "arrive",
            };
            let name = |g: GprmId| net.apb_of_gprm(g).map_or("?", |a| a.name.as_str()).to_owned();
            let _ = writeln!(
                out,
                "{},{},{},{}->{},{}",
                m.time.as_ps(),
                phase,
                field(&net.link(m.link).name),
                field(&name(m.from)),
                field(&name(m.to)),
                m.channel.0
            );
        }
        out
    }

    pub fn violations_csv(&self, net: &Network) -> String {
        let mut out = String::from(HEADER);
        for v in &self.violations {
            let consumer = net.apb_of_gprm(v.consumer).map_or("?", |a| a.name.as_str());
            let _ = writeln!(
                out,
                "{},bundling,{},{} consumer={} valid_at={},{}",
                v.time.as_ps(),
                field(&net.link(v.link).name),
                v.channel,
                field(consumer),
                v.data_valid.as_ps(),
                v.slack
            );
        }
        out
    }

    /// Writes `edges.csv`, `registers.csv`, `tokens.csv` and
    /// `violations.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path, net: &Network) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let files = [
            ("edges.csv", self.edges_csv(net)),
            ("registers.csv", self.registers_csv(net)),
            ("tokens.csv", self.tokens_csv(net)),
            ("violations.csv", self.violations_csv(net)),
        ];
        let mut paths = Vec::new();
        for (name, body) in files {
            let p = dir.join(name);
            fs::write(&p, body)?;
            paths.push(p);
        }
        Ok(paths)
    }
}

const HEADER: &str = "time_ps,kind,gprm_or_link,detail,value\n";

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}
