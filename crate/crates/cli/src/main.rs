use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use gals::analysis::{clock_spectrum, peak_reduction, resource_estimate, throughput, GprmShape};
use gals::config::TopologyConfig;
use gals::model::{validate_topology, ApbId, LogicFunction, Network};
use gals::policies::effective_delay;
use gals::sim::{Limit, Simulator, Trace};
use gals::Time;

/// Simulate GALS networks of parity-encoded, bundled-data token links.
#[derive(Debug, Parser)]
#[command(name = "gals", version)]
struct Cli {
    /// Override the seed for PN generators and sensors.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory [default: out/<config-stem>/<command>].
    #[arg(long, global = true, env = "GALS_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Run limit: a time such as 250us or 100000ps, or an event count such as 5000ev.
    #[arg(long, global = true)]
    until: Option<Limit>,
    /// Treat warnings and unsupported resource shapes as errors.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check structure and the static bundling constraint.
    Validate { config: PathBuf },
    /// Simulate and write edge, register, token and violation traces.
    Run { config: PathBuf },
    /// Compare clock-edge spectra of two flow-control variants.
    Spectrum {
        config: PathBuf,
        /// Two of `fixed` (dithering replaced by the reference channel) and `spread`.
        #[arg(long, default_value = "fixed,spread")]
        compare: String,
        /// Band for the peak comparison, `LO,HI` in Hz.
        #[arg(long)]
        band: Option<String>,
    },
    /// Temperature and throughput series of a thermally coupled run.
    Thermal { config: PathBuf },
    /// LUT and T flip-flop estimate per GPRM.
    Resources { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Validate { config } => validate(cli, config),
        Command::Run { config } => run(cli, config),
        Command::Spectrum {
            config,
            compare,
            band,
        } => spectrum(cli, config, compare, band.as_deref()),
        Command::Thermal { config } => thermal(cli, config),
        Command::Resources { config } => resources(cli, config),
    }
}

fn load(cli: &Cli, path: &Path) -> Result<(TopologyConfig, Network)> {
    let mut cfg = TopologyConfig::load(path).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    let net = cfg.build().map_err(|e| anyhow!("{}: {e}", path.display()))?;
    Ok((cfg, net))
}

fn out_dir(cli: &Cli, config: &Path, command: &str) -> Result<PathBuf> {
    let dir = match &cli.out_dir {
        Some(d) => d.clone(),
        None => {
            let stem = config
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| anyhow!("cannot derive output name from {}", config.display()))?;
            Path::new("out").join(stem).join(command)
        }
    };
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, body).with_context(|| format!("cannot write {}", p.display()))
}

fn limit(cli: &Cli, cfg: &TopologyConfig) -> Result<Limit> {
    cli.until
        .or(cfg.limit())
        .ok_or_else(|| anyhow!("no run limit: pass --until or set sim.until"))
}

fn simulate(cli: &Cli, cfg: &TopologyConfig, net: Network) -> Result<(Simulator, Trace)> {
    let mut sim = Simulator::reset(net, cfg.sim_options())?;
    let trace = sim.run_until(limit(cli, cfg)?)?.clone();
    Ok((sim, trace))
}

/// Configured sink, else the last recording sink, else the last APB.
fn sink(cfg: &TopologyConfig, net: &Network) -> Result<ApbId> {
    if let Some(name) = &cfg.sim.sink {
        return net
            .apb_by_name(name)
            .map(|a| a.id)
            .ok_or_else(|| anyhow!("sim.sink: unknown APB `{name}`"));
    }
    Ok(net
        .apbs
        .iter()
        .rev()
        .find(|a| a.logic == LogicFunction::RecordingSink)
        .or(net.apbs.last())
        .map(|a| a.id)
        .unwrap_or(ApbId(0)))
}

fn validate(cli: &Cli, config: &Path) -> Result<()> {
    let (_, net) = load(cli, config)?;
    let report = validate_topology(&net)?;
    println!("{report}");
    if cli.strict && !report.is_clean() {
        bail!("strict mode: {}", report.summary());
    }
    Ok(())
}

fn run(cli: &Cli, config: &Path) -> Result<()> {
    let (cfg, net) = load(cli, config)?;
    let sink = sink(&cfg, &net)?;
    let (sim, trace) = simulate(cli, &cfg, net)?;
    let net = sim.network();
    let dir = out_dir(cli, config, "run")?;
    trace.write_csv(&dir, net)?;

    let mut out = String::new();
    for g in sim.gprms() {
        let name = &net.apb(g.apb).name;
        let _ = writeln!(out, "edges {name}: {}", trace.edges[g.id.index()].len());
    }
    let _ = writeln!(out, "end: {}", trace.end);
    let _ = write!(
        out,
        "delivered: {}, violations: {}",
        trace.delivered(sink),
        trace.violations.len()
    );
    println!("{out}");
    Ok(())
}

fn parse_band(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| anyhow!("--band expects LO,HI"))?;
    Ok((lo.trim().parse()?, hi.trim().parse()?))
}

fn spectrum(cli: &Cli, config: &Path, compare: &str, band: Option<&str>) -> Result<()> {
    let (cfg, net) = load(cli, config)?;
    let variants: Vec<&str> = compare.split(',').map(str::trim).collect();
    let [a, b] = variants[..] else {
        bail!("--compare expects two variants, e.g. fixed,spread");
    };
    if !net.apbs.iter().any(|x| x.policy.has_spread()) {
        bail!("configuration error: no spread pair defined, nothing to compare");
    }
    let edges_of = |variant: &str| -> Result<Vec<Time>> {
        let mut v = net.clone();
        match variant {
            "spread" => {}
            "fixed" => {
                for apb in &mut v.apbs {
                    apb.policy = apb.policy.without_dithering();
                }
            }
            other => bail!("unknown variant `{other}` (expected fixed or spread)"),
        }
        let (_, trace) = simulate(cli, &cfg, v)?;
        Ok(trace.all_edges().into_iter().map(|(t, _)| t).collect())
    };
    let (mut ea, mut eb) = (edges_of(a)?, edges_of(b)?);
    let n = ea.len().min(eb.len());
    ea.truncate(n);
    eb.truncate(n);

    let bin = cfg.sim.spectrum_bin.unwrap_or(Time(625));
    let last = ea.iter().chain(&eb).max().copied().unwrap_or(Time::ZERO);
    let nfft = match cfg.sim.nfft {
        Some(n) => n,
        None => ((last.as_ps() / bin.as_ps().max(1)) as usize + 1).next_power_of_two(),
    };
    let sa = clock_spectrum(&ea, bin, nfft)?;
    let sb = clock_spectrum(&eb, bin, nfft)?;
    let band = match band {
        Some(s) => parse_band(s)?,
        None => cfg
            .sim
            .band
            .map(|[lo, hi]| (lo, hi))
            .unwrap_or((sa.bin_hz, sa.nyquist())),
    };
    let db = peak_reduction(&sa, &sb, band)?;

    let dir = out_dir(cli, config, "spectrum")?;
    write(&dir, &format!("spectrum-{a}.csv"), &sa.to_csv())?;
    write(&dir, &format!("spectrum-{b}.csv"), &sb.to_csv())?;
    let (ka, pa) = sa.peak_in_band(band.0, band.1)?;
    let (kb, pb) = sb.peak_in_band(band.0, band.1)?;
    println!("edges: {n} per variant, bin {bin}, nfft {nfft}");
    println!("{a} peak: {pa:.6e} at {:.6e} Hz", sa.frequency(ka));
    println!("{b} peak: {pb:.6e} at {:.6e} Hz", sb.frequency(kb));
    println!("peak reduction: {db:.2} dB (band {:.6e}..{:.6e} Hz)", band.0, band.1);
    Ok(())
}

fn thermal(cli: &Cli, config: &Path) -> Result<()> {
    let (cfg, net) = load(cli, config)?;
    let env = cfg
        .environment
        .clone()
        .ok_or_else(|| anyhow!("configuration error: thermal needs an [environment] section"))?;
    let sink = sink(&cfg, &net)?;
    let (sim, trace) = simulate(cli, &cfg, net)?;
    let series = throughput(&trace, env.dt, sink)?;

    let mut csv = String::from("time_ps,temperature_c,items_per_s\n");
    for s in &trace.thermal {
        // the sample at t closes the window [t - dt, t)
        let start = s.time - env.dt;
        let rate = series
            .points
            .iter()
            .find(|p| p.start == start)
            .map_or(0.0, |p| p.rate);
        let _ = writeln!(csv, "{},{},{}", s.time.as_ps(), s.temperature, rate);
    }
    let dir = out_dir(cli, config, "thermal")?;
    write(&dir, "thermal.csv", &csv)?;
    if let Some(window) = cfg.sim.window {
        write(&dir, "throughput.csv", &throughput(&trace, window, sink)?.to_csv())?;
    }

    let model = *sim.thermal_model().expect("environment present");
    let last = trace
        .thermal
        .last()
        .ok_or_else(|| anyhow!("run shorter than one thermal step ({})", env.dt))?;
    let full: Vec<_> = series.points.iter().filter(|p| p.len == env.dt).collect();
    let rate = full.last().map_or(0.0, |p| p.rate);
    println!("samples: {}", trace.thermal.len());
    println!("steady state: T = {:.4} C, throughput = {:.6e} items/s", last.temperature, rate);

    // Fixed point of T = T_amb + r_th * P(rate(T)) for a single closed loop.
    let loops: Vec<_> = sim.network().links.iter().filter(|l| l.is_loop()).collect();
    if let [l] = loops[..] {
        if l.fwd.len() == 1 && sim.network().links.len() == 1 {
            let period = effective_delay(l.fwd[0].delay, &model).as_secs_f64();
            let residual =
                (model.power_at_rate(1.0 / period) * model.r_th - (last.temperature - model.t_ambient)).abs();
            let verdict = if residual < 0.1 { "ok" } else { "not converged" };
            println!("fixed-point residual: {residual:.3e} C ({verdict})");
        }
    }
    Ok(())
}

fn resources(cli: &Cli, config: &Path) -> Result<()> {
    let (_, net) = load(cli, config)?;
    let port = |driven: u32| if driven == 1 { "1".to_string() } else { format!("1x{driven}") };
    let ports = |ps: Vec<String>| if ps.is_empty() { "0".to_string() } else { ps.join("+") };

    let mut out = format!(
        "{:<12} {:<7} {:<7} {:<7} {:>11} {:>10}  NOTES\n",
        "GPRM", "INPUT", "OUTPUT", "LOOP", "4-INPUT LUT", "SLICE T-FF"
    );
    let (mut luts, mut ffs, mut unsupported) = (0, 0, 0);
    for g in net.gprms() {
        let shape = GprmShape::of(&net, &g);
        let name = &net.apb(g.apb).name;
        let cols = format!(
            "{:<12} {:<7} {:<7} {:<7}",
            name,
            ports(shape.inputs.iter().map(|_| "1".to_string()).collect()),
            ports(shape.outputs.iter().map(|p| port(p.driven)).collect()),
            ports(shape.loops.iter().map(|&c| port(c)).collect()),
        );
        match resource_estimate(&shape) {
            Ok(e) => {
                luts += e.lut4;
                ffs += e.t_ff;
                let _ = writeln!(out, "{cols} {:>11} {:>10}  {}", e.lut4, e.t_ff, e.notes.join("; "));
            }
            Err(e) => {
                unsupported += 1;
                let _ = writeln!(out, "{cols} {:>11} {:>10}  {e}", "-", "-");
            }
        }
    }
    let _ = write!(out, "{:<36} {luts:>11} {ffs:>10}", "total");
    if unsupported > 0 {
        let _ = write!(out, "  ({unsupported} unsupported)");
    }
    println!("{out}");
    if cli.strict && unsupported > 0 {
        bail!("{unsupported} GPRM shapes unsupported in strict mode");
    }
    Ok(())
}
