//! Thin command-line front end over the library.
//!
//! `run` executes one scenario, `compare` sweeps protocols over node
//! counts and seeds, `preset` prints a built-in scenario, and `render`
//! regenerates charts from a comparison directory. Every run writes a
//! `manifest.toml` containing the exact scenario; feeding that manifest
//! back through `--config` reproduces the run byte-for-byte.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use manet_sim::metrics::{compare, CompareSpec};
use manet_sim::mobility::{Area, MobilityModel};
use manet_sim::report;
use manet_sim::routing::Protocol;
use manet_sim::scenario::{preset, FlowPair, ScenarioConfig, SleepWindow, SweepPoint};
use manet_sim::sim::Simulation;

#[derive(Parser)]
#[command(
    name = "manet-sim",
    version,
    about = "Deterministic ad-hoc network simulator: DSDV, DSR, AODV, and a mode-aware hybrid"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario; write metrics.csv and manifest.toml (plus traces).
    Run(RunArgs),
    /// Sweep protocols x node counts x seeds; write CSV tables and charts.
    Compare(CompareArgs),
    /// Print a built-in scenario preset as TOML.
    Preset(PresetArgs),
    /// Re-render the charts of an existing comparison directory.
    Render(RenderArgs),
}

/// Scenario source plus field-level overrides. Overrides are total: every
/// scenario field is reachable, repeatable flags covering the list-valued
/// ones.
#[derive(Args, Debug, Default)]
struct ScenarioFlags {
    /// Scenario TOML to start from (e.g. a previous run's manifest.toml).
    #[arg(long, value_name = "FILE", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset to start from: sim1 | sim2.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    #[arg(long)]
    seed: Option<u64>,
    /// dsdv | dsr | aodv | deerp
    #[arg(long, value_parser = parse_protocol)]
    protocol: Option<Protocol>,
    #[arg(long)]
    nodes: Option<u32>,
    /// Square area side, meters.
    #[arg(long, value_name = "M", conflicts_with_all = ["area_width", "area_height"])]
    area: Option<f64>,
    #[arg(long, value_name = "M")]
    area_width: Option<f64>,
    #[arg(long, value_name = "M")]
    area_height: Option<f64>,
    /// rwp | rpgm
    #[arg(long, value_parser = parse_mobility)]
    mobility: Option<MobilityModel>,
    #[arg(long, value_name = "M/S")]
    speed_min: Option<f64>,
    #[arg(long, value_name = "M/S")]
    speed_max: Option<f64>,
    #[arg(long, value_name = "S")]
    pause: Option<f64>,
    #[arg(long, value_name = "S")]
    duration: Option<f64>,
    #[arg(long)]
    rpgm_groups: Option<u32>,
    #[arg(long, value_name = "M")]
    rpgm_radius: Option<f64>,
    #[arg(long, value_name = "M")]
    range: Option<f64>,
    #[arg(long, value_name = "BPS")]
    bitrate: Option<f64>,
    #[arg(long)]
    queue_frames: Option<usize>,
    #[arg(long, value_name = "BYTES")]
    mac_overhead: Option<u32>,
    /// Enqueue control frames ahead of data frames.
    #[arg(long)]
    control_priority: Option<bool>,
    #[arg(long, value_name = "MW")]
    tx_mw: Option<f64>,
    #[arg(long, value_name = "MW")]
    rx_mw: Option<f64>,
    #[arg(long, value_name = "MW")]
    idle_mw: Option<f64>,
    #[arg(long, value_name = "MW")]
    sleep_mw: Option<f64>,
    #[arg(long, value_name = "MJ")]
    initial_mj: Option<f64>,
    /// Randomly drawn flow count (0 = traffic-free run).
    #[arg(long)]
    flows: Option<u32>,
    #[arg(long, value_name = "BYTES")]
    payload: Option<u32>,
    #[arg(long, value_name = "PKT/S")]
    rate: Option<f64>,
    #[arg(long, value_name = "S")]
    traffic_start: Option<f64>,
    #[arg(long, value_name = "S")]
    traffic_stop: Option<f64>,
    /// Explicit flow endpoints, repeatable: --pair 0:7
    #[arg(long = "pair", value_name = "SRC:DST", value_parser = parse_pair)]
    pairs: Vec<FlowPair>,
    /// Protocol-selection table file (hybrid runs).
    #[arg(long, value_name = "FILE")]
    rpsc_table: Option<PathBuf>,
    /// Fall back to the nearest selection row instead of failing.
    #[arg(long)]
    rpsc_nearest: Option<bool>,
    /// Pin a node's starting position, repeatable in node order: --position 10,250
    #[arg(long = "position", value_name = "X,Y", value_parser = parse_position)]
    positions: Vec<[f64; 2]>,
    /// Snapshot interval for energy/mode samples, seconds.
    #[arg(long, value_name = "S")]
    sample_interval: Option<f64>,
    /// Radio-off window, repeatable: --sleep-window 3:10:25 (node:from:to)
    #[arg(long = "sleep-window", value_name = "NODE:FROM:TO", value_parser = parse_sleep)]
    sleep_windows: Vec<SleepWindow>,
    /// Sweep point, repeatable: --sweep 20:500 (nodes:side) or 20:500x700
    #[arg(long = "sweep", value_name = "NODES:AREA", value_parser = parse_sweep)]
    sweep: Vec<SweepPoint>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioFlags,
    /// Output directory (default: out/<protocol>_n<nodes>_seed<seed>).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also write events.log, positions.csv, energy.csv, and modes.csv.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    scenario: ScenarioFlags,
    /// Protocols to compare.
    #[arg(long, value_name = "LIST", default_value = "dsdv,dsr,aodv,deerp", value_parser = parse_protocol, value_delimiter = ',')]
    protocols: Vec<Protocol>,
    /// Seeds to repeat each cell over.
    #[arg(long, value_name = "LIST", default_value = "1,2,3,4,5,6,7,8,9,10", value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out/compare")]
    out: PathBuf,
}

#[derive(Args)]
struct PresetArgs {
    /// sim1 | sim2
    name: String,
    /// Write the TOML here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    /// Comparison directory holding the metric CSVs.
    #[arg(long, value_name = "DIR")]
    from: PathBuf,
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    s.parse()
}

fn parse_mobility(s: &str) -> Result<MobilityModel, String> {
    s.parse()
}

fn parse_pair(s: &str) -> Result<FlowPair, String> {
    let (src, dst) = s
        .split_once(':')
        .ok_or_else(|| format!("expected SRC:DST, got '{s}'"))?;
    Ok(FlowPair {
        src: src.trim().parse().map_err(|e| format!("src: {e}"))?,
        dst: dst.trim().parse().map_err(|e| format!("dst: {e}"))?,
    })
}

fn parse_position(s: &str) -> Result<[f64; 2], String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected X,Y, got '{s}'"))?;
    Ok([
        x.trim().parse().map_err(|e| format!("x: {e}"))?,
        y.trim().parse().map_err(|e| format!("y: {e}"))?,
    ])
}

fn parse_sleep(s: &str) -> Result<SleepWindow, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected NODE:FROM:TO, got '{s}'"));
    }
    Ok(SleepWindow {
        node: parts[0].trim().parse().map_err(|e| format!("node: {e}"))?,
        from_s: parts[1].trim().parse().map_err(|e| format!("from: {e}"))?,
        to_s: parts[2].trim().parse().map_err(|e| format!("to: {e}"))?,
    })
}

fn parse_sweep(s: &str) -> Result<SweepPoint, String> {
    let (nodes, area) = s
        .split_once(':')
        .ok_or_else(|| format!("expected NODES:AREA, got '{s}'"))?;
    let nodes: u32 = nodes.trim().parse().map_err(|e| format!("nodes: {e}"))?;
    let area = match area.split_once('x') {
        Some((w, h)) => Area {
            width_m: w.trim().parse().map_err(|e| format!("width: {e}"))?,
            height_m: h.trim().parse().map_err(|e| format!("height: {e}"))?,
        },
        None => Area::square(area.trim().parse().map_err(|e| format!("side: {e}"))?),
    };
    Ok(SweepPoint { nodes, area })
}

impl ScenarioFlags {
    fn resolve(&self) -> Result<ScenarioConfig, String> {
        let mut cfg = if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            ScenarioConfig::from_toml(&text).map_err(|e| e.to_string())?
        } else if let Some(name) = &self.preset {
            preset(name).map_err(|e| e.to_string())?
        } else {
            ScenarioConfig::default()
        };

        macro_rules! set {
            ($($flag:expr => $field:expr;)*) => {
                $(if let Some(v) = $flag { $field = v; })*
            };
        }
        set! {
            self.seed => cfg.seed;
            self.protocol => cfg.protocol;
            self.nodes => cfg.nodes;
            self.area.map(Area::square) => cfg.area;
            self.area_width => cfg.area.width_m;
            self.area_height => cfg.area.height_m;
            self.mobility => cfg.mobility;
            self.speed_min => cfg.speed.min_mps;
            self.speed_max => cfg.speed.max_mps;
            self.pause => cfg.pause_s;
            self.duration => cfg.duration_s;
            self.rpgm_groups => cfg.rpgm.groups;
            self.rpgm_radius => cfg.rpgm.radius_m;
            self.range => cfg.radio.range_m;
            self.bitrate => cfg.radio.bitrate_bps;
            self.queue_frames => cfg.radio.queue_frames;
            self.mac_overhead => cfg.radio.mac_overhead_bytes;
            self.control_priority => cfg.radio.control_priority;
            self.tx_mw => cfg.energy.tx_mw;
            self.rx_mw => cfg.energy.rx_mw;
            self.idle_mw => cfg.energy.idle_mw;
            self.sleep_mw => cfg.energy.sleep_mw;
            self.initial_mj => cfg.energy.initial_mj;
            self.payload => cfg.traffic.payload_bytes;
            self.rate => cfg.traffic.rate_pps;
            self.traffic_start => cfg.traffic.start_s;
        }
        if let Some(v) = self.flows {
            cfg.traffic.flows = Some(v);
        }
        if let Some(v) = self.traffic_stop {
            cfg.traffic.stop_s = Some(v);
        }
        if let Some(v) = self.sample_interval {
            cfg.sample_interval_s = Some(v);
        }
        if !self.pairs.is_empty() {
            cfg.traffic.pairs = self.pairs.clone();
        }
        if let Some(path) = &self.rpsc_table {
            cfg.rpsc.table = Some(path.clone());
        }
        if let Some(v) = self.rpsc_nearest {
            cfg.rpsc.nearest = v;
        }
        if !self.positions.is_empty() {
            cfg.positions = Some(self.positions.clone());
        }
        if !self.sleep_windows.is_empty() {
            cfg.sleep = self.sleep_windows.clone();
        }
        if !self.sweep.is_empty() {
            cfg.sweep = self.sweep.clone();
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn write_out(path: &Path, content: &str) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
    }
    fs::write(path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn cmd_run(args: &RunArgs) -> Result<(), String> {
    let cfg = args.scenario.resolve()?;
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(cfg.label()));
    let sim = Simulation::new(&cfg).map_err(|e| e.to_string())?;
    if let Some(a) = sim.assignment() {
        println!(
            "selection: idle={} tx={} rx={}",
            a.idle, a.tx, a.rx
        );
    }
    let output = sim.with_trace(args.trace).run();
    let m = &output.metrics;

    write_out(&out_dir.join("manifest.toml"), &cfg.to_toml())?;
    write_out(&out_dir.join("metrics.csv"), &m.to_csv())?;
    if let Some(log) = &output.event_log {
        write_out(&out_dir.join("events.log"), log)?;
    }
    if let Some(csv) = &output.positions_csv {
        write_out(&out_dir.join("positions.csv"), csv)?;
    }
    if args.trace {
        if let Some(csv) = &output.energy_samples_csv {
            write_out(&out_dir.join("energy.csv"), csv)?;
        }
        if let Some(csv) = &output.mode_samples_csv {
            write_out(&out_dir.join("modes.csv"), csv)?;
        }
    }

    println!(
        "{} nodes={} seed={} duration={}s: {} events",
        m.protocol, m.nodes, m.seed, m.duration_s, output.events_processed
    );
    println!(
        "packets: originated={} delivered={} pdr={:.4} drops: queue={} no_route={} dead={} end_of_run={}",
        m.originated,
        m.delivered,
        m.pdr,
        m.dropped_queue,
        m.dropped_no_route,
        m.dropped_dead_node,
        m.dropped_end_of_run
    );
    match m.mean_delay_s {
        Some(d) => println!(
            "throughput={:.1} bps mean_delay={:.4}s overhead={:.2} control frames/delivery",
            m.throughput_bps,
            d,
            m.routing_overhead.unwrap_or(0.0)
        ),
        None => println!("no deliveries"),
    }
    println!(
        "energy per node (mJ): idle={:.1} sleep={:.1} tx={:.2} rx={:.2} remaining={:.1} dead={}",
        m.mean_idle_mj, m.mean_sleep_mj, m.mean_tx_mj, m.mean_rx_mj, m.mean_remaining_mj, m.nodes_dead
    );
    println!("wrote {}", out_dir.display());
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<(), String> {
    let base = args.scenario.resolve()?;
    let spec = CompareSpec {
        base: base.clone(),
        protocols: args.protocols.clone(),
        seeds: args.seeds.clone(),
    };
    let cells = spec.protocols.len() * base.sweep_points().len() * spec.seeds.len();
    println!(
        "comparing {} protocols x {} points x {} seeds = {} runs",
        spec.protocols.len(),
        base.sweep_points().len(),
        spec.seeds.len(),
        cells
    );
    let comparison = compare(&spec);

    fs::create_dir_all(&args.out).map_err(|e| format!("cannot create {}: {e}", args.out.display()))?;
    write_out(&args.out.join("manifest.toml"), &base.to_toml())?;
    let files = report::write_report(&args.out, &comparison).map_err(|e| e.to_string())?;

    for stat in comparison.cell_stats("mean_remaining_mj") {
        println!(
            "  {:<5} nodes={:<3} remaining={:.1} mJ (sd {:.1}, n={})",
            stat.protocol.to_string(),
            stat.nodes,
            stat.mean,
            stat.stddev,
            stat.n
        );
    }
    if !comparison.failures.is_empty() {
        println!("{} cells failed; see failures.csv", comparison.failures.len());
    }
    println!("wrote {} files to {}", files.len() + 1, args.out.display());
    Ok(())
}

fn cmd_preset(args: &PresetArgs) -> Result<(), String> {
    let cfg = preset(&args.name).map_err(|e| e.to_string())?;
    let text = cfg.to_toml();
    match &args.out {
        Some(path) => {
            write_out(path, &text)?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_render(args: &RenderArgs) -> Result<(), String> {
    let files = report::render_charts_from_dir(&args.from).map_err(|e| e.to_string())?;
    for f in &files {
        println!("rendered {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Compare(args) => cmd_compare(args),
        Cmd::Preset(args) => cmd_preset(args),
        Cmd::Render(args) => cmd_render(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
