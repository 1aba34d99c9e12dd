//! Scenario configuration: the single document that pins down a run.
//!
//! A scenario serializes to TOML with a flat dotted-key schema
//! (`speed.max_mps = 5.0`, `radio.range_m = 250.0`, …); the same document
//! doubles as the run manifest, so a saved manifest plus the crate version
//! reproduces a run byte-for-byte. Two built-in presets cover the stock
//! experiment families: `sim1` (long group-mobility sweeps over growing
//! areas) and `sim2` (a 300 s random-waypoint density sweep).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::EnergyParams;
use crate::mobility::{Area, MobilityConfig, MobilityModel, Position};
use crate::radio::RadioConfig;
use crate::rng::RngStreams;
use crate::routing::Protocol;
use crate::traffic::{self, CbrFlow, NodeId, TrafficError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedRange {
    pub min_mps: f64,
    pub max_mps: f64,
}

impl Default for SpeedRange {
    fn default() -> Self {
        SpeedRange {
            min_mps: 1.0,
            max_mps: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RpgmParams {
    pub groups: u32,
    pub radius_m: f64,
}

impl Default for RpgmParams {
    fn default() -> Self {
        RpgmParams {
            groups: 4,
            radius_m: 50.0,
        }
    }
}

/// Node power draw and budget; the link bitrate lives under `radio`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub tx_mw: f64,
    pub rx_mw: f64,
    pub idle_mw: f64,
    pub sleep_mw: f64,
    pub initial_mj: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        let p = EnergyParams::default();
        EnergyConfig {
            tx_mw: p.tx_power_mw,
            rx_mw: p.rx_power_mw,
            idle_mw: p.idle_power_mw,
            sleep_mw: p.sleep_power_mw,
            initial_mj: p.initial_mj,
        }
    }
}

/// An explicit flow endpoint pair; normally flows are drawn from the
/// traffic RNG stream instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowPair {
    pub src: u32,
    pub dst: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    /// Flow count; defaults to `max(1, nodes / 4)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flows: Option<u32>,
    pub payload_bytes: u32,
    pub rate_pps: f64,
    pub start_s: f64,
    /// Defaults to the scenario duration.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_s: Option<f64>,
    /// Explicit endpoints; when non-empty these define the flows and
    /// `flows` is ignored.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<FlowPair>,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            flows: None,
            payload_bytes: 512,
            rate_pps: 8.0,
            start_s: 1.0,
            stop_s: None,
            pairs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RpscConfig {
    /// Path to a selection-table file; the built-in table when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    /// Fall back to the nearest row instead of failing when no row
    /// matches the scenario.
    pub nearest: bool,
}

/// A scheduled radio-off window for one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SleepWindow {
    pub node: u32,
    pub from_s: f64,
    pub to_s: f64,
}

/// One sweep point for batch comparisons: a node count and its area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    pub nodes: u32,
    pub area: Area,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub nodes: u32,
    pub seed: u64,
    pub protocol: Protocol,
    pub mobility: MobilityModel,
    pub duration_s: f64,
    pub pause_s: f64,
    pub area: Area,
    pub speed: SpeedRange,
    pub rpgm: RpgmParams,
    pub radio: RadioConfig,
    pub energy: EnergyConfig,
    pub traffic: TrafficConfig,
    pub rpsc: RpscConfig,
    /// Pin initial node positions (meters); with `pause_s >= duration_s`
    /// this freezes the topology entirely.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<[f64; 2]>>,
    /// Emit energy/mode snapshots at this interval.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_interval_s: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sleep: Vec<SleepWindow>,
    /// Node-count/area sweep used by `compare`; ignored by single runs.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepPoint>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            nodes: 10,
            seed: 1,
            protocol: Protocol::Deerp,
            mobility: MobilityModel::Rwp,
            duration_s: 100.0,
            pause_s: 0.0,
            area: Area::square(600.0),
            speed: SpeedRange::default(),
            rpgm: RpgmParams::default(),
            radio: RadioConfig::default(),
            energy: EnergyConfig::default(),
            traffic: TrafficConfig::default(),
            rpsc: RpscConfig::default(),
            positions: None,
            sample_interval_s: None,
            sleep: Vec::new(),
            sweep: Vec::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("unknown preset '{0}' (known presets: sim1, sim2)")]
    UnknownPreset(String),
    #[error("cannot parse scenario config: {0}")]
    Parse(String),
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    /// When traffic stops: explicit stop or the end of the run.
    pub fn traffic_stop_s(&self) -> f64 {
        self.traffic.stop_s.unwrap_or(self.duration_s)
    }

    /// Flow count once defaults are applied.
    pub fn flow_count(&self) -> usize {
        if !self.traffic.pairs.is_empty() {
            return self.traffic.pairs.len();
        }
        self.traffic
            .flows
            .map(|f| f as usize)
            .unwrap_or_else(|| traffic::default_flow_count(self.nodes as usize))
    }

    pub fn mobility_config(&self) -> MobilityConfig {
        MobilityConfig {
            model: self.mobility,
            area: self.area,
            speed_min_mps: self.speed.min_mps,
            speed_max_mps: self.speed.max_mps,
            pause_s: self.pause_s,
            groups: self.rpgm.groups,
            group_radius_m: self.rpgm.radius_m,
        }
    }

    pub fn energy_params(&self) -> EnergyParams {
        EnergyParams {
            tx_power_mw: self.energy.tx_mw,
            rx_power_mw: self.energy.rx_mw,
            idle_power_mw: self.energy.idle_mw,
            sleep_power_mw: self.energy.sleep_mw,
            bitrate_bps: self.radio.bitrate_bps,
            initial_mj: self.energy.initial_mj,
        }
    }

    pub fn fixed_positions(&self) -> Option<Vec<Position>> {
        self.positions
            .as_ref()
            .map(|ps| ps.iter().map(|[x, y]| Position { x: *x, y: *y }).collect())
    }

    /// Materialize the traffic flows, drawing endpoints from the traffic
    /// RNG stream unless explicit pairs are configured.
    pub fn resolve_flows(&self, streams: &RngStreams) -> Result<Vec<CbrFlow>, TrafficError> {
        let stop_s = self.traffic_stop_s();
        if !self.traffic.pairs.is_empty() {
            return Ok(self
                .traffic
                .pairs
                .iter()
                .map(|p| CbrFlow {
                    src: NodeId(p.src),
                    dst: NodeId(p.dst),
                    payload_bytes: self.traffic.payload_bytes,
                    rate_pps: self.traffic.rate_pps,
                    start_s: self.traffic.start_s,
                    stop_s,
                })
                .collect());
        }
        traffic::build_flows(
            self.nodes as usize,
            self.flow_count(),
            self.traffic.payload_bytes,
            self.traffic.rate_pps,
            self.traffic.start_s,
            stop_s,
            streams,
        )
    }

    /// Short tag for file names: protocol, node count, seed.
    pub fn label(&self) -> String {
        format!("{}_n{}_seed{}", self.protocol, self.nodes, self.seed)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut errs: Vec<String> = Vec::new();
        let mut err = |msg: String| errs.push(msg);

        if self.nodes < 2 {
            err(format!("nodes: traffic needs at least 2 nodes, got {}", self.nodes));
        }
        if !(self.duration_s > 0.0) {
            err(format!("duration_s: must be positive, got {}", self.duration_s));
        }
        if !(self.pause_s >= 0.0) {
            err(format!("pause_s: must be non-negative, got {}", self.pause_s));
        }
        if !(self.area.width_m > 0.0 && self.area.height_m > 0.0) {
            err(format!(
                "area: dimensions must be positive, got {} x {}",
                self.area.width_m, self.area.height_m
            ));
        }
        if !(self.speed.min_mps > 0.0 && self.speed.min_mps <= self.speed.max_mps) {
            err(format!(
                "speed: need 0 < min_mps <= max_mps, got {} .. {}",
                self.speed.min_mps, self.speed.max_mps
            ));
        }
        if self.mobility == MobilityModel::Rpgm {
            if self.rpgm.groups == 0 || self.rpgm.groups > self.nodes {
                err(format!(
                    "rpgm.groups: need 1 ..= nodes ({}), got {}",
                    self.nodes, self.rpgm.groups
                ));
            }
            if !(self.rpgm.radius_m >= 0.0) {
                err(format!("rpgm.radius_m: must be non-negative, got {}", self.rpgm.radius_m));
            }
        }
        if !(self.radio.range_m > 0.0) {
            err(format!("radio.range_m: must be positive, got {}", self.radio.range_m));
        }
        if !(self.radio.bitrate_bps > 0.0) {
            err(format!("radio.bitrate_bps: must be positive, got {}", self.radio.bitrate_bps));
        }
        if self.radio.queue_frames == 0 {
            err("radio.queue_frames: must hold at least 1 frame".into());
        }
        for (name, v) in [
            ("energy.tx_mw", self.energy.tx_mw),
            ("energy.rx_mw", self.energy.rx_mw),
            ("energy.idle_mw", self.energy.idle_mw),
            ("energy.sleep_mw", self.energy.sleep_mw),
        ] {
            if !(v >= 0.0) {
                err(format!("{name}: must be non-negative, got {v}"));
            }
        }
        if !(self.energy.initial_mj > 0.0) {
            err(format!("energy.initial_mj: must be positive, got {}", self.energy.initial_mj));
        }

        if self.traffic.payload_bytes == 0 {
            err("traffic.payload_bytes: must be positive".into());
        }
        if !(self.traffic.rate_pps > 0.0) {
            err(format!("traffic.rate_pps: must be positive, got {}", self.traffic.rate_pps));
        }
        if !(self.traffic.start_s >= 0.0) {
            err(format!("traffic.start_s: must be non-negative, got {}", self.traffic.start_s));
        }
        let stop = self.traffic_stop_s();
        if stop > self.duration_s {
            err(format!(
                "traffic.stop_s: flows cannot outlive the run ({} > {})",
                stop, self.duration_s
            ));
        }
        if self.traffic.start_s >= stop {
            err(format!(
                "traffic: start_s {} must precede stop {}",
                self.traffic.start_s, stop
            ));
        }
        // flows = 0 is allowed: a traffic-free run still exercises the
        // control plane and the idle-energy accounting
        if let Some(flows) = self.traffic.flows {
            let max_pairs = self.nodes as u64 * (self.nodes.saturating_sub(1)) as u64;
            if flows as u64 > max_pairs {
                err(format!(
                    "traffic.flows: {} distinct pairs impossible with {} nodes",
                    flows, self.nodes
                ));
            }
        }
        for (i, p) in self.traffic.pairs.iter().enumerate() {
            if p.src >= self.nodes || p.dst >= self.nodes {
                err(format!(
                    "traffic.pairs[{i}]: endpoints {} -> {} out of range (nodes = {})",
                    p.src, p.dst, self.nodes
                ));
            }
            if p.src == p.dst {
                err(format!("traffic.pairs[{i}]: src equals dst ({})", p.src));
            }
        }

        if let Some(ps) = &self.positions {
            if ps.len() != self.nodes as usize {
                err(format!(
                    "positions: got {} entries for {} nodes",
                    ps.len(),
                    self.nodes
                ));
            }
            for (i, [x, y]) in ps.iter().enumerate() {
                if !(*x >= 0.0 && *x <= self.area.width_m && *y >= 0.0 && *y <= self.area.height_m)
                {
                    err(format!("positions[{i}]: ({x}, {y}) outside the area"));
                }
            }
        }
        if let Some(s) = self.sample_interval_s {
            if !(s > 0.0) {
                err(format!("sample_interval_s: must be positive, got {s}"));
            }
        }
        for (i, w) in self.sleep.iter().enumerate() {
            if w.node >= self.nodes {
                err(format!("sleep[{i}]: node {} out of range", w.node));
            }
            if !(w.from_s >= 0.0 && w.from_s < w.to_s) {
                err(format!("sleep[{i}]: window {} .. {} is invalid", w.from_s, w.to_s));
            }
        }
        for (i, p) in self.sweep.iter().enumerate() {
            if p.nodes < 2 {
                err(format!("sweep[{i}]: needs at least 2 nodes, got {}", p.nodes));
            }
            if !(p.area.width_m > 0.0 && p.area.height_m > 0.0) {
                err(format!("sweep[{i}]: area must be positive"));
            }
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Invalid(errs))
        }
    }

    /// This scenario at one sweep point.
    pub fn at_sweep_point(&self, point: SweepPoint) -> ScenarioConfig {
        let mut cfg = self.clone();
        cfg.nodes = point.nodes;
        cfg.area = point.area;
        cfg.sweep = Vec::new();
        cfg
    }

    /// The sweep to iterate for comparisons: configured points, or just
    /// the scenario itself.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        if self.sweep.is_empty() {
            vec![SweepPoint {
                nodes: self.nodes,
                area: self.area,
            }]
        } else {
            self.sweep.clone()
        }
    }
}

/// Built-in experiment families.
///
/// `sim1`: 900 s of group mobility at 0.5–5 m/s with zero pause,
/// CBR 512 B @ 8 pkt/s, sweeping node count and area in lockstep:
/// (20, 500²), (40, 1000²), (60, 1500²), (80, 2000²).
///
/// `sim2`: same parameters except 300 s of random-waypoint motion in a
/// fixed 600 m × 600 m area, sweeping node counts {5, 10, 15, 20, 25}.
pub fn preset(name: &str) -> Result<ScenarioConfig, ScenarioError> {
    let mut cfg = ScenarioConfig {
        speed: SpeedRange {
            min_mps: 0.5,
            max_mps: 5.0,
        },
        pause_s: 0.0,
        ..ScenarioConfig::default()
    };
    match name {
        "sim1" => {
            cfg.mobility = MobilityModel::Rpgm;
            cfg.duration_s = 900.0;
            cfg.sweep = [(20u32, 500.0), (40, 1000.0), (60, 1500.0), (80, 2000.0)]
                .into_iter()
                .map(|(nodes, side)| SweepPoint {
                    nodes,
                    area: Area::square(side),
                })
                .collect();
        }
        "sim2" => {
            cfg.mobility = MobilityModel::Rwp;
            cfg.duration_s = 300.0;
            cfg.sweep = [5u32, 10, 15, 20, 25]
                .into_iter()
                .map(|nodes| SweepPoint {
                    nodes,
                    area: Area::square(600.0),
                })
                .collect();
        }
        other => return Err(ScenarioError::UnknownPreset(other.to_string())),
    }
    let first = cfg.sweep[0];
    cfg.nodes = first.nodes;
    cfg.area = first.area;
    cfg.validate().expect("presets validate");
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml();
        let back = ScenarioConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn dotted_key_overrides_parse() {
        let text = r#"
            nodes = 25
            seed = 7
            protocol = "aodv"
            mobility = "rpgm"
            duration_s = 300.0
            speed.max_mps = 10.0
            radio.range_m = 100.0
            traffic.rate_pps = 4.0
            rpgm.groups = 5
        "#;
        let cfg = ScenarioConfig::from_toml(text).unwrap();
        assert_eq!(cfg.nodes, 25);
        assert_eq!(cfg.protocol, Protocol::Aodv);
        assert_eq!(cfg.mobility, MobilityModel::Rpgm);
        assert_eq!(cfg.speed.max_mps, 10.0);
        assert_eq!(cfg.radio.range_m, 100.0);
        assert_eq!(cfg.traffic.rate_pps, 4.0);
        assert_eq!(cfg.rpgm.groups, 5);
        // Untouched keys keep their defaults.
        assert_eq!(cfg.radio.queue_frames, 50);
        assert_eq!(cfg.energy.tx_mw, 330.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            ScenarioConfig::from_toml("nodez = 10\n"),
            Err(ScenarioError::Parse(_))
        ));
    }

    #[test]
    fn validation_catches_bad_fields() {
        let check = |mutate: &dyn Fn(&mut ScenarioConfig), needle: &str| {
            let mut cfg = ScenarioConfig::default();
            mutate(&mut cfg);
            match cfg.validate() {
                Err(ScenarioError::Invalid(msgs)) => {
                    assert!(
                        msgs.iter().any(|m| m.contains(needle)),
                        "expected an error mentioning '{needle}', got {msgs:?}"
                    );
                }
                other => panic!("expected invalid ({needle}), got {other:?}"),
            }
        };

        check(&|c| c.nodes = 1, "at least 2 nodes");
        check(&|c| c.duration_s = 0.0, "duration_s");
        check(&|c| c.speed.min_mps = 0.0, "speed");
        check(
            &|c| {
                c.speed.min_mps = 6.0;
                c.speed.max_mps = 2.0
            },
            "speed",
        );
        check(&|c| c.area.width_m = -1.0, "area");
        check(
            &|c| {
                c.mobility = MobilityModel::Rpgm;
                c.rpgm.groups = 0
            },
            "rpgm.groups",
        );
        check(&|c| c.radio.queue_frames = 0, "queue_frames");
        check(&|c| c.traffic.rate_pps = 0.0, "rate_pps");
        check(&|c| c.traffic.stop_s = Some(1e9), "outlive");
        check(&|c| c.traffic.flows = Some(9999), "impossible");
        check(
            &|c| c.traffic.pairs = vec![FlowPair { src: 0, dst: 99 }],
            "out of range",
        );
        check(
            &|c| c.traffic.pairs = vec![FlowPair { src: 3, dst: 3 }],
            "src equals dst",
        );
        check(&|c| c.positions = Some(vec![[0.0, 0.0]]), "positions");
        check(
            &|c| {
                c.sleep = vec![SleepWindow {
                    node: 0,
                    from_s: 5.0,
                    to_s: 2.0,
                }]
            },
            "sleep[0]",
        );
        check(&|c| c.sample_interval_s = Some(0.0), "sample_interval_s");
    }

    #[test]
    fn presets_match_the_published_parameters() {
        let sim1 = preset("sim1").unwrap();
        assert_eq!(sim1.duration_s, 900.0);
        assert_eq!(sim1.mobility, MobilityModel::Rpgm);
        assert_eq!(sim1.pause_s, 0.0);
        assert_eq!((sim1.speed.min_mps, sim1.speed.max_mps), (0.5, 5.0));
        assert_eq!(sim1.traffic.payload_bytes, 512);
        assert_eq!(sim1.traffic.rate_pps, 8.0);
        assert_eq!(sim1.radio.queue_frames, 50);
        let pts: Vec<(u32, f64)> = sim1
            .sweep
            .iter()
            .map(|p| (p.nodes, p.area.width_m))
            .collect();
        assert_eq!(
            pts,
            vec![(20, 500.0), (40, 1000.0), (60, 1500.0), (80, 2000.0)]
        );

        let sim2 = preset("sim2").unwrap();
        assert_eq!(sim2.duration_s, 300.0);
        assert_eq!(sim2.mobility, MobilityModel::Rwp);
        assert_eq!(sim2.area, Area::square(600.0));
        let counts: Vec<u32> = sim2.sweep.iter().map(|p| p.nodes).collect();
        assert_eq!(counts, vec![5, 10, 15, 20, 25]);
        // Everything else inherited from sim1.
        assert_eq!((sim2.speed.min_mps, sim2.speed.max_mps), (0.5, 5.0));
        assert_eq!(sim2.pause_s, 0.0);
        assert_eq!(sim2.traffic.payload_bytes, 512);

        assert!(matches!(
            preset("sim3"),
            Err(ScenarioError::UnknownPreset(_))
        ));
    }

    #[test]
    fn explicit_pairs_override_random_flows() {
        let mut cfg = ScenarioConfig::default();
        cfg.traffic.pairs = vec![FlowPair { src: 0, dst: 9 }, FlowPair { src: 3, dst: 4 }];
        let streams = RngStreams::new(cfg.seed);
        let flows = cfg.resolve_flows(&streams).unwrap();
        assert_eq!(flows.len(), 2);
        assert_eq!(flows[0].src, NodeId(0));
        assert_eq!(flows[0].dst, NodeId(9));
        assert_eq!(flows[0].stop_s, cfg.duration_s);

        cfg.traffic.pairs.clear();
        let flows = cfg.resolve_flows(&streams).unwrap();
        assert_eq!(flows.len(), 2, "10 nodes -> default 2 flows");
        let again = cfg.resolve_flows(&streams).unwrap();
        assert_eq!(flows, again, "flow draw is deterministic per seed");
    }

    #[test]
    fn sweep_point_expansion() {
        let sim2 = preset("sim2").unwrap();
        let pts = sim2.sweep_points();
        assert_eq!(pts.len(), 5);
        let at = sim2.at_sweep_point(pts[3]);
        assert_eq!(at.nodes, 20);
        assert!(at.sweep.is_empty());
        assert_eq!(at.duration_s, 300.0);

        let plain = ScenarioConfig::default();
        assert_eq!(plain.sweep_points().len(), 1);
    }
}
