//! Node mobility: random waypoint (RWP) and reference-point group mobility
//! (RPGM).
//!
//! Trajectories are generated up front from the mobility RNG stream and then
//! sampled as pure functions of time. Nothing the protocols do can perturb
//! a node's path, which keeps cross-protocol comparisons fair: for a fixed
//! seed every protocol sees the very same motion.

use crate::rng::{RngStreams, StreamId};
use crate::time::SimTime;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn distance(self, other: Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Rectangular deployment area with its origin at (0, 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width_m: f64,
    pub height_m: f64,
}

impl Area {
    pub fn square(side_m: f64) -> Area {
        Area {
            width_m: side_m,
            height_m: side_m,
        }
    }

    pub fn contains(&self, p: Position) -> bool {
        p.x >= 0.0 && p.x <= self.width_m && p.y >= 0.0 && p.y <= self.height_m
    }

    pub fn clamp(&self, p: Position) -> Position {
        Position {
            x: p.x.clamp(0.0, self.width_m),
            y: p.y.clamp(0.0, self.height_m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MobilityModel {
    Rwp,
    Rpgm,
}

impl std::fmt::Display for MobilityModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MobilityModel::Rwp => write!(f, "rwp"),
            MobilityModel::Rpgm => write!(f, "rpgm"),
        }
    }
}

impl std::str::FromStr for MobilityModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rwp" => Ok(MobilityModel::Rwp),
            "rpgm" => Ok(MobilityModel::Rpgm),
            other => Err(format!("unknown mobility model '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityConfig {
    pub model: MobilityModel,
    pub area: Area,
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
    pub pause_s: f64,
    /// RPGM only: number of groups; nodes are split into contiguous blocks
    /// and the first node of each block is its reference (leader).
    pub groups: u32,
    /// RPGM only: members stay within this distance of their leader.
    pub group_radius_m: f64,
}

/// One RWP movement decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub target: Position,
    pub speed_mps: f64,
    pub depart_at: SimTime,
}

/// Draw the next waypoint: uniform target in the area, uniform speed in
/// `[speed_min, speed_max]`, departure delayed by the pause time.
pub fn next_leg(cfg: &MobilityConfig, now: SimTime, rng: &mut impl Rng) -> Waypoint {
    let target = Position {
        x: rng.gen_range(0.0..=cfg.area.width_m),
        y: rng.gen_range(0.0..=cfg.area.height_m),
    };
    let speed_mps = if cfg.speed_min_mps == cfg.speed_max_mps {
        cfg.speed_min_mps
    } else {
        rng.gen_range(cfg.speed_min_mps..=cfg.speed_max_mps)
    };
    Waypoint {
        target,
        speed_mps,
        depart_at: now + cfg.pause_s,
    }
}

/// Piecewise-linear segment: the node moves from `p0` at `t0` to `p1` at
/// `t1` (holds still when `p0 == p1`).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    t0: f64,
    t1: f64,
    p0: Position,
    p1: Position,
}

/// A single node's full path for the run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    segments: Vec<Segment>,
}

impl Trajectory {
    pub fn position_at(&self, t: SimTime) -> Position {
        let t = t.secs();
        let first = self.segments.first().expect("trajectory has segments");
        if t <= first.t0 {
            return first.p0;
        }
        let last = self.segments.last().unwrap();
        if t >= last.t1 {
            return last.p1;
        }
        // binary search for the segment containing t
        let idx = self
            .segments
            .partition_point(|s| s.t1 < t)
            .min(self.segments.len() - 1);
        let s = &self.segments[idx];
        if s.t1 <= s.t0 {
            return s.p1;
        }
        let f = ((t - s.t0) / (s.t1 - s.t0)).clamp(0.0, 1.0);
        Position {
            x: s.p0.x + (s.p1.x - s.p0.x) * f,
            y: s.p0.y + (s.p1.y - s.p0.y) * f,
        }
    }

    fn push(&mut self, seg: Segment) {
        if seg.t1 > seg.t0 {
            self.segments.push(seg);
        }
    }

    /// Breakpoints `(time, position)`, used to derive member paths in RPGM.
    fn breakpoints(&self) -> Vec<(f64, Position)> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        let first = self.segments.first().unwrap();
        out.push((first.t0, first.p0));
        for s in &self.segments {
            out.push((s.t1, s.p1));
        }
        out
    }
}

/// Trajectories for every node in the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityPlan {
    trajectories: Vec<Trajectory>,
}

impl MobilityPlan {
    pub fn node_count(&self) -> usize {
        self.trajectories.len()
    }

    pub fn position_at(&self, node: usize, t: SimTime) -> Position {
        self.trajectories[node].position_at(t)
    }

    /// FNV-1a over every segment; equal hashes across runs demonstrate the
    /// motion was identical (used to verify protocol choice cannot leak into
    /// the mobility stream).
    pub fn trace_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100_0000_01b3);
            }
        };
        for tr in &self.trajectories {
            for s in &tr.segments {
                eat(s.t0);
                eat(s.t1);
                eat(s.p0.x);
                eat(s.p0.y);
                eat(s.p1.x);
                eat(s.p1.y);
            }
        }
        h
    }

    /// CSV of sampled positions: `time,node,x,y`.
    pub fn positions_csv(&self, duration_s: f64, interval_s: f64) -> String {
        let mut out = String::from("time,node,x,y\n");
        let steps = (duration_s / interval_s).floor() as u64;
        for step in 0..=steps {
            let t = SimTime::new(step as f64 * interval_s);
            for node in 0..self.trajectories.len() {
                let p = self.position_at(node, t);
                out.push_str(&format!("{},{},{:.3},{:.3}\n", t.secs(), node, p.x, p.y));
            }
        }
        out
    }
}

fn initial_position(area: &Area, rng: &mut impl Rng) -> Position {
    Position {
        x: rng.gen_range(0.0..=area.width_m),
        y: rng.gen_range(0.0..=area.height_m),
    }
}

/// Build one RWP trajectory covering `[0, horizon]`. The node holds its
/// starting position for the pause time, then walks leg after leg.
fn build_rwp(
    cfg: &MobilityConfig,
    start: Position,
    horizon_s: f64,
    rng: &mut impl Rng,
) -> Trajectory {
    let mut tr = Trajectory {
        segments: Vec::new(),
    };
    let mut now = 0.0;
    let mut pos = start;
    if cfg.pause_s > 0.0 {
        let hold_until = (cfg.pause_s).min(horizon_s.max(0.0) + 1.0);
        tr.push(Segment {
            t0: 0.0,
            t1: hold_until,
            p0: pos,
            p1: pos,
        });
        now = hold_until;
    }
    while now <= horizon_s {
        let wp = next_leg(cfg, SimTime::new(now), rng);
        let dist = pos.distance(wp.target);
        if dist <= f64::EPSILON {
            continue;
        }
        let arrive = now + dist / wp.speed_mps;
        tr.push(Segment {
            t0: now,
            t1: arrive,
            p0: pos,
            p1: wp.target,
        });
        pos = wp.target;
        now = arrive;
        if cfg.pause_s > 0.0 && now <= horizon_s {
            tr.push(Segment {
                t0: now,
                t1: now + cfg.pause_s,
                p0: pos,
                p1: pos,
            });
            now += cfg.pause_s;
        }
    }
    if tr.segments.is_empty() {
        tr.push(Segment {
            t0: 0.0,
            t1: horizon_s.max(1.0),
            p0: pos,
            p1: pos,
        });
    }
    tr
}

/// Uniform draw from a disk of the given radius.
fn deviation(radius: f64, rng: &mut impl Rng) -> (f64, f64) {
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = radius * rng.gen_range(0.0f64..=1.0).sqrt();
    (r * theta.cos(), r * theta.sin())
}

/// Contiguous group blocks: `groups` blocks as even as possible, first node
/// of each block is the leader.
pub fn rpgm_groups(node_count: usize, groups: u32) -> Vec<(usize, usize)> {
    let g = (groups.max(1) as usize).min(node_count.max(1));
    let base = node_count / g;
    let extra = node_count % g;
    let mut out = Vec::with_capacity(g);
    let mut start = 0;
    for i in 0..g {
        let len = base + usize::from(i < extra);
        if len == 0 {
            continue;
        }
        out.push((start, len));
        start += len;
    }
    out
}

/// Generate trajectories for all nodes. `fixed_positions` pins initial
/// placements (used by static test topologies together with a pause at
/// least as long as the run).
pub fn build_plan(
    cfg: &MobilityConfig,
    node_count: usize,
    horizon_s: f64,
    streams: &RngStreams,
    fixed_positions: Option<&[Position]>,
) -> MobilityPlan {
    let start_of = |node: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Position {
        match fixed_positions.and_then(|ps| ps.get(node)) {
            Some(p) => *p,
            None => initial_position(&cfg.area, rng),
        }
    };
    let mut trajectories: Vec<Option<Trajectory>> = vec![None; node_count];
    match cfg.model {
        MobilityModel::Rwp => {
            for node in 0..node_count {
                let mut rng = streams.node_stream(StreamId::Mobility, node as u32);
                let start = start_of(node, &mut rng);
                trajectories[node] = Some(build_rwp(cfg, start, horizon_s, &mut rng));
            }
        }
        MobilityModel::Rpgm => {
            for (first, len) in rpgm_groups(node_count, cfg.groups) {
                let leader = first;
                let mut lrng = streams.node_stream(StreamId::Mobility, leader as u32);
                let lstart = start_of(leader, &mut lrng);
                let ltraj = build_rwp(cfg, lstart, horizon_s, &mut lrng);
                let points = ltraj.breakpoints();
                for member in (first + 1)..(first + len) {
                    let mut mrng = streams.node_stream(StreamId::Mobility, member as u32);
                    let mut tr = Trajectory {
                        segments: Vec::new(),
                    };
                    // one deviation per leader breakpoint; held through pauses
                    let (dx, dy) = deviation(cfg.group_radius_m, &mut mrng);
                    let mut prev_t = points[0].0;
                    let mut prev_p = cfg.area.clamp(Position {
                        x: points[0].1.x + dx,
                        y: points[0].1.y + dy,
                    });
                    for window in points.windows(2) {
                        let (t1, lp1) = window[1];
                        let (t0, lp0) = window[0];
                        let next_p = if lp0 == lp1 {
                            prev_p // leader pausing: member holds too
                        } else {
                            let (dx, dy) = deviation(cfg.group_radius_m, &mut mrng);
                            cfg.area.clamp(Position {
                                x: lp1.x + dx,
                                y: lp1.y + dy,
                            })
                        };
                        tr.push(Segment {
                            t0: prev_t.max(t0),
                            t1,
                            p0: prev_p,
                            p1: next_p,
                        });
                        prev_t = t1;
                        prev_p = next_p;
                    }
                    if tr.segments.is_empty() {
                        tr.push(Segment {
                            t0: 0.0,
                            t1: horizon_s.max(1.0),
                            p0: prev_p,
                            p1: prev_p,
                        });
                    }
                    trajectories[member] = Some(tr);
                }
                trajectories[leader] = Some(ltraj);
            }
        }
    }
    MobilityPlan {
        trajectories: trajectories
            .into_iter()
            .map(|t| t.expect("every node gets a trajectory"))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(model: MobilityModel) -> MobilityConfig {
        MobilityConfig {
            model,
            area: Area::square(600.0),
            speed_min_mps: 1.0,
            speed_max_mps: 10.0,
            pause_s: 0.0,
            groups: 4,
            group_radius_m: 50.0,
        }
    }

    #[test]
    fn midpoint_interpolation() {
        // (0,0) -> (300,400) is 500 m; at 5 m/s the leg takes 100 s
        let tr = Trajectory {
            segments: vec![Segment {
                t0: 0.0,
                t1: 100.0,
                p0: Position { x: 0.0, y: 0.0 },
                p1: Position { x: 300.0, y: 400.0 },
            }],
        };
        let p = tr.position_at(SimTime::new(50.0));
        assert!((p.x - 150.0).abs() < 1e-9);
        assert!((p.y - 200.0).abs() < 1e-9);
        // endpoints and beyond
        assert_eq!(tr.position_at(SimTime::ZERO), Position { x: 0.0, y: 0.0 });
        let end = tr.position_at(SimTime::new(250.0));
        assert!((end.x - 300.0).abs() < 1e-9 && (end.y - 400.0).abs() < 1e-9);
    }

    #[test]
    fn zero_pause_departs_immediately() {
        let c = cfg(MobilityModel::Rwp);
        let streams = RngStreams::new(7);
        let mut rng = streams.node_stream(StreamId::Mobility, 0);
        let wp = next_leg(&c, SimTime::new(12.0), &mut rng);
        assert_eq!(wp.depart_at, SimTime::new(12.0));
    }

    #[test]
    fn waypoints_stay_in_area_and_speeds_in_range() {
        let c = cfg(MobilityModel::Rwp);
        let streams = RngStreams::new(42);
        let mut rng = streams.stream(StreamId::Mobility);
        let mut speed_sum = 0.0;
        let n = 10_000;
        for _ in 0..n {
            let wp = next_leg(&c, SimTime::ZERO, &mut rng);
            assert!(c.area.contains(wp.target));
            assert!(wp.speed_mps >= 1.0 && wp.speed_mps <= 10.0);
            speed_sum += wp.speed_mps;
        }
        // uniform [1,10] has mean 5.5
        let mean = speed_sum / n as f64;
        assert!(
            (mean - 5.5).abs() <= 0.2,
            "speed mean {mean} strayed from 5.5"
        );
    }

    #[test]
    fn sampled_positions_never_leave_area() {
        for model in [MobilityModel::Rwp, MobilityModel::Rpgm] {
            let c = cfg(model);
            let plan = build_plan(&c, 12, 300.0, &RngStreams::new(5), None);
            for node in 0..12 {
                for step in 0..=600 {
                    let p = plan.position_at(node, SimTime::new(step as f64 * 0.5));
                    assert!(c.area.contains(p), "{model} node {node} left the area");
                }
            }
        }
    }

    #[test]
    fn rpgm_members_stay_within_group_radius() {
        let c = cfg(MobilityModel::Rpgm);
        let plan = build_plan(&c, 20, 300.0, &RngStreams::new(11), None);
        let groups = rpgm_groups(20, 4);
        assert_eq!(groups, vec![(0, 5), (5, 5), (10, 5), (15, 5)]);
        for (first, len) in groups {
            for member in first..first + len {
                for step in 0..1000 {
                    let t = SimTime::new(step as f64 * 0.3);
                    let lp = plan.position_at(first, t);
                    let mp = plan.position_at(member, t);
                    assert!(
                        lp.distance(mp) <= c.group_radius_m + 1e-9,
                        "member {member} strayed {} m from leader at {t}",
                        lp.distance(mp)
                    );
                }
            }
        }
    }

    #[test]
    fn zero_radius_members_ride_the_leader() {
        let mut c = cfg(MobilityModel::Rpgm);
        c.group_radius_m = 0.0;
        c.groups = 1;
        let plan = build_plan(&c, 4, 100.0, &RngStreams::new(3), None);
        for step in 0..200 {
            let t = SimTime::new(step as f64 * 0.5);
            let lp = plan.position_at(0, t);
            for member in 1..4 {
                assert!(lp.distance(plan.position_at(member, t)) < 1e-9);
            }
        }
    }

    #[test]
    fn same_seed_same_plan_different_seed_differs() {
        let c = cfg(MobilityModel::Rwp);
        let a = build_plan(&c, 8, 200.0, &RngStreams::new(9), None);
        let b = build_plan(&c, 8, 200.0, &RngStreams::new(9), None);
        let d = build_plan(&c, 8, 200.0, &RngStreams::new(10), None);
        assert_eq!(a.trace_hash(), b.trace_hash());
        assert_ne!(a.trace_hash(), d.trace_hash());
    }

    #[test]
    fn fixed_positions_with_long_pause_hold_still() {
        let mut c = cfg(MobilityModel::Rwp);
        c.pause_s = 1e9;
        let fixed = vec![
            Position { x: 10.0, y: 20.0 },
            Position { x: 30.0, y: 40.0 },
        ];
        let plan = build_plan(&c, 2, 300.0, &RngStreams::new(1), Some(&fixed));
        for step in 0..300 {
            let t = SimTime::new(step as f64);
            assert_eq!(plan.position_at(0, t), fixed[0]);
            assert_eq!(plan.position_at(1, t), fixed[1]);
        }
    }

    #[test]
    fn positions_csv_has_header_and_rows() {
        let c = cfg(MobilityModel::Rwp);
        let plan = build_plan(&c, 3, 10.0, &RngStreams::new(2), None);
        let csv = plan.positions_csv(10.0, 5.0);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "time,node,x,y");
        assert_eq!(lines.len(), 1 + 3 * 3); // t = 0, 5, 10
    }
}
