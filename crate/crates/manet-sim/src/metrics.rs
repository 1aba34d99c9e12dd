//! Per-run metrics and multi-run comparison statistics.
//!
//! A single run yields a [`RunMetrics`]: delivery counts, drop causes,
//! latency, control traffic, and the per-node energy ledger. [`compare`]
//! fans a scenario out over protocols × sweep points × seeds (in parallel —
//! runs are independent), checks that every protocol saw identical mobility
//! and traffic per (point, seed), and aggregates each cell into
//! mean ± sample standard deviation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::routing::Protocol;
use crate::scenario::ScenarioConfig;
use crate::sim::Simulation;

/// One node's energy and transmission ledger at the end of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeEnergy {
    pub node: u32,
    pub idle_mj: f64,
    pub sleep_mj: f64,
    pub tx_mj: f64,
    pub rx_mj: f64,
    pub remaining_mj: f64,
    pub control_tx: u64,
    pub data_tx: u64,
    pub died_at_s: Option<f64>,
}

impl NodeEnergy {
    pub fn consumed_mj(&self) -> f64 {
        self.idle_mj + self.sleep_mj + self.tx_mj + self.rx_mj
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub protocol: Protocol,
    pub nodes: u32,
    pub seed: u64,
    pub duration_s: f64,
    pub originated: u64,
    pub delivered: u64,
    pub dropped_queue: u64,
    pub dropped_no_route: u64,
    pub dropped_dead_node: u64,
    pub dropped_end_of_run: u64,
    /// Packet delivery ratio; 0 when nothing was originated.
    pub pdr: f64,
    /// Delivered payload bits per second of run time.
    pub throughput_bps: f64,
    /// Mean origination-to-delivery latency; absent with no deliveries.
    pub mean_delay_s: Option<f64>,
    /// Control frames transmitted anywhere in the network.
    pub control_frames: u64,
    /// Data frames transmitted (every forwarding hop counts).
    pub data_frames: u64,
    /// Control frames per delivered packet; absent with no deliveries.
    pub routing_overhead: Option<f64>,
    pub mean_idle_mj: f64,
    pub mean_sleep_mj: f64,
    pub mean_tx_mj: f64,
    pub mean_rx_mj: f64,
    pub mean_consumed_mj: f64,
    pub mean_remaining_mj: f64,
    pub nodes_dead: u32,
    pub per_node: Vec<NodeEnergy>,
}

impl RunMetrics {
    pub fn dropped_total(&self) -> u64 {
        self.dropped_queue + self.dropped_no_route + self.dropped_dead_node + self.dropped_end_of_run
    }

    /// The whole record as `metric,value` lines: scalars first, then one
    /// group of `node<N>.*` rows per node.
    pub fn to_csv(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let mut out = String::from("metric,value\n");
        let rows: Vec<(&str, String)> = vec![
            ("protocol", self.protocol.to_string()),
            ("nodes", self.nodes.to_string()),
            ("seed", self.seed.to_string()),
            ("duration_s", self.duration_s.to_string()),
            ("originated", self.originated.to_string()),
            ("delivered", self.delivered.to_string()),
            ("dropped_queue", self.dropped_queue.to_string()),
            ("dropped_no_route", self.dropped_no_route.to_string()),
            ("dropped_dead_node", self.dropped_dead_node.to_string()),
            ("dropped_end_of_run", self.dropped_end_of_run.to_string()),
            ("pdr", self.pdr.to_string()),
            ("throughput_bps", self.throughput_bps.to_string()),
            ("mean_delay_s", opt(self.mean_delay_s)),
            ("control_frames", self.control_frames.to_string()),
            ("data_frames", self.data_frames.to_string()),
            ("routing_overhead", opt(self.routing_overhead)),
            ("mean_idle_mj", self.mean_idle_mj.to_string()),
            ("mean_sleep_mj", self.mean_sleep_mj.to_string()),
            ("mean_tx_mj", self.mean_tx_mj.to_string()),
            ("mean_rx_mj", self.mean_rx_mj.to_string()),
            ("mean_consumed_mj", self.mean_consumed_mj.to_string()),
            ("mean_remaining_mj", self.mean_remaining_mj.to_string()),
            ("nodes_dead", self.nodes_dead.to_string()),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "{k},{v}");
        }
        for n in &self.per_node {
            let id = n.node;
            let _ = writeln!(out, "node{id}.idle_mj,{}", n.idle_mj);
            let _ = writeln!(out, "node{id}.sleep_mj,{}", n.sleep_mj);
            let _ = writeln!(out, "node{id}.tx_mj,{}", n.tx_mj);
            let _ = writeln!(out, "node{id}.rx_mj,{}", n.rx_mj);
            let _ = writeln!(out, "node{id}.remaining_mj,{}", n.remaining_mj);
            let _ = writeln!(out, "node{id}.control_tx,{}", n.control_tx);
            let _ = writeln!(out, "node{id}.data_tx,{}", n.data_tx);
            let _ = writeln!(out, "node{id}.died_at_s,{}", opt(n.died_at_s));
        }
        out
    }
}

/// Metrics that `compare` aggregates into per-cell statistics, in report
/// order. `mean_delay_s` and `routing_overhead` can be absent for a run;
/// such runs are left out of that metric's cell.
pub const COMPARE_METRICS: &[&str] = &[
    "pdr",
    "throughput_bps",
    "mean_delay_s",
    "routing_overhead",
    "mean_idle_mj",
    "mean_tx_mj",
    "mean_rx_mj",
    "mean_consumed_mj",
    "mean_remaining_mj",
];

/// Look a comparison metric up by key.
pub fn metric_value(m: &RunMetrics, key: &str) -> Option<f64> {
    match key {
        "pdr" => Some(m.pdr),
        "throughput_bps" => Some(m.throughput_bps),
        "mean_delay_s" => m.mean_delay_s,
        "routing_overhead" => m.routing_overhead,
        "mean_idle_mj" => Some(m.mean_idle_mj),
        "mean_sleep_mj" => Some(m.mean_sleep_mj),
        "mean_tx_mj" => Some(m.mean_tx_mj),
        "mean_rx_mj" => Some(m.mean_rx_mj),
        "mean_consumed_mj" => Some(m.mean_consumed_mj),
        "mean_remaining_mj" => Some(m.mean_remaining_mj),
        "originated" => Some(m.originated as f64),
        "delivered" => Some(m.delivered as f64),
        "control_frames" => Some(m.control_frames as f64),
        "data_frames" => Some(m.data_frames as f64),
        "nodes_dead" => Some(m.nodes_dead as f64),
        _ => None,
    }
}

/// What to sweep: a base scenario (its `sweep` supplies the points), the
/// protocols to pit against each other, and the seeds to repeat over.
#[derive(Debug, Clone)]
pub struct CompareSpec {
    pub base: ScenarioConfig,
    pub protocols: Vec<Protocol>,
    pub seeds: Vec<u64>,
}

/// One completed cell run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub protocol: Protocol,
    pub nodes: u32,
    pub seed: u64,
    pub metrics: RunMetrics,
    pub mobility_hash: u64,
    pub traffic_hash: u64,
}

/// One cell that could not run (e.g. no selection-table row matched).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellFailure {
    pub protocol: Protocol,
    pub nodes: u32,
    pub seed: u64,
    pub error: String,
}

/// Mean ± sample standard deviation of one metric over a cell's seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub protocol: Protocol,
    pub nodes: u32,
    pub n: u32,
    pub mean: f64,
    pub stddev: f64,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub protocols: Vec<Protocol>,
    pub node_counts: Vec<u32>,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunRecord>,
    pub failures: Vec<CellFailure>,
}

/// Run the full grid. Failures (bad cells) are collected, not fatal; a
/// mobility- or traffic-hash mismatch between protocols on the same
/// (point, seed) is a bug and panics.
pub fn compare(spec: &CompareSpec) -> Comparison {
    let points = spec.base.sweep_points();
    let mut cells = Vec::new();
    for protocol in &spec.protocols {
        for point in &points {
            for seed in &spec.seeds {
                cells.push((*protocol, *point, *seed));
            }
        }
    }

    let results: Vec<Result<RunRecord, CellFailure>> = cells
        .par_iter()
        .map(|&(protocol, point, seed)| {
            let mut cfg = spec.base.at_sweep_point(point);
            cfg.protocol = protocol;
            cfg.seed = seed;
            let fail = |e: String| CellFailure {
                protocol,
                nodes: point.nodes,
                seed,
                error: e,
            };
            let sim = Simulation::new(&cfg).map_err(|e| fail(e.to_string()))?;
            let out = sim.run();
            Ok(RunRecord {
                protocol,
                nodes: point.nodes,
                seed,
                mobility_hash: out.mobility_hash,
                traffic_hash: out.traffic_hash,
                metrics: out.metrics,
            })
        })
        .collect();

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rec) => runs.push(rec),
            Err(f) => failures.push(f),
        }
    }

    // Fairness: across protocols, a given (nodes, seed) must have seen the
    // same trajectories and the same traffic.
    let mut witness: BTreeMap<(u32, u64), (u64, u64, Protocol)> = BTreeMap::new();
    for r in &runs {
        let key = (r.nodes, r.seed);
        match witness.get(&key) {
            None => {
                witness.insert(key, (r.mobility_hash, r.traffic_hash, r.protocol));
            }
            Some(&(mh, th, p)) => {
                assert_eq!(
                    (r.mobility_hash, r.traffic_hash),
                    (mh, th),
                    "unfair comparison: {} and {} saw different worlds at nodes={} seed={}",
                    p,
                    r.protocol,
                    key.0,
                    key.1
                );
            }
        }
    }

    Comparison {
        protocols: spec.protocols.clone(),
        node_counts: points.iter().map(|p| p.nodes).collect(),
        seeds: spec.seeds.clone(),
        runs,
        failures,
    }
}

impl Comparison {
    /// Per-cell statistics for `metric`, protocol-major in spec order,
    /// node counts ascending within each protocol.
    pub fn cell_stats(&self, metric: &str) -> Vec<CellStats> {
        let mut counts = self.node_counts.clone();
        counts.sort_unstable();
        counts.dedup();
        let mut out = Vec::new();
        for &protocol in &self.protocols {
            for &nodes in &counts {
                let samples: Vec<f64> = self
                    .runs
                    .iter()
                    .filter(|r| r.protocol == protocol && r.nodes == nodes)
                    .filter_map(|r| metric_value(&r.metrics, metric))
                    .collect();
                if samples.is_empty() {
                    continue;
                }
                let (mean, stddev) = mean_stddev(&samples);
                out.push(CellStats {
                    protocol,
                    nodes,
                    n: samples.len() as u32,
                    mean,
                    stddev,
                });
            }
        }
        out
    }
}

/// Mean and sample standard deviation (n−1 denominator; 0 for n < 2).
pub fn mean_stddev(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    assert!(n > 0, "no samples");
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_metrics(seed: u64, pdr: f64) -> RunMetrics {
        RunMetrics {
            protocol: Protocol::Dsdv,
            nodes: 10,
            seed,
            duration_s: 100.0,
            originated: 100,
            delivered: (pdr * 100.0) as u64,
            dropped_queue: 0,
            dropped_no_route: 100 - (pdr * 100.0) as u64,
            dropped_dead_node: 0,
            dropped_end_of_run: 0,
            pdr,
            throughput_bps: 4096.0 * pdr,
            mean_delay_s: Some(0.01),
            control_frames: 60,
            data_frames: 200,
            routing_overhead: Some(60.0 / (pdr * 100.0)),
            mean_idle_mj: 22000.0,
            mean_sleep_mj: 0.0,
            mean_tx_mj: 100.0,
            mean_rx_mj: 300.0,
            mean_consumed_mj: 22400.0,
            mean_remaining_mj: 977_600.0,
            nodes_dead: 0,
            per_node: vec![],
        }
    }

    #[test]
    fn mean_and_sample_stddev() {
        let (m, s) = mean_stddev(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert!((m - 5.0).abs() < 1e-12);
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        let (m1, s1) = mean_stddev(&[3.5]);
        assert_eq!((m1, s1), (3.5, 0.0));
    }

    #[test]
    fn metric_lookup_covers_the_compare_set() {
        let m = sample_metrics(1, 0.9);
        for key in COMPARE_METRICS {
            assert!(metric_value(&m, key).is_some(), "missing metric {key}");
        }
        assert_eq!(metric_value(&m, "pdr"), Some(0.9));
        assert_eq!(metric_value(&m, "no_such_metric"), None);
    }

    #[test]
    fn absent_optionals_are_skipped_not_zeroed() {
        let mut m = sample_metrics(1, 0.0);
        m.mean_delay_s = None;
        assert_eq!(metric_value(&m, "mean_delay_s"), None);
        let comparison = Comparison {
            protocols: vec![Protocol::Dsdv],
            node_counts: vec![10],
            seeds: vec![1, 2],
            runs: vec![
                RunRecord {
                    protocol: Protocol::Dsdv,
                    nodes: 10,
                    seed: 1,
                    metrics: m,
                    mobility_hash: 0,
                    traffic_hash: 0,
                },
                RunRecord {
                    protocol: Protocol::Dsdv,
                    nodes: 10,
                    seed: 2,
                    metrics: sample_metrics(2, 0.8),
                    mobility_hash: 0,
                    traffic_hash: 0,
                },
            ],
            failures: vec![],
        };
        let delay = comparison.cell_stats("mean_delay_s");
        assert_eq!(delay.len(), 1);
        assert_eq!(delay[0].n, 1, "run without deliveries contributes nothing");
        let pdr = comparison.cell_stats("pdr");
        assert_eq!(pdr[0].n, 2);
        assert!((pdr[0].mean - 0.4).abs() < 1e-12);
    }

    #[test]
    fn csv_has_header_and_per_node_rows() {
        let mut m = sample_metrics(7, 1.0);
        m.per_node = vec![NodeEnergy {
            node: 3,
            idle_mj: 1.0,
            sleep_mj: 0.0,
            tx_mj: 2.0,
            rx_mj: 3.0,
            remaining_mj: 4.0,
            control_tx: 5,
            data_tx: 6,
            died_at_s: None,
        }];
        let csv = m.to_csv();
        assert!(csv.starts_with("metric,value\n"));
        assert!(csv.contains("pdr,1\n"));
        assert!(csv.contains("node3.tx_mj,2\n"));
        assert!(csv.contains("node3.died_at_s,\n"));
        assert_eq!(m.per_node[0].consumed_mj(), 6.0);
    }
}
