//! Constant-bit-rate traffic generation.

use crate::rng::{RngStreams, StreamId};
use crate::time::SimTime;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Node identifier; nodes are dense indices `0..node_count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An application-layer packet travelling through the network.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPacket {
    pub flow: u32,
    pub seq: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub payload_bytes: u32,
    pub originated_at: SimTime,
    /// Nodes that have transmitted this copy, source first; the destination
    /// is appended on delivery. Lets tests compare forwarding paths exactly.
    pub path: Vec<NodeId>,
}

/// One constant-bit-rate flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CbrFlow {
    pub src: NodeId,
    pub dst: NodeId,
    pub payload_bytes: u32,
    pub rate_pps: f64,
    pub start_s: f64,
    pub stop_s: f64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrafficError {
    #[error("need at least 2 nodes to build flows, got {0}")]
    InsufficientNodes(usize),
}

/// Origination instants for a flow: `start + k/rate` for `k = 0, 1, ...`
/// strictly before `stop`. At 8 pkt/s a 10 s window yields exactly 80
/// packets and a 900 s window exactly 7200.
pub fn emit_schedule(flow: &CbrFlow) -> Vec<SimTime> {
    let mut out = Vec::new();
    if flow.rate_pps <= 0.0 || flow.stop_s <= flow.start_s {
        return out;
    }
    let mut k: u64 = 0;
    loop {
        let t = flow.start_s + k as f64 / flow.rate_pps;
        if t >= flow.stop_s {
            break;
        }
        out.push(SimTime::new(t));
        k += 1;
    }
    out
}

/// Pick `count` distinct `(src, dst)` pairs from the traffic stream. The
/// default count is `max(1, node_count / 4)`.
pub fn build_flows(
    node_count: usize,
    count: usize,
    payload_bytes: u32,
    rate_pps: f64,
    start_s: f64,
    stop_s: f64,
    streams: &RngStreams,
) -> Result<Vec<CbrFlow>, TrafficError> {
    if node_count < 2 {
        return Err(TrafficError::InsufficientNodes(node_count));
    }
    let mut rng = streams.stream(StreamId::Traffic);
    let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(count);
    while pairs.len() < count {
        let src = rng.gen_range(0..node_count as u32);
        let mut dst = rng.gen_range(0..node_count as u32 - 1);
        if dst >= src {
            dst += 1;
        }
        if !pairs.contains(&(src, dst)) {
            pairs.push((src, dst));
        }
    }
    Ok(pairs
        .into_iter()
        .map(|(src, dst)| CbrFlow {
            src: NodeId(src),
            dst: NodeId(dst),
            payload_bytes,
            rate_pps,
            start_s,
            stop_s,
        })
        .collect())
}

pub fn default_flow_count(node_count: usize) -> usize {
    (node_count / 4).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flow(rate: f64, start: f64, stop: f64) -> CbrFlow {
        CbrFlow {
            src: NodeId(0),
            dst: NodeId(1),
            payload_bytes: 512,
            rate_pps: rate,
            start_s: start,
            stop_s: stop,
        }
    }

    #[test]
    fn eight_pps_for_ten_seconds_is_eighty_packets() {
        let sched = emit_schedule(&flow(8.0, 0.0, 10.0));
        assert_eq!(sched.len(), 80);
        assert_eq!(sched[0], SimTime::ZERO);
        assert_eq!(sched[1], SimTime::new(0.125));
        assert_eq!(*sched.last().unwrap(), SimTime::new(9.875));
    }

    #[test]
    fn full_sim_duration_count() {
        assert_eq!(emit_schedule(&flow(8.0, 0.0, 900.0)).len(), 7200);
    }

    #[test]
    fn empty_window_emits_nothing() {
        assert!(emit_schedule(&flow(8.0, 5.0, 5.0)).is_empty());
        assert!(emit_schedule(&flow(0.0, 0.0, 10.0)).is_empty());
    }

    #[test]
    fn fractional_window_rounds_down_plus_one() {
        // 10.05 s at 8 pps: emissions at k/8 < 10.05 -> k = 0..=80 -> 81
        assert_eq!(emit_schedule(&flow(8.0, 0.0, 10.05)).len(), 81);
    }

    #[test]
    fn default_flow_counts() {
        assert_eq!(default_flow_count(20), 5);
        assert_eq!(default_flow_count(5), 1);
        assert_eq!(default_flow_count(2), 1);
    }

    #[test]
    fn flows_are_distinct_pairs_with_valid_endpoints() {
        let streams = RngStreams::new(77);
        let flows = build_flows(10, 6, 512, 8.0, 0.0, 100.0, &streams).unwrap();
        assert_eq!(flows.len(), 6);
        let mut seen = std::collections::HashSet::new();
        for f in &flows {
            assert_ne!(f.src, f.dst);
            assert!(f.src.0 < 10 && f.dst.0 < 10);
            assert!(seen.insert((f.src, f.dst)), "duplicate pair");
        }
    }

    #[test]
    fn too_few_nodes_is_an_error() {
        let streams = RngStreams::new(1);
        assert_eq!(
            build_flows(1, 1, 512, 8.0, 0.0, 10.0, &streams),
            Err(TrafficError::InsufficientNodes(1))
        );
    }

    #[test]
    fn endpoints_reproducible_per_seed() {
        let a = build_flows(12, 3, 512, 8.0, 0.0, 10.0, &RngStreams::new(5)).unwrap();
        let b = build_flows(12, 3, 512, 8.0, 0.0, 10.0, &RngStreams::new(5)).unwrap();
        assert_eq!(a, b);
    }
}
