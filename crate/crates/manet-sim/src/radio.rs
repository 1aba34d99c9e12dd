//! Idealized radio and link layer: unit-disk connectivity, per-node
//! transmit serialization at a fixed bitrate, and a drop-tail interface
//! queue. There is no collision or interference model; a unicast frame is
//! delivered exactly when the destination is in range at transmit start.

use std::collections::VecDeque;

use crate::mobility::Position;
use crate::routing::messages::{ControlMsg, SOURCE_ROUTE_ADDR_BYTES};
use crate::time::SimTime;
use crate::traffic::{DataPacket, NodeId};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    /// Reception range, meters; links are symmetric.
    pub range_m: f64,
    /// Link bitrate, bits per second.
    pub bitrate_bps: f64,
    /// Interface queue capacity, frames.
    pub queue_frames: usize,
    /// Link-layer framing overhead added to every frame. Zero makes frame
    /// energy match the per-packet formulas exactly.
    pub mac_overhead_bytes: u32,
    /// When set, control frames enqueue ahead of data frames.
    pub control_priority: bool,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            range_m: 250.0,
            bitrate_bps: 2.0e6,
            queue_frames: 50,
            mac_overhead_bytes: 58,
            control_priority: false,
        }
    }
}

impl RadioConfig {
    pub fn airtime_s(&self, wire_bytes: u32) -> f64 {
        (wire_bytes as f64 * 8.0) / self.bitrate_bps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dest {
    Broadcast,
    Unicast(NodeId),
}

impl std::fmt::Display for Dest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dest::Broadcast => write!(f, "*"),
            Dest::Unicast(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// Application data. `source_route` is carried by source-routed
    /// protocols and adds 4 bytes per listed address to the frame.
    Data {
        packet: DataPacket,
        source_route: Option<Vec<NodeId>>,
    },
    Control(ControlMsg),
}

impl Payload {
    pub fn wire_bytes(&self) -> u32 {
        match self {
            Payload::Data {
                packet,
                source_route,
            } => {
                packet.payload_bytes
                    + source_route
                        .as_ref()
                        .map(|r| SOURCE_ROUTE_ADDR_BYTES * r.len() as u32)
                        .unwrap_or(0)
            }
            Payload::Control(msg) => msg.wire_bytes(),
        }
    }

    pub fn is_data(&self) -> bool {
        matches!(self, Payload::Data { .. })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Data { .. } => "data",
            Payload::Control(c) => c.kind(),
        }
    }
}

/// One link-layer transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub src: NodeId,
    pub dst: Dest,
    pub payload: Payload,
}

impl Frame {
    pub fn wire_bytes(&self, cfg: &RadioConfig) -> u32 {
        self.payload.wire_bytes() + cfg.mac_overhead_bytes
    }
}

/// Why a data packet never reached its destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DropCause {
    /// Interface queue or discovery buffer overflow.
    Queue,
    /// No route available (includes loss at a mid-path link break: there is
    /// no salvaging, the packet dies where the route did).
    NoRoute,
    /// A depleted node could not transmit or receive it.
    DeadNode,
    /// Still queued, buffered, or in the air when the run ended.
    EndOfRun,
}

impl DropCause {
    pub fn label(self) -> &'static str {
        match self {
            DropCause::Queue => "queue",
            DropCause::NoRoute => "no_route",
            DropCause::DeadNode => "dead_node",
            DropCause::EndOfRun => "end_of_run",
        }
    }
}

/// A transmission in progress.
#[derive(Debug, Clone, PartialEq)]
pub struct InFlight {
    pub frame: Frame,
    pub started_at: SimTime,
    pub ends_at: SimTime,
}

/// Per-node link interface: one transmission at a time plus a bounded FIFO.
#[derive(Debug, Default)]
pub struct Mac {
    pub queue: VecDeque<Frame>,
    pub in_flight: Option<InFlight>,
    pub accepted: u64,
    pub transmitted: u64,
    pub dropped_queue: u64,
}

impl Mac {
    /// Accept a frame into the queue, honoring capacity and the optional
    /// control-priority discipline. Returns the rejected frame on overflow.
    pub fn enqueue(&mut self, frame: Frame, cfg: &RadioConfig) -> Result<(), Frame> {
        if self.queue.len() >= cfg.queue_frames {
            self.dropped_queue += 1;
            return Err(frame);
        }
        self.accepted += 1;
        if cfg.control_priority && !frame.payload.is_data() {
            let at = self
                .queue
                .iter()
                .position(|f| f.payload.is_data())
                .unwrap_or(self.queue.len());
            self.queue.insert(at, frame);
        } else {
            self.queue.push_back(frame);
        }
        Ok(())
    }

    pub fn idle(&self) -> bool {
        self.in_flight.is_none()
    }

    /// Data packets sitting in this interface (queued or on the air).
    pub fn data_frames_held(&self) -> usize {
        self.queue.iter().filter(|f| f.payload.is_data()).count()
            + usize::from(
                self.in_flight
                    .as_ref()
                    .map(|i| i.frame.payload.is_data())
                    .unwrap_or(false),
            )
    }
}

/// Indices of all nodes within `range_m` of `node` (excluding itself).
pub fn neighbors(positions: &[Position], node: usize, range_m: f64) -> Vec<usize> {
    let me = positions[node];
    positions
        .iter()
        .enumerate()
        .filter(|(i, p)| *i != node && me.distance(**p) <= range_m)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data_frame(src: u32, payload_bytes: u32) -> Frame {
        Frame {
            src: NodeId(src),
            dst: Dest::Broadcast,
            payload: Payload::Data {
                packet: DataPacket {
                    flow: 0,
                    seq: 0,
                    src: NodeId(src),
                    dst: NodeId(99),
                    payload_bytes,
                    originated_at: SimTime::ZERO,
                    path: vec![],
                },
                source_route: None,
            },
        }
    }

    #[test]
    fn airtime_at_two_megabits() {
        let cfg = RadioConfig {
            mac_overhead_bytes: 0,
            ..RadioConfig::default()
        };
        // 4096 bits = 512 bytes -> 2.048 ms
        assert!((cfg.airtime_s(512) - 0.002048).abs() < 1e-15);
    }

    #[test]
    fn frame_size_includes_mac_overhead_and_source_route() {
        let cfg = RadioConfig::default();
        let mut f = data_frame(0, 512);
        assert_eq!(f.wire_bytes(&cfg), 512 + 58);
        if let Payload::Data { source_route, .. } = &mut f.payload {
            *source_route = Some(vec![NodeId(0), NodeId(1), NodeId(2)]);
        }
        assert_eq!(f.wire_bytes(&cfg), 512 + 3 * 4 + 58);
    }

    #[test]
    fn unit_disk_neighbors_inclusive_and_symmetric() {
        let positions = vec![
            Position { x: 0.0, y: 0.0 },
            Position { x: 250.0, y: 0.0 },  // exactly at range
            Position { x: 251.0, y: 0.0 },  // just beyond
            Position { x: 100.0, y: 100.0 },
        ];
        let n0 = neighbors(&positions, 0, 250.0);
        assert!(n0.contains(&1) && !n0.contains(&2) && n0.contains(&3));
        // symmetry: i in neighbors(j) <=> j in neighbors(i)
        for i in 0..positions.len() {
            for j in neighbors(&positions, i, 250.0) {
                assert!(neighbors(&positions, j, 250.0).contains(&i));
            }
        }
    }

    #[test]
    fn queue_is_drop_tail_at_capacity() {
        let cfg = RadioConfig {
            queue_frames: 50,
            ..RadioConfig::default()
        };
        let mut mac = Mac::default();
        for _ in 0..50 {
            assert!(mac.enqueue(data_frame(0, 512), &cfg).is_ok());
        }
        let rejected = mac.enqueue(data_frame(0, 512), &cfg);
        assert!(rejected.is_err());
        assert_eq!(mac.dropped_queue, 1);
        assert_eq!(mac.queue.len(), 50);
    }

    #[test]
    fn control_priority_jumps_ahead_of_data() {
        let cfg = RadioConfig {
            control_priority: true,
            ..RadioConfig::default()
        };
        let mut mac = Mac::default();
        mac.enqueue(data_frame(0, 512), &cfg).unwrap();
        mac.enqueue(
            Frame {
                src: NodeId(0),
                dst: Dest::Broadcast,
                payload: Payload::Control(ControlMsg::DsdvUpdate { entries: vec![] }),
            },
            &cfg,
        )
        .unwrap();
        assert!(!mac.queue[0].payload.is_data());
        assert!(mac.queue[1].payload.is_data());
    }
}
