//! Control-plane messages and their wire sizes.
//!
//! Sizes are the protocol headers only; the link-layer overhead configured
//! on the radio is added per frame at transmission time.

use crate::traffic::NodeId;

/// Hop metric for distance-vector entries; `METRIC_INF` marks a broken route.
pub const METRIC_INF: u32 = u32::MAX;

pub const DSDV_HEADER_BYTES: u32 = 20;
pub const DSDV_ENTRY_BYTES: u32 = 12;
pub const DSR_HEADER_BYTES: u32 = 64;
pub const DSR_ADDR_BYTES: u32 = 4;
pub const AODV_MSG_BYTES: u32 = 24;
/// Per-address cost of carrying a source route in a data frame.
pub const SOURCE_ROUTE_ADDR_BYTES: u32 = 4;

/// One advertised distance-vector entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DsdvAd {
    pub dest: NodeId,
    pub metric: u32,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControlMsg {
    /// Periodic full-table or triggered incremental advertisement.
    DsdvUpdate { entries: Vec<DsdvAd> },
    /// Flooded discovery; `record` accumulates the nodes traversed,
    /// origin first.
    DsrRouteRequest {
        origin: NodeId,
        target: NodeId,
        request_id: u32,
        record: Vec<NodeId>,
    },
    /// Carries the discovered route `[origin, ..., target]` back along its
    /// reverse; each forwarder unicasts to the previous address.
    DsrRouteReply { route: Vec<NodeId> },
    /// Reports `broken_from -> broken_to`; travels `back_route`
    /// (`[detector, ..., origin]`) hop by hop.
    DsrRouteError {
        broken_from: NodeId,
        broken_to: NodeId,
        back_route: Vec<NodeId>,
    },
    AodvRouteRequest {
        origin: NodeId,
        origin_seq: u64,
        request_id: u32,
        target: NodeId,
        /// Last sequence number the origin saw for the target, if any.
        target_seq: Option<u64>,
        hop_count: u32,
    },
    AodvRouteReply {
        origin: NodeId,
        target: NodeId,
        target_seq: u64,
        hop_count: u32,
    },
    /// Destinations that became unreachable, with their bumped sequence
    /// numbers.
    AodvRouteError { unreachable: Vec<(NodeId, u64)> },
}

impl ControlMsg {
    pub fn wire_bytes(&self) -> u32 {
        match self {
            ControlMsg::DsdvUpdate { entries } => {
                DSDV_HEADER_BYTES + DSDV_ENTRY_BYTES * entries.len() as u32
            }
            ControlMsg::DsrRouteRequest { record, .. } => {
                DSR_HEADER_BYTES + DSR_ADDR_BYTES * record.len() as u32
            }
            ControlMsg::DsrRouteReply { route } => {
                DSR_HEADER_BYTES + DSR_ADDR_BYTES * route.len() as u32
            }
            ControlMsg::DsrRouteError { back_route, .. } => {
                DSR_HEADER_BYTES + DSR_ADDR_BYTES * back_route.len() as u32
            }
            ControlMsg::AodvRouteRequest { .. }
            | ControlMsg::AodvRouteReply { .. }
            | ControlMsg::AodvRouteError { .. } => AODV_MSG_BYTES,
        }
    }

    /// Short tag for event logs.
    pub fn kind(&self) -> &'static str {
        match self {
            ControlMsg::DsdvUpdate { .. } => "dsdv_update",
            ControlMsg::DsrRouteRequest { .. } => "dsr_rreq",
            ControlMsg::DsrRouteReply { .. } => "dsr_rrep",
            ControlMsg::DsrRouteError { .. } => "dsr_rerr",
            ControlMsg::AodvRouteRequest { .. } => "aodv_rreq",
            ControlMsg::AodvRouteReply { .. } => "aodv_rrep",
            ControlMsg::AodvRouteError { .. } => "aodv_rerr",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn control_sizes_follow_the_documented_constants() {
        let upd = ControlMsg::DsdvUpdate {
            entries: vec![
                DsdvAd {
                    dest: NodeId(1),
                    metric: 0,
                    seq: 2,
                },
                DsdvAd {
                    dest: NodeId(2),
                    metric: 1,
                    seq: 4,
                },
            ],
        };
        assert_eq!(upd.wire_bytes(), 20 + 2 * 12);

        let rreq = ControlMsg::DsrRouteRequest {
            origin: NodeId(0),
            target: NodeId(3),
            request_id: 1,
            record: vec![NodeId(0), NodeId(1), NodeId(2)],
        };
        assert_eq!(rreq.wire_bytes(), 64 + 3 * 4);

        for msg in [
            ControlMsg::AodvRouteRequest {
                origin: NodeId(0),
                origin_seq: 1,
                request_id: 1,
                target: NodeId(1),
                target_seq: None,
                hop_count: 0,
            },
            ControlMsg::AodvRouteReply {
                origin: NodeId(0),
                target: NodeId(1),
                target_seq: 2,
                hop_count: 0,
            },
            ControlMsg::AodvRouteError {
                unreachable: vec![(NodeId(1), 3)],
            },
        ] {
            assert_eq!(msg.wire_bytes(), 24);
        }
    }
}
