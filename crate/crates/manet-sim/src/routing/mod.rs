//! Routing protocols behind one agent interface.
//!
//! Agents are per-node state machines driven by the simulation: frames in,
//! actions out. They never touch other nodes' state directly — everything
//! crosses the (simulated) air as a frame, so protocol behavior is exactly
//! what the event trace shows.

pub mod messages;

mod aodv;
mod dsdv;
mod dsr;

pub use aodv::AodvAgent;
pub use dsdv::{DsdvAgent, DsdvEntry};
pub use dsr::DsrAgent;

use std::collections::{BTreeMap, VecDeque};

use crate::deerp::Mode;
use crate::radio::{Dest, DropCause, Frame, Payload};
use crate::routing::messages::ControlMsg;
use crate::time::SimTime;
use crate::traffic::{DataPacket, NodeId};
use serde::{Deserialize, Serialize};

/// Seconds between DSDV full-table advertisements.
pub const DSDV_UPDATE_INTERVAL_S: f64 = 15.0;
/// How long a reactive discovery waits for a reply.
pub const DISCOVERY_TIMEOUT_S: f64 = 3.0;
/// Reactive discoveries retry once before giving up.
pub const DISCOVERY_RETRIES: u8 = 1;
/// Packets buffered per destination while discovery runs.
pub const DISCOVERY_BUFFER_PER_DEST: usize = 64;
/// AODV active-route lifetime; refreshed every time a route carries traffic.
pub const AODV_ROUTE_LIFETIME_S: f64 = 10.0;
/// DSR keeps up to this many routes per destination, freshest first.
pub const DSR_CACHE_ROUTES_PER_DEST: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Dsdv,
    Dsr,
    Aodv,
    Deerp,
}

impl Protocol {
    pub fn all() -> [Protocol; 4] {
        [Protocol::Dsdv, Protocol::Dsr, Protocol::Aodv, Protocol::Deerp]
    }

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Dsdv => "dsdv",
            Protocol::Dsr => "dsr",
            Protocol::Aodv => "aodv",
            Protocol::Deerp => "deerp",
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Protocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dsdv" => Ok(Protocol::Dsdv),
            "dsr" => Ok(Protocol::Dsr),
            "aodv" => Ok(Protocol::Aodv),
            "deerp" => Ok(Protocol::Deerp),
            other => Err(format!("unknown protocol '{other}'")),
        }
    }
}

/// Keys for protocol timers; reactive discovery timers carry the attempt
/// number so stale expirations are recognized and ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimerKey {
    DsdvPeriodic,
    DsrDiscovery { target: NodeId, attempt: u8 },
    AodvDiscovery { target: NodeId, attempt: u8 },
}

/// What an agent asks the simulation to do.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Send { dst: Dest, payload: Payload },
    SetTimer { at: SimTime, key: TimerKey },
    Deliver { packet: DataPacket },
    Drop { packet: DataPacket, cause: DropCause },
}

/// Per-call view an agent gets of the world: the clock, who it is, its
/// current activity mode, and a mailbox for actions.
pub struct AgentCtx {
    pub now: SimTime,
    pub self_id: NodeId,
    pub mode: Mode,
    pub actions: Vec<Action>,
}

impl AgentCtx {
    pub fn new(now: SimTime, self_id: NodeId, mode: Mode) -> Self {
        AgentCtx {
            now,
            self_id,
            mode,
            actions: Vec::new(),
        }
    }

    pub fn send(&mut self, dst: Dest, payload: Payload) {
        self.actions.push(Action::Send { dst, payload });
    }

    pub fn send_control(&mut self, dst: Dest, msg: ControlMsg) {
        self.send(dst, Payload::Control(msg));
    }

    pub fn set_timer(&mut self, delay_s: f64, key: TimerKey) {
        self.actions.push(Action::SetTimer {
            at: self.now + delay_s,
            key,
        });
    }

    pub fn deliver(&mut self, mut packet: DataPacket) {
        packet.path.push(self.self_id);
        self.actions.push(Action::Deliver { packet });
    }

    pub fn drop_packet(&mut self, packet: DataPacket, cause: DropCause) {
        self.actions.push(Action::Drop { packet, cause });
    }
}

/// A routing protocol instance living on one node.
pub trait RoutingAgent: Send {
    fn protocol(&self) -> Protocol;

    /// Called once at t = 0 to arm periodic timers.
    fn start(&mut self, ctx: &mut AgentCtx);

    /// The application hands over a packet originated at this node.
    fn originate(&mut self, ctx: &mut AgentCtx, packet: DataPacket);

    /// A frame transmitted by `from` arrived at this node.
    fn on_frame(&mut self, ctx: &mut AgentCtx, from: NodeId, payload: &Payload);

    /// A unicast to `next_hop` failed (it was out of range); the failed
    /// frame is handed back for disposition.
    fn on_link_break(&mut self, ctx: &mut AgentCtx, next_hop: NodeId, frame: &Frame);

    fn on_timer(&mut self, ctx: &mut AgentCtx, key: TimerKey);

    /// Current forwarding choice toward `dest`, if the protocol has one.
    fn next_hop_for(&self, dest: NodeId, now: SimTime) -> Option<NodeId>;

    /// Data packets parked awaiting route discovery.
    fn buffered_packets(&self) -> usize;

    /// Control transmissions this agent has requested (kept by the agent so
    /// protocol-level tests don't need the radio).
    fn control_sends(&self) -> u64;
}

/// Bounded per-destination packet buffer used by the reactive protocols
/// while discovery is in flight. Overflow rejects the newcomer.
#[derive(Debug, Default)]
pub struct PacketBuffer {
    queues: BTreeMap<NodeId, VecDeque<DataPacket>>,
}

impl PacketBuffer {
    pub fn push(&mut self, packet: DataPacket) -> Result<(), DataPacket> {
        let q = self.queues.entry(packet.dst).or_default();
        if q.len() >= DISCOVERY_BUFFER_PER_DEST {
            return Err(packet);
        }
        q.push_back(packet);
        Ok(())
    }

    pub fn drain(&mut self, dest: NodeId) -> Vec<DataPacket> {
        self.queues
            .remove(&dest)
            .map(|q| q.into_iter().collect())
            .unwrap_or_default()
    }

    pub fn total(&self) -> usize {
        self.queues.values().map(|q| q.len()).sum()
    }
}
