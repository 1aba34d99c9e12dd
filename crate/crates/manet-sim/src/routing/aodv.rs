//! AODV: ad-hoc on-demand distance vector routing.
//!
//! Reactive like DSR, but hop-by-hop: the route request flood builds
//! reverse routes as it spreads, the reply walks them back installing
//! forward routes, and data then follows plain next-hop lookups. Routes
//! carry destination sequence numbers (freshness), a lifetime refreshed by
//! every packet they serve, and a precursor list used to aim route-error
//! notifications when a link dies.

use std::collections::{BTreeMap, BTreeSet};

use crate::radio::{Dest, DropCause, Frame, Payload};
use crate::routing::messages::ControlMsg;
use crate::routing::{
    AgentCtx, PacketBuffer, Protocol, RoutingAgent, TimerKey, AODV_ROUTE_LIFETIME_S,
    DISCOVERY_RETRIES, DISCOVERY_TIMEOUT_S,
};
use crate::time::SimTime;
use crate::traffic::{DataPacket, NodeId};

#[derive(Debug, Clone)]
struct AodvEntry {
    next_hop: NodeId,
    hop_count: u32,
    dest_seq: Option<u64>,
    expires_at: SimTime,
    valid: bool,
    precursors: BTreeSet<NodeId>,
}

#[derive(Debug)]
pub struct AodvAgent {
    id: NodeId,
    own_seq: u64,
    next_rreq_id: u32,
    table: BTreeMap<NodeId, AodvEntry>,
    seen: BTreeSet<(NodeId, u32)>,
    pending: BTreeMap<NodeId, u8>,
    buffer: PacketBuffer,
    control_sent: u64,
}

impl AodvAgent {
    pub fn new(id: NodeId) -> Self {
        AodvAgent {
            id,
            own_seq: 0,
            next_rreq_id: 0,
            table: BTreeMap::new(),
            seen: BTreeSet::new(),
            pending: BTreeMap::new(),
            buffer: PacketBuffer::default(),
            control_sent: 0,
        }
    }

    fn usable(&self, dest: NodeId, now: SimTime) -> Option<&AodvEntry> {
        self.table
            .get(&dest)
            .filter(|e| e.valid && now < e.expires_at)
    }

    pub fn route_hops(&self, dest: NodeId, now: SimTime) -> Option<u32> {
        self.usable(dest, now).map(|e| e.hop_count)
    }

    /// Sequence-number-gated route install/refresh.
    fn update_route(&mut self, dest: NodeId, next_hop: NodeId, hop_count: u32, seq: u64, now: SimTime) {
        let expires_at = now + AODV_ROUTE_LIFETIME_S;
        match self.table.get_mut(&dest) {
            None => {
                self.table.insert(
                    dest,
                    AodvEntry {
                        next_hop,
                        hop_count,
                        dest_seq: Some(seq),
                        expires_at,
                        valid: true,
                        precursors: BTreeSet::new(),
                    },
                );
            }
            Some(e) => {
                let accept = match e.dest_seq {
                    None => true,
                    Some(s) => {
                        // An equal sequence number may replace a route that
                        // is no longer usable: invalidated *or* expired.
                        let unusable = !e.valid || now >= e.expires_at;
                        seq > s || (seq == s && (unusable || hop_count < e.hop_count))
                    }
                };
                if accept {
                    e.next_hop = next_hop;
                    e.hop_count = hop_count;
                    e.dest_seq = Some(seq);
                    e.expires_at = expires_at;
                    e.valid = true;
                }
            }
        }
    }

    /// Learn that `neighbor` is one hop away, without disturbing any
    /// fresher sequence-numbered state.
    fn learn_neighbor(&mut self, neighbor: NodeId, now: SimTime) {
        let expires_at = now + AODV_ROUTE_LIFETIME_S;
        match self.table.get_mut(&neighbor) {
            None => {
                self.table.insert(
                    neighbor,
                    AodvEntry {
                        next_hop: neighbor,
                        hop_count: 1,
                        dest_seq: None,
                        expires_at,
                        valid: true,
                        precursors: BTreeSet::new(),
                    },
                );
            }
            Some(e) if !e.valid => {
                e.next_hop = neighbor;
                e.hop_count = 1;
                e.expires_at = expires_at;
                e.valid = true;
            }
            Some(_) => {}
        }
    }

    /// Forward via the table if a live route exists, refreshing its
    /// lifetime; hand the packet back otherwise.
    pub fn try_send_data(
        &mut self,
        ctx: &mut AgentCtx,
        mut packet: DataPacket,
    ) -> Result<(), DataPacket> {
        let now = ctx.now;
        if self.usable(packet.dst, now).is_none() {
            return Err(packet);
        }
        let next_hop = {
            let e = self.table.get_mut(&packet.dst).unwrap();
            e.expires_at = now + AODV_ROUTE_LIFETIME_S;
            e.next_hop
        };
        if let Some(nh) = self.table.get_mut(&next_hop) {
            if nh.valid {
                nh.expires_at = now + AODV_ROUTE_LIFETIME_S;
            }
        }
        packet.path.push(ctx.self_id);
        ctx.send(
            Dest::Unicast(next_hop),
            Payload::Data {
                packet,
                source_route: None,
            },
        );
        Ok(())
    }

    pub fn enqueue_for_discovery(&mut self, ctx: &mut AgentCtx, packet: DataPacket) {
        let dest = packet.dst;
        if let Err(rejected) = self.buffer.push(packet) {
            ctx.drop_packet(rejected, DropCause::Queue);
            return;
        }
        if !self.pending.contains_key(&dest) {
            self.start_discovery(ctx, dest, 0);
        }
    }

    fn start_discovery(&mut self, ctx: &mut AgentCtx, target: NodeId, attempt: u8) {
        self.own_seq += 1;
        let request_id = self.next_rreq_id;
        self.next_rreq_id += 1;
        self.seen.insert((self.id, request_id));
        self.pending.insert(target, attempt);
        self.control_sent += 1;
        ctx.send_control(
            Dest::Broadcast,
            ControlMsg::AodvRouteRequest {
                origin: self.id,
                origin_seq: self.own_seq,
                request_id,
                target,
                target_seq: self.table.get(&target).and_then(|e| e.dest_seq),
                hop_count: 0,
            },
        );
        ctx.set_timer(
            DISCOVERY_TIMEOUT_S,
            TimerKey::AodvDiscovery { target, attempt },
        );
    }

    #[allow(clippy::too_many_arguments)]
    fn handle_rreq(
        &mut self,
        ctx: &mut AgentCtx,
        from: NodeId,
        origin: NodeId,
        origin_seq: u64,
        request_id: u32,
        target: NodeId,
        target_seq: Option<u64>,
        hop_count: u32,
    ) {
        if origin == self.id || !self.seen.insert((origin, request_id)) {
            return;
        }
        self.learn_neighbor(from, ctx.now);
        self.update_route(origin, from, hop_count + 1, origin_seq, ctx.now);

        if target == self.id {
            self.own_seq = self.own_seq.max(target_seq.unwrap_or(0));
            self.control_sent += 1;
            ctx.send_control(
                Dest::Unicast(from),
                ControlMsg::AodvRouteReply {
                    origin,
                    target: self.id,
                    target_seq: self.own_seq,
                    hop_count: 0,
                },
            );
            return;
        }

        // An intermediate with a fresh-enough live route may answer for
        // the target.
        let fresh_reply = self.usable(target, ctx.now).and_then(|e| {
            let es = e.dest_seq?;
            if es >= target_seq.unwrap_or(0) {
                Some((es, e.hop_count))
            } else {
                None
            }
        });
        if let Some((seq, hops)) = fresh_reply {
            if let Some(e) = self.table.get_mut(&target) {
                e.precursors.insert(from);
            }
            self.control_sent += 1;
            ctx.send_control(
                Dest::Unicast(from),
                ControlMsg::AodvRouteReply {
                    origin,
                    target,
                    target_seq: seq,
                    hop_count: hops,
                },
            );
            return;
        }

        self.control_sent += 1;
        ctx.send_control(
            Dest::Broadcast,
            ControlMsg::AodvRouteRequest {
                origin,
                origin_seq,
                request_id,
                target,
                target_seq,
                hop_count: hop_count + 1,
            },
        );
    }

    fn handle_rrep(
        &mut self,
        ctx: &mut AgentCtx,
        from: NodeId,
        origin: NodeId,
        target: NodeId,
        target_seq: u64,
        hop_count: u32,
    ) {
        self.learn_neighbor(from, ctx.now);
        self.update_route(target, from, hop_count + 1, target_seq, ctx.now);

        if origin == self.id {
            self.pending.remove(&target);
            for packet in self.buffer.drain(target) {
                if let Err(packet) = self.try_send_data(ctx, packet) {
                    ctx.drop_packet(packet, DropCause::NoRoute);
                }
            }
            return;
        }

        // Walk the reply along the reverse route, wiring precursors as we
        // go: the upstream node will route through us to reach the target.
        let Some(rev_next) = self.usable(origin, ctx.now).map(|e| e.next_hop) else {
            return;
        };
        if let Some(fwd) = self.table.get_mut(&target) {
            fwd.precursors.insert(rev_next);
        }
        if let Some(rev) = self.table.get_mut(&origin) {
            rev.precursors.insert(from);
        }
        self.control_sent += 1;
        ctx.send_control(
            Dest::Unicast(rev_next),
            ControlMsg::AodvRouteReply {
                origin,
                target,
                target_seq,
                hop_count: hop_count + 1,
            },
        );
    }

    fn handle_rerr(&mut self, ctx: &mut AgentCtx, from: NodeId, unreachable: &[(NodeId, u64)]) {
        let mut propagate: Vec<(NodeId, u64)> = Vec::new();
        for &(dest, seq) in unreachable {
            if let Some(e) = self.table.get_mut(&dest) {
                if e.valid && e.next_hop == from {
                    e.valid = false;
                    let new_seq = e.dest_seq.map_or(seq, |s| s.max(seq));
                    e.dest_seq = Some(new_seq);
                    if !e.precursors.is_empty() {
                        propagate.push((dest, new_seq));
                    }
                    e.precursors.clear();
                }
            }
        }
        if !propagate.is_empty() {
            self.control_sent += 1;
            ctx.send_control(
                Dest::Broadcast,
                ControlMsg::AodvRouteError {
                    unreachable: propagate,
                },
            );
        }
    }

    /// Invalidate routes through `to`; report the ones other nodes were
    /// depending on.
    pub fn note_broken_link(&mut self, ctx: &mut AgentCtx, to: NodeId) {
        let mut lost: Vec<(NodeId, u64)> = Vec::new();
        for (dest, e) in self.table.iter_mut() {
            if e.valid && e.next_hop == to {
                e.valid = false;
                let new_seq = e.dest_seq.map_or(1, |s| s + 1);
                e.dest_seq = Some(new_seq);
                if !e.precursors.is_empty() {
                    lost.push((*dest, new_seq));
                }
                e.precursors.clear();
            }
        }
        if !lost.is_empty() {
            self.control_sent += 1;
            ctx.send_control(Dest::Broadcast, ControlMsg::AodvRouteError { unreachable: lost });
        }
    }

    fn reject_dataless(&mut self, ctx: &mut AgentCtx, packet: DataPacket) {
        // No route at a forwarding node: the packet dies here and anyone
        // who routed through us hears about it.
        let dest = packet.dst;
        let seq = self
            .table
            .get(&dest)
            .and_then(|e| e.dest_seq)
            .map_or(1, |s| s + 1);
        if let Some(e) = self.table.get_mut(&dest) {
            e.valid = false;
            e.dest_seq = Some(seq);
            e.precursors.clear();
        }
        self.control_sent += 1;
        ctx.send_control(
            Dest::Broadcast,
            ControlMsg::AodvRouteError {
                unreachable: vec![(dest, seq)],
            },
        );
        ctx.drop_packet(packet, DropCause::NoRoute);
    }
}

impl RoutingAgent for AodvAgent {
    fn protocol(&self) -> Protocol {
        Protocol::Aodv
    }

    fn start(&mut self, _ctx: &mut AgentCtx) {}

    fn originate(&mut self, ctx: &mut AgentCtx, packet: DataPacket) {
        if packet.dst == ctx.self_id {
            ctx.deliver(packet);
            return;
        }
        if let Err(packet) = self.try_send_data(ctx, packet) {
            self.enqueue_for_discovery(ctx, packet);
        }
    }

    fn on_frame(&mut self, ctx: &mut AgentCtx, from: NodeId, payload: &Payload) {
        match payload {
            Payload::Data { packet, .. } => {
                let packet = packet.clone();
                if packet.dst == ctx.self_id {
                    ctx.deliver(packet);
                } else if let Err(packet) = self.try_send_data(ctx, packet) {
                    self.reject_dataless(ctx, packet);
                }
            }
            Payload::Control(ControlMsg::AodvRouteRequest {
                origin,
                origin_seq,
                request_id,
                target,
                target_seq,
                hop_count,
            }) => self.handle_rreq(
                ctx,
                from,
                *origin,
                *origin_seq,
                *request_id,
                *target,
                *target_seq,
                *hop_count,
            ),
            Payload::Control(ControlMsg::AodvRouteReply {
                origin,
                target,
                target_seq,
                hop_count,
            }) => self.handle_rrep(ctx, from, *origin, *target, *target_seq, *hop_count),
            Payload::Control(ControlMsg::AodvRouteError { unreachable }) => {
                self.handle_rerr(ctx, from, unreachable)
            }
            Payload::Control(_) => {}
        }
    }

    fn on_link_break(&mut self, ctx: &mut AgentCtx, next_hop: NodeId, frame: &Frame) {
        self.note_broken_link(ctx, next_hop);
        if let Payload::Data { packet, .. } = &frame.payload {
            ctx.drop_packet(packet.clone(), DropCause::NoRoute);
        }
    }

    fn on_timer(&mut self, ctx: &mut AgentCtx, key: TimerKey) {
        let TimerKey::AodvDiscovery { target, attempt } = key else {
            return;
        };
        if self.pending.get(&target) != Some(&attempt) {
            return;
        }
        if attempt < DISCOVERY_RETRIES {
            self.start_discovery(ctx, target, attempt + 1);
        } else {
            self.pending.remove(&target);
            for packet in self.buffer.drain(target) {
                ctx.drop_packet(packet, DropCause::NoRoute);
            }
        }
    }

    fn next_hop_for(&self, dest: NodeId, now: SimTime) -> Option<NodeId> {
        self.usable(dest, now).map(|e| e.next_hop)
    }

    fn buffered_packets(&self) -> usize {
        self.buffer.total()
    }

    fn control_sends(&self) -> u64 {
        self.control_sent
    }
}
