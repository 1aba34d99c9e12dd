//! DSR: dynamic source routing.
//!
//! Fully reactive. A node with traffic for an unknown destination floods a
//! route request; the request records every hop it crosses, the target
//! answers with the completed record, and the origin then embeds that route
//! in each data frame it sends. Only the origin caches routes (up to
//! `DSR_CACHE_ROUTES_PER_DEST` per destination, freshest first); there is
//! no salvaging at intermediate hops — a broken link costs the packet and
//! earns a route error sent back along the prefix already traveled.

use std::collections::{BTreeMap, BTreeSet};

use crate::radio::{Dest, DropCause, Frame, Payload};
use crate::routing::messages::ControlMsg;
use crate::routing::{
    AgentCtx, PacketBuffer, Protocol, RoutingAgent, TimerKey, DISCOVERY_RETRIES,
    DISCOVERY_TIMEOUT_S, DSR_CACHE_ROUTES_PER_DEST,
};
use crate::time::SimTime;
use crate::traffic::{DataPacket, NodeId};

#[derive(Debug)]
pub struct DsrAgent {
    id: NodeId,
    /// Destination → routes, freshest first. Every route starts at `id`.
    cache: BTreeMap<NodeId, Vec<Vec<NodeId>>>,
    next_request_id: u32,
    /// (origin, request id) pairs already processed; the flood dedup.
    seen: BTreeSet<(NodeId, u32)>,
    /// Destinations with a discovery in flight, and its attempt number.
    pending: BTreeMap<NodeId, u8>,
    buffer: PacketBuffer,
    control_sent: u64,
}

impl DsrAgent {
    pub fn new(id: NodeId) -> Self {
        DsrAgent {
            id,
            cache: BTreeMap::new(),
            next_request_id: 0,
            seen: BTreeSet::new(),
            pending: BTreeMap::new(),
            buffer: PacketBuffer::default(),
            control_sent: 0,
        }
    }

    pub fn cached_route(&self, dest: NodeId) -> Option<&[NodeId]> {
        self.cache
            .get(&dest)
            .and_then(|v| v.first())
            .map(|r| r.as_slice())
    }

    pub fn cached_route_count(&self, dest: NodeId) -> usize {
        self.cache.get(&dest).map_or(0, |v| v.len())
    }

    fn cache_insert(&mut self, dest: NodeId, route: Vec<NodeId>) {
        let routes = self.cache.entry(dest).or_default();
        routes.retain(|r| r != &route);
        routes.insert(0, route);
        routes.truncate(DSR_CACHE_ROUTES_PER_DEST);
    }

    /// Drop every cached route that crosses the directed link `from → to`.
    fn purge_link(&mut self, from: NodeId, to: NodeId) {
        self.cache.retain(|_, routes| {
            routes.retain(|r| !r.windows(2).any(|w| w[0] == from && w[1] == to));
            !routes.is_empty()
        });
    }

    /// Source-route the packet if the cache has a path; hand it back
    /// otherwise.
    pub fn try_send_data(
        &mut self,
        ctx: &mut AgentCtx,
        mut packet: DataPacket,
    ) -> Result<(), DataPacket> {
        match self.cached_route(packet.dst) {
            Some(route) => {
                let route = route.to_vec();
                packet.path.push(ctx.self_id);
                ctx.send(
                    Dest::Unicast(route[1]),
                    Payload::Data {
                        packet,
                        source_route: Some(route),
                    },
                );
                Ok(())
            }
            None => Err(packet),
        }
    }

    /// Park the packet and make sure a discovery for its destination is
    /// running. Buffer overflow costs the newcomer.
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
        let request_id = self.next_request_id;
        self.next_request_id += 1;
        self.seen.insert((self.id, request_id));
        self.pending.insert(target, attempt);
        self.control_sent += 1;
        ctx.send_control(
            Dest::Broadcast,
            ControlMsg::DsrRouteRequest {
                origin: self.id,
                target,
                request_id,
                record: vec![self.id],
            },
        );
        ctx.set_timer(DISCOVERY_TIMEOUT_S, TimerKey::DsrDiscovery { target, attempt });
    }

    fn handle_route_request(
        &mut self,
        ctx: &mut AgentCtx,
        from: NodeId,
        origin: NodeId,
        target: NodeId,
        request_id: u32,
        record: &[NodeId],
    ) {
        if origin == self.id || !self.seen.insert((origin, request_id)) {
            return;
        }
        if record.contains(&self.id) {
            return;
        }
        if target == self.id {
            let mut route = record.to_vec();
            route.push(self.id);
            self.control_sent += 1;
            ctx.send_control(Dest::Unicast(from), ControlMsg::DsrRouteReply { route });
        } else {
            let mut record = record.to_vec();
            record.push(self.id);
            self.control_sent += 1;
            ctx.send_control(
                Dest::Broadcast,
                ControlMsg::DsrRouteRequest {
                    origin,
                    target,
                    request_id,
                    record,
                },
            );
        }
    }

    fn handle_route_reply(&mut self, ctx: &mut AgentCtx, route: &[NodeId]) {
        if route.len() < 2 {
            return;
        }
        if route[0] == self.id {
            let dest = *route.last().unwrap();
            self.cache_insert(dest, route.to_vec());
            self.pending.remove(&dest);
            for packet in self.buffer.drain(dest) {
                if let Err(packet) = self.try_send_data(ctx, packet) {
                    ctx.drop_packet(packet, DropCause::NoRoute);
                }
            }
        } else if let Some(pos) = route.iter().position(|&n| n == self.id) {
            self.control_sent += 1;
            ctx.send_control(
                Dest::Unicast(route[pos - 1]),
                ControlMsg::DsrRouteReply {
                    route: route.to_vec(),
                },
            );
        }
    }

    fn handle_route_error(
        &mut self,
        ctx: &mut AgentCtx,
        broken_from: NodeId,
        broken_to: NodeId,
        back_route: &[NodeId],
    ) {
        self.purge_link(broken_from, broken_to);
        if back_route.last() == Some(&self.id) {
            return;
        }
        if let Some(pos) = back_route.iter().position(|&n| n == self.id) {
            if pos + 1 < back_route.len() {
                self.control_sent += 1;
                ctx.send_control(
                    Dest::Unicast(back_route[pos + 1]),
                    ControlMsg::DsrRouteError {
                        broken_from,
                        broken_to,
                        back_route: back_route.to_vec(),
                    },
                );
            }
        }
    }

    /// Cache maintenance after a failed transmission to `to`; no packet
    /// disposition and no route error (the caller owns the failed frame).
    pub fn note_broken_link(&mut self, _ctx: &mut AgentCtx, to: NodeId) {
        self.purge_link(self.id, to);
    }

    /// Send a route error toward the origin of a source-routed frame that
    /// just failed on the link `self → to`.
    pub fn report_broken_source_route(
        &mut self,
        ctx: &mut AgentCtx,
        to: NodeId,
        source_route: &[NodeId],
    ) {
        let Some(pos) = source_route.iter().position(|&n| n == self.id) else {
            return;
        };
        if pos == 0 {
            return; // we are the origin; the purge already did the work
        }
        let mut back_route: Vec<NodeId> = source_route[..=pos].to_vec();
        back_route.reverse();
        self.control_sent += 1;
        ctx.send_control(
            Dest::Unicast(back_route[1]),
            ControlMsg::DsrRouteError {
                broken_from: self.id,
                broken_to: to,
                back_route,
            },
        );
    }
}

impl RoutingAgent for DsrAgent {
    fn protocol(&self) -> Protocol {
        Protocol::Dsr
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
            Payload::Data {
                packet,
                source_route: Some(route),
            } => {
                let mut packet = packet.clone();
                if packet.dst == ctx.self_id {
                    ctx.deliver(packet);
                    return;
                }
                match route.iter().position(|&n| n == self.id) {
                    Some(pos) if pos + 1 < route.len() => {
                        packet.path.push(self.id);
                        ctx.send(
                            Dest::Unicast(route[pos + 1]),
                            Payload::Data {
                                packet,
                                source_route: Some(route.clone()),
                            },
                        );
                    }
                    _ => ctx.drop_packet(packet, DropCause::NoRoute),
                }
            }
            Payload::Data {
                packet,
                source_route: None,
            } => {
                // A hop-by-hop frame reaching a pure DSR node: deliverable
                // only if it is for us.
                let packet = packet.clone();
                if packet.dst == ctx.self_id {
                    ctx.deliver(packet);
                } else {
                    ctx.drop_packet(packet, DropCause::NoRoute);
                }
            }
            Payload::Control(ControlMsg::DsrRouteRequest {
                origin,
                target,
                request_id,
                record,
            }) => self.handle_route_request(ctx, from, *origin, *target, *request_id, record),
            Payload::Control(ControlMsg::DsrRouteReply { route }) => {
                self.handle_route_reply(ctx, route)
            }
            Payload::Control(ControlMsg::DsrRouteError {
                broken_from,
                broken_to,
                back_route,
            }) => self.handle_route_error(ctx, *broken_from, *broken_to, back_route),
            Payload::Control(_) => {}
        }
    }

    fn on_link_break(&mut self, ctx: &mut AgentCtx, next_hop: NodeId, frame: &Frame) {
        self.note_broken_link(ctx, next_hop);
        match &frame.payload {
            Payload::Data {
                packet,
                source_route,
            } => {
                if let Some(route) = source_route {
                    self.report_broken_source_route(ctx, next_hop, route);
                }
                ctx.drop_packet(packet.clone(), DropCause::NoRoute);
            }
            Payload::Control(_) => {}
        }
    }

    fn on_timer(&mut self, ctx: &mut AgentCtx, key: TimerKey) {
        let TimerKey::DsrDiscovery { target, attempt } = key else {
            return;
        };
        if self.pending.get(&target) != Some(&attempt) {
            return; // answered or superseded; stale timer
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

    fn next_hop_for(&self, dest: NodeId, _now: SimTime) -> Option<NodeId> {
        self.cached_route(dest).map(|r| r[1])
    }

    fn buffered_packets(&self) -> usize {
        self.buffer.total()
    }

    fn control_sends(&self) -> u64 {
        self.control_sent
    }
}
