//! DSDV: destination-sequenced distance-vector routing.
//!
//! Every node advertises its full table every `DSDV_UPDATE_INTERVAL_S`
//! seconds, stamping its own entry with a fresh even sequence number.
//! Routes with higher sequence numbers always win; ties break on metric.
//! Link breaks mark affected routes with an odd sequence number and an
//! infinite metric, and that invalidation propagates as a triggered update
//! — but only from nodes whose tables actually changed, so the wave dies
//! out on its own.

use std::collections::BTreeMap;

use crate::radio::{Dest, DropCause, Frame, Payload};
use crate::routing::messages::{ControlMsg, DsdvAd, METRIC_INF};
use crate::routing::{AgentCtx, Protocol, RoutingAgent, TimerKey, DSDV_UPDATE_INTERVAL_S};
use crate::time::SimTime;
use crate::traffic::{DataPacket, NodeId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsdvEntry {
    pub next_hop: NodeId,
    pub metric: u32,
    pub seq: u64,
}

impl DsdvEntry {
    pub fn is_valid(&self) -> bool {
        self.seq % 2 == 0 && self.metric != METRIC_INF
    }
}

#[derive(Debug)]
pub struct DsdvAgent {
    id: NodeId,
    own_seq: u64,
    table: BTreeMap<NodeId, DsdvEntry>,
    updates_sent: u64,
}

impl DsdvAgent {
    pub fn new(id: NodeId) -> Self {
        let mut table = BTreeMap::new();
        table.insert(
            id,
            DsdvEntry {
                next_hop: id,
                metric: 0,
                seq: 0,
            },
        );
        DsdvAgent {
            id,
            own_seq: 0,
            table,
            updates_sent: 0,
        }
    }

    pub fn entry(&self, dest: NodeId) -> Option<&DsdvEntry> {
        self.table.get(&dest)
    }

    pub fn route_lookup(&self, dest: NodeId) -> Option<NodeId> {
        self.table
            .get(&dest)
            .filter(|e| e.is_valid())
            .map(|e| e.next_hop)
    }

    /// Route the packet hop-by-hop if the table has a live entry; hand it
    /// back otherwise so the caller can decide what a miss means.
    pub fn try_send_data(
        &mut self,
        ctx: &mut AgentCtx,
        mut packet: DataPacket,
    ) -> Result<(), DataPacket> {
        match self.route_lookup(packet.dst) {
            Some(next_hop) => {
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
            None => Err(packet),
        }
    }

    /// Periodic full-table advertisement: stamp a fresh even sequence
    /// number on the own-node entry and broadcast everything, broken
    /// routes included.
    pub fn advertise_full_table(&mut self, ctx: &mut AgentCtx) {
        self.own_seq += 2;
        if let Some(own) = self.table.get_mut(&self.id) {
            own.seq = self.own_seq;
        }
        let entries: Vec<DsdvAd> = self
            .table
            .iter()
            .map(|(dest, e)| DsdvAd {
                dest: *dest,
                metric: e.metric,
                seq: e.seq,
            })
            .collect();
        self.broadcast_update(ctx, entries);
    }

    pub fn schedule_next_advertisement(&mut self, ctx: &mut AgentCtx) {
        ctx.set_timer(DSDV_UPDATE_INTERVAL_S, TimerKey::DsdvPeriodic);
    }

    fn broadcast_update(&mut self, ctx: &mut AgentCtx, entries: Vec<DsdvAd>) {
        if entries.is_empty() {
            return;
        }
        self.updates_sent += 1;
        ctx.send_control(Dest::Broadcast, ControlMsg::DsdvUpdate { entries });
    }

    fn merge_update(&mut self, ctx: &mut AgentCtx, from: NodeId, entries: &[DsdvAd]) {
        let mut invalidated: Vec<DsdvAd> = Vec::new();
        let mut self_was_declared_broken = false;

        for ad in entries {
            if ad.dest == self.id {
                // Someone thinks the route to us died. Prove we are alive
                // by jumping past their sequence number.
                if ad.seq % 2 == 1 && ad.seq > self.own_seq {
                    self.own_seq = ad.seq + 1;
                    if let Some(own) = self.table.get_mut(&self.id) {
                        own.seq = self.own_seq;
                    }
                    self_was_declared_broken = true;
                }
                continue;
            }

            let broken = ad.seq % 2 == 1 || ad.metric == METRIC_INF;
            match self.table.get_mut(&ad.dest) {
                None => {
                    // Never create entries from obituaries for strangers.
                    if !broken {
                        self.table.insert(
                            ad.dest,
                            DsdvEntry {
                                next_hop: from,
                                metric: ad.metric.saturating_add(1),
                                seq: ad.seq,
                            },
                        );
                    }
                }
                Some(e) => {
                    if broken {
                        if ad.seq > e.seq && e.is_valid() {
                            e.next_hop = from;
                            e.metric = METRIC_INF;
                            e.seq = ad.seq;
                            invalidated.push(DsdvAd {
                                dest: ad.dest,
                                metric: METRIC_INF,
                                seq: ad.seq,
                            });
                        } else if ad.seq > e.seq {
                            // Already broken; adopt the newer obituary
                            // quietly (no further propagation).
                            e.seq = ad.seq;
                        }
                    } else {
                        let cand_metric = ad.metric.saturating_add(1);
                        let better = ad.seq > e.seq
                            || (ad.seq == e.seq && cand_metric < e.metric);
                        if better {
                            e.next_hop = from;
                            e.metric = cand_metric;
                            e.seq = ad.seq;
                        }
                    }
                }
            }
        }

        if self_was_declared_broken {
            let own = self.table[&self.id];
            self.broadcast_update(
                ctx,
                vec![DsdvAd {
                    dest: self.id,
                    metric: own.metric,
                    seq: own.seq,
                }],
            );
        }
        self.broadcast_update(ctx, invalidated);
    }

    /// Invalidate every route through `to` and emit a triggered update for
    /// the routes that actually changed. No packet disposition here.
    pub fn note_broken_link(&mut self, ctx: &mut AgentCtx, to: NodeId) {
        let mut invalidated: Vec<DsdvAd> = Vec::new();
        for (dest, e) in self.table.iter_mut() {
            if e.next_hop == to && e.is_valid() {
                e.metric = METRIC_INF;
                e.seq += 1;
                invalidated.push(DsdvAd {
                    dest: *dest,
                    metric: METRIC_INF,
                    seq: e.seq,
                });
            }
        }
        self.broadcast_update(ctx, invalidated);
    }

    pub fn table_len(&self) -> usize {
        self.table.len()
    }
}

impl RoutingAgent for DsdvAgent {
    fn protocol(&self) -> Protocol {
        Protocol::Dsdv
    }

    fn start(&mut self, ctx: &mut AgentCtx) {
        self.schedule_next_advertisement(ctx);
    }

    fn originate(&mut self, ctx: &mut AgentCtx, packet: DataPacket) {
        if packet.dst == ctx.self_id {
            ctx.deliver(packet);
            return;
        }
        if let Err(packet) = self.try_send_data(ctx, packet) {
            ctx.drop_packet(packet, DropCause::NoRoute);
        }
    }

    fn on_frame(&mut self, ctx: &mut AgentCtx, from: NodeId, payload: &Payload) {
        match payload {
            Payload::Data { packet, .. } => {
                let packet = packet.clone();
                if packet.dst == ctx.self_id {
                    ctx.deliver(packet);
                } else if let Err(packet) = self.try_send_data(ctx, packet) {
                    ctx.drop_packet(packet, DropCause::NoRoute);
                }
            }
            Payload::Control(ControlMsg::DsdvUpdate { entries }) => {
                self.merge_update(ctx, from, entries);
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
        if key == TimerKey::DsdvPeriodic {
            self.advertise_full_table(ctx);
            self.schedule_next_advertisement(ctx);
        }
    }

    fn next_hop_for(&self, dest: NodeId, _now: SimTime) -> Option<NodeId> {
        if dest == self.id {
            return None;
        }
        self.route_lookup(dest)
    }

    fn buffered_packets(&self) -> usize {
        0
    }

    fn control_sends(&self) -> u64 {
        self.updates_sent
    }
}
