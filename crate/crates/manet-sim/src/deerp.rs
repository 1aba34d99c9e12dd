//! DEERP: mode-aware hybrid routing.
//!
//! One protocol rarely fits every node all the time: proactive tables are
//! cheap for busy senders but waste energy on idle listeners, while
//! reactive discovery does the reverse. DEERP classifies each node's
//! recent activity into a mode (Tx / Rx / Idle), looks the scenario up in
//! a selection-criteria table to get a per-mode protocol assignment, and
//! then runs the assigned protocols side by side: the current mode decides
//! which protocol's state answers forwarding queries and whether periodic
//! control traffic may be generated at all. A route miss falls back to the
//! other component's state before anything is declared unroutable.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mobility::MobilityModel;
use crate::radio::{DropCause, Frame, Payload};
use crate::routing::messages::ControlMsg;
use crate::routing::{
    AgentCtx, AodvAgent, DsdvAgent, DsrAgent, Protocol, RoutingAgent, TimerKey,
};
use crate::time::SimTime;
use crate::traffic::{DataPacket, NodeId};

/// How far back activity counts when classifying a node's mode.
pub const MODE_WINDOW_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Idle,
    Tx,
    Rx,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Idle => "idle",
            Mode::Tx => "tx",
            Mode::Rx => "rx",
        })
    }
}

/// Sliding-window activity classifier. Transmissions (or originations)
/// within the window mean Tx; otherwise receptions addressed to the node
/// mean Rx; otherwise the node is Idle. Tx outranks Rx.
#[derive(Debug, Clone, Default)]
pub struct ActivityTracker {
    last_tx: Option<SimTime>,
    last_rx: Option<SimTime>,
}

impl ActivityTracker {
    pub fn note_tx(&mut self, at: SimTime) {
        self.last_tx = Some(match self.last_tx {
            Some(prev) if prev > at => prev,
            _ => at,
        });
    }

    pub fn note_rx(&mut self, at: SimTime) {
        self.last_rx = Some(match self.last_rx {
            Some(prev) if prev > at => prev,
            _ => at,
        });
    }

    pub fn classify(&self, now: SimTime) -> Mode {
        let within = |t: Option<SimTime>| t.is_some_and(|t| now - t <= MODE_WINDOW_S);
        if within(self.last_tx) {
            Mode::Tx
        } else if within(self.last_rx) {
            Mode::Rx
        } else {
            Mode::Idle
        }
    }
}

/// Which protocol serves each mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolAssignment {
    pub idle: Protocol,
    pub tx: Protocol,
    pub rx: Protocol,
}

impl ProtocolAssignment {
    pub fn uniform(p: Protocol) -> Self {
        ProtocolAssignment {
            idle: p,
            tx: p,
            rx: p,
        }
    }

    pub fn protocol_for(&self, mode: Mode) -> Protocol {
        match mode {
            Mode::Idle => self.idle,
            Mode::Tx => self.tx,
            Mode::Rx => self.rx,
        }
    }

    /// Distinct component protocols, in idle → tx → rx order.
    pub fn components(&self) -> Vec<Protocol> {
        let mut out = Vec::new();
        for p in [self.idle, self.tx, self.rx] {
            if !out.contains(&p) {
                out.push(p);
            }
        }
        out
    }
}

/// One selection-criteria row: a scenario family and its per-mode
/// protocol assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpscRow {
    pub mobility: MobilityModel,
    pub nodes_min: u32,
    pub nodes_max: u32,
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
    pub assignment: ProtocolAssignment,
}

impl RpscRow {
    /// Matching compares the scenario's *maximum* speed against the row's
    /// speed range.
    pub fn matches(&self, mobility: MobilityModel, nodes: u32, max_speed_mps: f64) -> bool {
        self.mobility == mobility
            && (self.nodes_min..=self.nodes_max).contains(&nodes)
            && max_speed_mps >= self.speed_min_mps
            && max_speed_mps <= self.speed_max_mps
    }
}

#[derive(Debug, Error)]
pub enum RpscError {
    #[error("rpsc line {line}: expected 8 columns (mobility nodes_min nodes_max speed_min speed_max idle tx rx), got {got}")]
    ColumnCount { line: usize, got: usize },
    #[error("rpsc line {line}: {message}")]
    BadField { line: usize, message: String },
    #[error("rpsc rows {a} and {b} overlap: both can match one scenario")]
    OverlappingRows { a: usize, b: usize },
    #[error("rpsc table has no rows")]
    Empty,
}

#[derive(Debug, Error, PartialEq)]
#[error("no selection row matches scenario (mobility {mobility}, {nodes} nodes, max speed {max_speed_mps} m/s)")]
pub struct NoMatchingRow {
    pub mobility: MobilityModel,
    pub nodes: u32,
    pub max_speed_mps: f64,
}

/// The selection-criteria table. Immutable after load; shared by every
/// node in a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RpscTable {
    rows: Vec<RpscRow>,
}

impl Default for RpscTable {
    /// The built-in table: random-waypoint scenarios pair reactive DSR
    /// with DSDV for actively-transmitting nodes; group-mobility
    /// scenarios lean proactive except for receive-heavy nodes.
    fn default() -> Self {
        RpscTable {
            rows: vec![
                RpscRow {
                    mobility: MobilityModel::Rwp,
                    nodes_min: 5,
                    nodes_max: 25,
                    speed_min_mps: 1.0,
                    speed_max_mps: 10.0,
                    assignment: ProtocolAssignment {
                        idle: Protocol::Dsr,
                        tx: Protocol::Dsdv,
                        rx: Protocol::Dsr,
                    },
                },
                RpscRow {
                    mobility: MobilityModel::Rpgm,
                    nodes_min: 20,
                    nodes_max: 80,
                    speed_min_mps: 0.5,
                    speed_max_mps: 5.0,
                    assignment: ProtocolAssignment {
                        idle: Protocol::Dsdv,
                        tx: Protocol::Dsdv,
                        rx: Protocol::Dsr,
                    },
                },
            ],
        }
    }
}

impl RpscTable {
    pub fn new(rows: Vec<RpscRow>) -> Result<Self, RpscError> {
        let table = RpscTable { rows };
        table.validate()?;
        Ok(table)
    }

    pub fn rows(&self) -> &[RpscRow] {
        &self.rows
    }

    /// Parse the plain-text format: one row per line, eight
    /// whitespace-separated columns
    /// `mobility nodes_min nodes_max speed_min speed_max idle tx rx`;
    /// `#` comments and blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, RpscError> {
        let mut rows = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let cols: Vec<&str> = body.split_whitespace().collect();
            if cols.len() != 8 {
                return Err(RpscError::ColumnCount {
                    line,
                    got: cols.len(),
                });
            }
            let bad = |message: String| RpscError::BadField { line, message };
            let mobility: MobilityModel = cols[0]
                .parse()
                .map_err(|e: String| bad(e))?;
            let nodes_min: u32 = cols[1]
                .parse()
                .map_err(|_| bad(format!("bad node count '{}'", cols[1])))?;
            let nodes_max: u32 = cols[2]
                .parse()
                .map_err(|_| bad(format!("bad node count '{}'", cols[2])))?;
            let speed_min_mps: f64 = cols[3]
                .parse()
                .map_err(|_| bad(format!("bad speed '{}'", cols[3])))?;
            let speed_max_mps: f64 = cols[4]
                .parse()
                .map_err(|_| bad(format!("bad speed '{}'", cols[4])))?;
            let proto = |s: &str| -> Result<Protocol, RpscError> {
                let p: Protocol = s.parse().map_err(|e: String| bad(e))?;
                if p == Protocol::Deerp {
                    return Err(bad("deerp cannot be its own component".into()));
                }
                Ok(p)
            };
            if nodes_min > nodes_max {
                return Err(bad(format!("node range {nodes_min}-{nodes_max} is inverted")));
            }
            if !(speed_min_mps > 0.0 && speed_min_mps <= speed_max_mps) {
                return Err(bad(format!(
                    "speed range {speed_min_mps}-{speed_max_mps} is invalid"
                )));
            }
            rows.push(RpscRow {
                mobility,
                nodes_min,
                nodes_max,
                speed_min_mps,
                speed_max_mps,
                assignment: ProtocolAssignment {
                    idle: proto(cols[5])?,
                    tx: proto(cols[6])?,
                    rx: proto(cols[7])?,
                },
            });
        }
        Self::new(rows)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(
            "# mobility nodes_min nodes_max speed_min speed_max idle tx rx\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{} {} {} {} {} {} {} {}\n",
                r.mobility,
                r.nodes_min,
                r.nodes_max,
                r.speed_min_mps,
                r.speed_max_mps,
                r.assignment.idle,
                r.assignment.tx,
                r.assignment.rx
            ));
        }
        out
    }

    /// Reject empty tables and pairs of rows that could both match one
    /// scenario (same mobility model, overlapping node and speed ranges).
    pub fn validate(&self) -> Result<(), RpscError> {
        if self.rows.is_empty() {
            return Err(RpscError::Empty);
        }
        for i in 0..self.rows.len() {
            for j in (i + 1)..self.rows.len() {
                let (a, b) = (&self.rows[i], &self.rows[j]);
                let nodes_overlap = a.nodes_min <= b.nodes_max && b.nodes_min <= a.nodes_max;
                let speeds_overlap =
                    a.speed_min_mps <= b.speed_max_mps && b.speed_min_mps <= a.speed_max_mps;
                if a.mobility == b.mobility && nodes_overlap && speeds_overlap {
                    return Err(RpscError::OverlappingRows { a: i + 1, b: j + 1 });
                }
            }
        }
        Ok(())
    }

    /// SRP lookup: the unique row covering the scenario, or an error.
    pub fn select(
        &self,
        mobility: MobilityModel,
        nodes: u32,
        max_speed_mps: f64,
    ) -> Result<&RpscRow, NoMatchingRow> {
        self.rows
            .iter()
            .find(|r| r.matches(mobility, nodes, max_speed_mps))
            .ok_or(NoMatchingRow {
                mobility,
                nodes,
                max_speed_mps,
            })
    }

    /// Opt-in fallback: the row with the smallest mismatch. A mobility
    /// mismatch outweighs any range distance; range distances are the gap
    /// to the nearest endpoint, speed weighted up since its scale is
    /// smaller. Ties go to the earlier row.
    pub fn select_nearest(
        &self,
        mobility: MobilityModel,
        nodes: u32,
        max_speed_mps: f64,
    ) -> &RpscRow {
        let score = |r: &RpscRow| {
            let mob = if r.mobility == mobility { 0.0 } else { 1e6 };
            let n = nodes as f64;
            let node_gap = (r.nodes_min as f64 - n).max(0.0) + (n - r.nodes_max as f64).max(0.0);
            let s = max_speed_mps;
            let speed_gap = (r.speed_min_mps - s).max(0.0) + (s - r.speed_max_mps).max(0.0);
            mob + node_gap + 10.0 * speed_gap
        };
        self.rows
            .iter()
            .min_by(|a, b| score(a).total_cmp(&score(b)))
            .expect("validated tables are non-empty")
    }
}

/// The hybrid agent: every component protocol keeps live state, the
/// node's mode picks which one answers, and proactive chatter is gated to
/// the modes that asked for it.
pub struct DeerpAgent {
    id: NodeId,
    assignment: ProtocolAssignment,
    dsdv: Option<DsdvAgent>,
    dsr: Option<DsrAgent>,
    aodv: Option<AodvAgent>,
    gated_updates: u64,
}

impl DeerpAgent {
    /// Panics if the assignment names `deerp` itself as a component;
    /// table loading already rejects that.
    pub fn new(id: NodeId, assignment: ProtocolAssignment) -> Self {
        let components: BTreeSet<Protocol> = assignment.components().into_iter().collect();
        assert!(
            !components.contains(&Protocol::Deerp),
            "deerp cannot be its own component"
        );
        DeerpAgent {
            id,
            assignment,
            dsdv: components
                .contains(&Protocol::Dsdv)
                .then(|| DsdvAgent::new(id)),
            dsr: components
                .contains(&Protocol::Dsr)
                .then(|| DsrAgent::new(id)),
            aodv: components
                .contains(&Protocol::Aodv)
                .then(|| AodvAgent::new(id)),
            gated_updates: 0,
        }
    }

    pub fn assignment(&self) -> ProtocolAssignment {
        self.assignment
    }

    /// Periodic updates suppressed because the node's mode was not
    /// assigned to the proactive protocol at the tick.
    pub fn gated_updates(&self) -> u64 {
        self.gated_updates
    }

    pub fn dsdv(&self) -> Option<&DsdvAgent> {
        self.dsdv.as_ref()
    }

    pub fn dsr(&self) -> Option<&DsrAgent> {
        self.dsr.as_ref()
    }

    pub fn dsr_mut(&mut self) -> Option<&mut DsrAgent> {
        self.dsr.as_mut()
    }

    pub fn aodv(&self) -> Option<&AodvAgent> {
        self.aodv.as_ref()
    }

    /// The mode's protocol first, then the remaining components.
    fn consult_order(&self, mode: Mode) -> Vec<Protocol> {
        let mut order = vec![self.assignment.protocol_for(mode)];
        for p in self.assignment.components() {
            if !order.contains(&p) {
                order.push(p);
            }
        }
        order
    }

    fn component_try_send(
        &mut self,
        proto: Protocol,
        ctx: &mut AgentCtx,
        packet: DataPacket,
    ) -> Result<(), DataPacket> {
        match proto {
            Protocol::Dsdv => match self.dsdv.as_mut() {
                Some(d) => d.try_send_data(ctx, packet),
                None => Err(packet),
            },
            Protocol::Dsr => match self.dsr.as_mut() {
                Some(d) => d.try_send_data(ctx, packet),
                None => Err(packet),
            },
            Protocol::Aodv => match self.aodv.as_mut() {
                Some(a) => a.try_send_data(ctx, packet),
                None => Err(packet),
            },
            Protocol::Deerp => Err(packet),
        }
    }

    /// Mode-first route consultation with cross-protocol fallback; a miss
    /// everywhere lands in a reactive component's discovery buffer, or is
    /// dropped when the assignment is purely proactive.
    fn route_data(&mut self, ctx: &mut AgentCtx, packet: DataPacket) {
        let order = self.consult_order(ctx.mode);
        let mut packet = packet;
        for proto in &order {
            packet = match self.component_try_send(*proto, ctx, packet) {
                Ok(()) => return,
                Err(p) => p,
            };
        }
        for proto in &order {
            match proto {
                Protocol::Dsr => {
                    self.dsr
                        .as_mut()
                        .expect("component exists")
                        .enqueue_for_discovery(ctx, packet);
                    return;
                }
                Protocol::Aodv => {
                    self.aodv
                        .as_mut()
                        .expect("component exists")
                        .enqueue_for_discovery(ctx, packet);
                    return;
                }
                _ => {}
            }
        }
        ctx.drop_packet(packet, DropCause::NoRoute);
    }
}

impl RoutingAgent for DeerpAgent {
    fn protocol(&self) -> Protocol {
        Protocol::Deerp
    }

    fn start(&mut self, ctx: &mut AgentCtx) {
        if let Some(d) = self.dsdv.as_mut() {
            d.start(ctx);
        }
        if let Some(d) = self.dsr.as_mut() {
            d.start(ctx);
        }
        if let Some(a) = self.aodv.as_mut() {
            a.start(ctx);
        }
    }

    fn originate(&mut self, ctx: &mut AgentCtx, packet: DataPacket) {
        if packet.dst == ctx.self_id {
            ctx.deliver(packet);
            return;
        }
        self.route_data(ctx, packet);
    }

    fn on_frame(&mut self, ctx: &mut AgentCtx, from: NodeId, payload: &Payload) {
        match payload {
            Payload::Data {
                source_route: Some(_),
                ..
            } => {
                if let Some(d) = self.dsr.as_mut() {
                    d.on_frame(ctx, from, payload);
                } else if let Payload::Data { packet, .. } = payload {
                    let packet = packet.clone();
                    if packet.dst == ctx.self_id {
                        ctx.deliver(packet);
                    } else {
                        ctx.drop_packet(packet, DropCause::NoRoute);
                    }
                }
            }
            Payload::Data {
                packet,
                source_route: None,
            } => {
                let packet = packet.clone();
                if packet.dst == ctx.self_id {
                    ctx.deliver(packet);
                } else {
                    self.route_data(ctx, packet);
                }
            }
            Payload::Control(msg) => {
                let agent: Option<&mut dyn RoutingAgent> = match msg {
                    ControlMsg::DsdvUpdate { .. } => {
                        self.dsdv.as_mut().map(|d| d as &mut dyn RoutingAgent)
                    }
                    ControlMsg::DsrRouteRequest { .. }
                    | ControlMsg::DsrRouteReply { .. }
                    | ControlMsg::DsrRouteError { .. } => {
                        self.dsr.as_mut().map(|d| d as &mut dyn RoutingAgent)
                    }
                    ControlMsg::AodvRouteRequest { .. }
                    | ControlMsg::AodvRouteReply { .. }
                    | ControlMsg::AodvRouteError { .. } => {
                        self.aodv.as_mut().map(|a| a as &mut dyn RoutingAgent)
                    }
                };
                if let Some(agent) = agent {
                    agent.on_frame(ctx, from, payload);
                }
            }
        }
    }

    fn on_link_break(&mut self, ctx: &mut AgentCtx, next_hop: NodeId, frame: &Frame) {
        if let Some(d) = self.dsdv.as_mut() {
            d.note_broken_link(ctx, next_hop);
        }
        if let Some(d) = self.dsr.as_mut() {
            d.note_broken_link(ctx, next_hop);
        }
        if let Some(a) = self.aodv.as_mut() {
            a.note_broken_link(ctx, next_hop);
        }
        if let Payload::Data {
            packet,
            source_route,
        } = &frame.payload
        {
            if let (Some(route), Some(d)) = (source_route, self.dsr.as_mut()) {
                d.report_broken_source_route(ctx, next_hop, route);
            }
            ctx.drop_packet(packet.clone(), DropCause::NoRoute);
        }
    }

    fn on_timer(&mut self, ctx: &mut AgentCtx, key: TimerKey) {
        match key {
            TimerKey::DsdvPeriodic => {
                let Some(d) = self.dsdv.as_mut() else { return };
                if self.assignment.protocol_for(ctx.mode) == Protocol::Dsdv {
                    d.advertise_full_table(ctx);
                } else {
                    self.gated_updates += 1;
                }
                d.schedule_next_advertisement(ctx);
            }
            TimerKey::DsrDiscovery { .. } => {
                if let Some(d) = self.dsr.as_mut() {
                    d.on_timer(ctx, key);
                }
            }
            TimerKey::AodvDiscovery { .. } => {
                if let Some(a) = self.aodv.as_mut() {
                    a.on_timer(ctx, key);
                }
            }
        }
    }

    fn next_hop_for(&self, dest: NodeId, now: SimTime) -> Option<NodeId> {
        if dest == self.id {
            return None;
        }
        for proto in self.consult_order(Mode::Idle) {
            let hop = match proto {
                Protocol::Dsdv => self.dsdv.as_ref().and_then(|d| d.next_hop_for(dest, now)),
                Protocol::Dsr => self.dsr.as_ref().and_then(|d| d.next_hop_for(dest, now)),
                Protocol::Aodv => self.aodv.as_ref().and_then(|a| a.next_hop_for(dest, now)),
                Protocol::Deerp => None,
            };
            if hop.is_some() {
                return hop;
            }
        }
        None
    }

    fn buffered_packets(&self) -> usize {
        self.dsdv.as_ref().map_or(0, |d| d.buffered_packets())
            + self.dsr.as_ref().map_or(0, |d| d.buffered_packets())
            + self.aodv.as_ref().map_or(0, |a| a.buffered_packets())
    }

    fn control_sends(&self) -> u64 {
        self.dsdv.as_ref().map_or(0, |d| d.control_sends())
            + self.dsr.as_ref().map_or(0, |d| d.control_sends())
            + self.aodv.as_ref().map_or(0, |a| a.control_sends())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::Dest;
    use crate::routing::Action;

    fn t(s: f64) -> SimTime {
        SimTime::new(s)
    }

    #[test]
    fn mode_classification_window_and_precedence() {
        let mut a = ActivityTracker::default();
        assert_eq!(a.classify(t(5.0)), Mode::Idle);

        a.note_tx(t(10.0));
        assert_eq!(a.classify(t(10.5)), Mode::Tx);
        assert_eq!(a.classify(t(11.0)), Mode::Tx, "window is inclusive");
        assert_eq!(a.classify(t(11.001)), Mode::Idle);

        let mut b = ActivityTracker::default();
        b.note_rx(t(10.0));
        assert_eq!(b.classify(t(10.5)), Mode::Rx);
        assert_eq!(b.classify(t(12.0)), Mode::Idle);

        let mut c = ActivityTracker::default();
        c.note_tx(t(10.0));
        c.note_rx(t(10.0));
        assert_eq!(c.classify(t(10.5)), Mode::Tx, "tx outranks rx");
    }

    #[test]
    fn builtin_table_selects_the_expected_rows() {
        let table = RpscTable::default();
        table.validate().unwrap();

        let row = table.select(MobilityModel::Rwp, 10, 10.0).unwrap();
        assert_eq!(
            row.assignment,
            ProtocolAssignment {
                idle: Protocol::Dsr,
                tx: Protocol::Dsdv,
                rx: Protocol::Dsr
            }
        );

        let row = table.select(MobilityModel::Rpgm, 50, 5.0).unwrap();
        assert_eq!(
            row.assignment,
            ProtocolAssignment {
                idle: Protocol::Dsdv,
                tx: Protocol::Dsdv,
                rx: Protocol::Dsr
            }
        );

        let err = table.select(MobilityModel::Rwp, 100, 10.0).unwrap_err();
        assert_eq!(err.nodes, 100);
    }

    #[test]
    fn text_format_round_trips() {
        let table = RpscTable::default();
        let text = table.to_text();
        let parsed = RpscTable::parse(&text).unwrap();
        assert_eq!(parsed, table);

        assert!(RpscTable::parse("rwp 5 25 1\n").is_err(), "short row");
        assert!(
            RpscTable::parse("rwp 5 25 1 10 dsr deerp dsr\n").is_err(),
            "recursive component"
        );
        assert!(
            RpscTable::parse("teleport 5 25 1 10 dsr dsdv dsr\n").is_err(),
            "unknown mobility"
        );
        assert!(RpscTable::parse("# only comments\n").is_err(), "empty table");
    }

    #[test]
    fn overlapping_rows_are_rejected() {
        let text = "rwp 5 25 1 10 dsr dsdv dsr\nrwp 20 30 2 8 dsdv dsdv dsdv\n";
        assert!(matches!(
            RpscTable::parse(text),
            Err(RpscError::OverlappingRows { a: 1, b: 2 })
        ));
        // Same ranges, different mobility: fine.
        let text = "rwp 5 25 1 10 dsr dsdv dsr\nrpgm 5 25 1 10 dsdv dsdv dsdv\n";
        assert!(RpscTable::parse(text).is_ok());
    }

    #[test]
    fn nearest_row_fallback_prefers_same_mobility() {
        let table = RpscTable::default();
        let row = table.select_nearest(MobilityModel::Rwp, 100, 10.0);
        assert_eq!(row.mobility, MobilityModel::Rwp);
        let row = table.select_nearest(MobilityModel::Rpgm, 10, 3.0);
        assert_eq!(row.mobility, MobilityModel::Rpgm);
    }

    fn rwp_assignment() -> ProtocolAssignment {
        ProtocolAssignment {
            idle: Protocol::Dsr,
            tx: Protocol::Dsdv,
            rx: Protocol::Dsr,
        }
    }

    fn ctx(now: f64, id: u32, mode: Mode) -> AgentCtx {
        AgentCtx::new(t(now), NodeId(id), mode)
    }

    fn has_dsdv_update(actions: &[Action]) -> bool {
        actions.iter().any(|a| {
            matches!(
                a,
                Action::Send {
                    payload: Payload::Control(ControlMsg::DsdvUpdate { .. }),
                    ..
                }
            )
        })
    }

    #[test]
    fn periodic_updates_are_gated_by_mode() {
        let mut agent = DeerpAgent::new(NodeId(0), rwp_assignment());
        let mut c = ctx(0.0, 0, Mode::Idle);
        agent.start(&mut c);
        assert!(
            c.actions
                .iter()
                .any(|a| matches!(a, Action::SetTimer { key: TimerKey::DsdvPeriodic, .. })),
            "periodic timer armed even though idle maps to dsr"
        );

        // Idle tick: suppressed but re-armed.
        let mut c = ctx(15.0, 0, Mode::Idle);
        agent.on_timer(&mut c, TimerKey::DsdvPeriodic);
        assert!(!has_dsdv_update(&c.actions));
        assert!(c
            .actions
            .iter()
            .any(|a| matches!(a, Action::SetTimer { key: TimerKey::DsdvPeriodic, .. })));
        assert_eq!(agent.gated_updates(), 1);

        // Tx tick: the update goes out.
        let mut c = ctx(30.0, 0, Mode::Tx);
        agent.on_timer(&mut c, TimerKey::DsdvPeriodic);
        assert!(has_dsdv_update(&c.actions));
        assert_eq!(agent.gated_updates(), 1);
    }

    #[test]
    fn route_miss_falls_back_across_components() {
        let mut agent = DeerpAgent::new(NodeId(0), rwp_assignment());
        // Tx mode maps to DSDV, whose table is empty; the DSR cache has a
        // route, so the fallback uses it.
        agent.dsr_mut().unwrap().on_frame(
            &mut ctx(0.0, 0, Mode::Idle),
            NodeId(1),
            &Payload::Control(ControlMsg::DsrRouteReply {
                route: vec![NodeId(0), NodeId(1), NodeId(2)],
            }),
        );

        let packet = DataPacket {
            flow: 0,
            seq: 0,
            src: NodeId(0),
            dst: NodeId(2),
            payload_bytes: 512,
            originated_at: SimTime::ZERO,
            path: vec![],
        };
        let mut c = ctx(1.0, 0, Mode::Tx);
        agent.originate(&mut c, packet.clone());
        match &c.actions[0] {
            Action::Send {
                dst: Dest::Unicast(nh),
                payload: Payload::Data { source_route, .. },
            } => {
                assert_eq!(*nh, NodeId(1));
                assert!(source_route.is_some(), "served from the DSR cache");
            }
            other => panic!("expected data send, got {other:?}"),
        }

        // Miss in both components: buffered pending DSR discovery.
        let mut c = ctx(2.0, 0, Mode::Tx);
        let mut p2 = packet;
        p2.dst = NodeId(7);
        agent.originate(&mut c, p2);
        assert_eq!(agent.buffered_packets(), 1);
        assert!(c.actions.iter().any(|a| matches!(
            a,
            Action::Send {
                payload: Payload::Control(ControlMsg::DsrRouteRequest { .. }),
                ..
            }
        )));
    }

    #[test]
    fn purely_proactive_assignment_drops_on_miss() {
        let mut agent = DeerpAgent::new(NodeId(0), ProtocolAssignment::uniform(Protocol::Dsdv));
        let packet = DataPacket {
            flow: 0,
            seq: 0,
            src: NodeId(0),
            dst: NodeId(5),
            payload_bytes: 512,
            originated_at: SimTime::ZERO,
            path: vec![],
        };
        let mut c = ctx(0.0, 0, Mode::Idle);
        agent.originate(&mut c, packet);
        assert!(matches!(
            c.actions[0],
            Action::Drop {
                cause: DropCause::NoRoute,
                ..
            }
        ));
        // And the degenerate all-DSDV agent never gates its own updates.
        let mut c = ctx(15.0, 0, Mode::Idle);
        agent.on_timer(&mut c, TimerKey::DsdvPeriodic);
        assert!(has_dsdv_update(&c.actions));
        assert_eq!(agent.gated_updates(), 0);
    }
}
