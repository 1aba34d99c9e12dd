//! The simulation proper: mobility, radio, energy, traffic, and one
//! routing agent per node wired into a single deterministic event loop.
//!
//! Ordering rules that make runs reproducible byte-for-byte:
//!
//! - all state lives in ordered containers and receivers are visited in
//!   ascending node id;
//! - the event queue breaks time ties by insertion order;
//! - every random draw comes from a named stream, so the protocol choice
//!   can never perturb mobility or traffic.
//!
//! Activity modes follow a note-then-classify convention: the event being
//! processed is recorded in the node's activity tracker *before* the agent
//! is consulted, so an agent always sees the mode implied by the very
//! event it is reacting to. Originating and transmitting note transmit
//! activity; only unicast frames addressed to the node note receive
//! activity (overheard broadcasts leave the mode untouched).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::deerp::{ActivityTracker, DeerpAgent, NoMatchingRow, ProtocolAssignment, RpscError, RpscTable};
use crate::energy::{EnergyAccount, EnergyError};
use crate::engine::Engine;
use crate::metrics::{NodeEnergy, RunMetrics};
use crate::mobility::{build_plan, MobilityPlan, Position};
use crate::radio::{neighbors, Dest, DropCause, Frame, InFlight, Payload, RadioConfig};
use crate::routing::{
    Action, AgentCtx, AodvAgent, DsdvAgent, DsrAgent, Protocol, RoutingAgent, TimerKey,
};
use crate::rng::RngStreams;
use crate::scenario::{ScenarioConfig, ScenarioError};
use crate::time::SimTime;
use crate::traffic::{emit_schedule, CbrFlow, DataPacket, NodeId, TrafficError};

/// One node's runtime state: its protocol agent, link interface, energy
/// ledger, recent-activity tracker, and any scheduled radio-off windows.
struct SimNode {
    agent: Box<dyn RoutingAgent>,
    mac: crate::radio::Mac,
    energy: EnergyAccount,
    activity: ActivityTracker,
    sleeps: Vec<(SimTime, SimTime)>,
    control_tx: u64,
    data_tx: u64,
}

impl SimNode {
    fn new(agent: Box<dyn RoutingAgent>, energy: EnergyAccount) -> SimNode {
        SimNode {
            agent,
            mac: crate::radio::Mac::default(),
            energy,
            activity: ActivityTracker::default(),
            sleeps: Vec::new(),
            control_tx: 0,
            data_tx: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error("cannot read selection table '{path}': {source}")]
    TableRead {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Table(#[from] RpscError),
    #[error(transparent)]
    Selection(#[from] NoMatchingRow),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SimEvent {
    /// Flow `flow` emits its `seq`-th packet.
    Emit { flow: u32, seq: u64 },
    /// `node`'s in-flight frame leaves its antenna.
    TxComplete { node: u32 },
    Timer { node: u32, key: TimerKey },
    /// `node`'s sleep window ended; restart its transmit queue.
    Wake { node: u32 },
    /// Record energy/mode snapshots for every node.
    Sample,
}

/// One delivered packet, with the exact forwarding path taken
/// (source first, destination last).
#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryRecord {
    pub flow: u32,
    pub seq: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub delay_s: f64,
    pub path: Vec<NodeId>,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub delivered: Vec<DeliveryRecord>,
    /// Line-per-event trace; only assembled when tracing was requested.
    pub event_log: Option<String>,
    pub energy_samples_csv: Option<String>,
    pub mode_samples_csv: Option<String>,
    pub positions_csv: Option<String>,
    pub mobility_hash: u64,
    pub traffic_hash: u64,
    pub events_processed: u64,
    /// Worst per-node `initial = remaining + consumed` relative error.
    pub max_conservation_residual: f64,
    /// Worst per-node gap between attributed bucket time and lifetime.
    pub max_partition_residual: f64,
    /// The selection-table assignment in force (hybrid runs only).
    pub assignment: Option<ProtocolAssignment>,
}

/// A fully materialized run, ready to execute.
pub struct Simulation {
    cfg: ScenarioConfig,
    plan: MobilityPlan,
    flows: Vec<CbrFlow>,
    assignment: Option<ProtocolAssignment>,
    trace: bool,
}

impl Simulation {
    /// Validate the scenario and precompute the world: trajectories for
    /// the whole run, the traffic flows, and (for hybrid runs) the
    /// protocol assignment selected from the table.
    pub fn new(cfg: &ScenarioConfig) -> Result<Simulation, SimError> {
        cfg.validate()?;
        let streams = RngStreams::new(cfg.seed);
        let fixed = cfg.fixed_positions();
        let plan = build_plan(
            &cfg.mobility_config(),
            cfg.nodes as usize,
            cfg.duration_s + 1.0,
            &streams,
            fixed.as_deref(),
        );
        let flows = cfg.resolve_flows(&streams)?;
        let assignment = if cfg.protocol == Protocol::Deerp {
            let table = match &cfg.rpsc.table {
                Some(path) => {
                    let text =
                        std::fs::read_to_string(path).map_err(|e| SimError::TableRead {
                            path: path.display().to_string(),
                            source: e,
                        })?;
                    RpscTable::parse(&text)?
                }
                None => RpscTable::default(),
            };
            let row = if cfg.rpsc.nearest {
                table.select_nearest(cfg.mobility, cfg.nodes, cfg.speed.max_mps)
            } else {
                table.select(cfg.mobility, cfg.nodes, cfg.speed.max_mps)?
            };
            Some(row.assignment)
        } else {
            None
        };
        Ok(Simulation {
            cfg: cfg.clone(),
            plan,
            flows,
            assignment,
            trace: false,
        })
    }

    /// Like [`Simulation::new`], but with an explicit traffic schedule in
    /// place of the scenario's flow configuration. Each flow keeps its own
    /// window and rate, which makes staggered or per-pair schedules easy to
    /// express.
    pub fn with_flows(cfg: &ScenarioConfig, flows: Vec<CbrFlow>) -> Result<Simulation, SimError> {
        let mut problems = Vec::new();
        for (i, f) in flows.iter().enumerate() {
            if f.src.0 >= cfg.nodes || f.dst.0 >= cfg.nodes {
                problems.push(format!("flow {i}: endpoint outside 0..{}", cfg.nodes));
            }
            if f.src == f.dst {
                problems.push(format!("flow {i}: source and destination are both {}", f.src));
            }
            if f.start_s < 0.0 {
                problems.push(format!("flow {i}: negative start time"));
            }
        }
        if !problems.is_empty() {
            return Err(ScenarioError::Invalid(problems).into());
        }
        let mut sim = Simulation::new(cfg)?;
        sim.flows = flows;
        Ok(sim)
    }

    /// Record an event log and periodic snapshots during the run.
    pub fn with_trace(mut self, on: bool) -> Simulation {
        self.trace = on;
        self
    }

    pub fn plan(&self) -> &MobilityPlan {
        &self.plan
    }

    pub fn flows(&self) -> &[CbrFlow] {
        &self.flows
    }

    /// The per-mode protocol assignment a hybrid run selected.
    pub fn assignment(&self) -> Option<ProtocolAssignment> {
        self.assignment
    }

    pub fn run(self) -> RunOutput {
        let cfg = &self.cfg;
        let node_count = cfg.nodes as usize;
        let end = SimTime::new(cfg.duration_s);
        let sample_interval = match (self.trace, cfg.sample_interval_s) {
            (_, Some(s)) => Some(s),
            (true, None) => Some(1.0),
            (false, None) => None,
        };

        let mut nodes: Vec<SimNode> = (0..node_count)
            .map(|n| {
                SimNode::new(
                    make_agent(cfg.protocol, NodeId(n as u32), self.assignment),
                    EnergyAccount::new(cfg.energy_params()),
                )
            })
            .collect();
        for w in &cfg.sleep {
            nodes[w.node as usize]
                .sleeps
                .push((SimTime::new(w.from_s), SimTime::new(w.to_s)));
        }
        for node in &mut nodes {
            node.sleeps.sort_by_key(|&(from, _)| from);
        }

        let mut engine: Engine<SimEvent> = Engine::new();
        for (fi, flow) in self.flows.iter().enumerate() {
            for (k, at) in emit_schedule(flow).into_iter().enumerate() {
                engine
                    .schedule(
                        at,
                        SimEvent::Emit {
                            flow: fi as u32,
                            seq: k as u64,
                        },
                    )
                    .expect("emission within run");
            }
        }
        for (n, node) in nodes.iter().enumerate() {
            for &(_, until) in &node.sleeps {
                if until <= end {
                    engine
                        .schedule(until, SimEvent::Wake { node: n as u32 })
                        .expect("wake within run");
                }
            }
        }
        if let Some(interval) = sample_interval {
            let mut k = 1u64;
            while (k as f64) * interval <= cfg.duration_s + 1e-9 {
                engine
                    .schedule(SimTime::new(k as f64 * interval), SimEvent::Sample)
                    .expect("sample within run");
                k += 1;
            }
        }

        let mut runner = Runner {
            cfg,
            plan: &self.plan,
            flows: &self.flows,
            radio: cfg.radio,
            end,
            nodes,
            originated: 0,
            delivered: Vec::new(),
            drops: BTreeMap::new(),
            control_frames: 0,
            data_frames: 0,
            trace: self.trace,
            log: String::new(),
            energy_csv: String::from("time_s,node,remaining_mj,idle_mj,sleep_mj,tx_mj,rx_mj\n"),
            modes_csv: String::from("time_s,node,mode\n"),
        };

        for n in 0..node_count {
            let mut ctx = runner.agent_ctx(SimTime::ZERO, n);
            runner.nodes[n].agent.start(&mut ctx);
            runner.apply(&mut engine, SimTime::ZERO, n, ctx.actions);
        }

        let mut events_processed = 0u64;
        while let Some((now, _, ev)) = engine.pop_due(end) {
            events_processed += 1;
            runner.handle(&mut engine, now, ev);
        }

        let closing = Closing {
            end,
            events_processed,
            sample_interval,
            mobility_hash: self.plan.trace_hash(),
            traffic_hash: traffic_hash(&self.flows),
            positions_csv: self
                .trace
                .then(|| self.plan.positions_csv(cfg.duration_s, sample_interval.unwrap_or(1.0))),
            assignment: self.assignment,
        };
        runner.finish(closing)
    }
}

fn make_agent(
    protocol: Protocol,
    id: NodeId,
    assignment: Option<ProtocolAssignment>,
) -> Box<dyn RoutingAgent> {
    match protocol {
        Protocol::Dsdv => Box::new(DsdvAgent::new(id)),
        Protocol::Dsr => Box::new(DsrAgent::new(id)),
        Protocol::Aodv => Box::new(AodvAgent::new(id)),
        Protocol::Deerp => Box::new(DeerpAgent::new(
            id,
            assignment.expect("hybrid runs resolve an assignment up front"),
        )),
    }
}

struct Runner<'a> {
    cfg: &'a ScenarioConfig,
    plan: &'a MobilityPlan,
    flows: &'a [CbrFlow],
    radio: RadioConfig,
    end: SimTime,
    nodes: Vec<SimNode>,
    originated: u64,
    delivered: Vec<DeliveryRecord>,
    drops: BTreeMap<DropCause, u64>,
    control_frames: u64,
    data_frames: u64,
    trace: bool,
    log: String,
    energy_csv: String,
    modes_csv: String,
}

impl Runner<'_> {
    fn handle(&mut self, engine: &mut Engine<SimEvent>, now: SimTime, ev: SimEvent) {
        match ev {
            SimEvent::Emit { flow, seq } => self.on_emit(engine, now, flow, seq),
            SimEvent::TxComplete { node } => self.on_tx_complete(engine, now, node as usize),
            SimEvent::Timer { node, key } => self.on_timer(engine, now, node as usize, key),
            SimEvent::Wake { node } => self.kick_tx(engine, now, node as usize),
            SimEvent::Sample => self.on_sample(now),
        }
    }

    fn agent_ctx(&self, now: SimTime, n: usize) -> AgentCtx {
        AgentCtx::new(now, NodeId(n as u32), self.nodes[n].activity.classify(now))
    }

    fn asleep(&self, n: usize, t: SimTime) -> bool {
        self.nodes[n]
            .sleeps
            .iter()
            .any(|&(from, until)| from <= t && t < until)
    }

    /// Attribute all unclaimed time up to `to`, splitting idle from sleep
    /// by the node's scheduled windows. Death during the accrual is
    /// handled like any other depletion.
    fn accrue(&mut self, n: usize, to: SimTime) {
        let died_now = {
            let node = &mut self.nodes[n];
            let was_alive = node.energy.alive();
            for &(from, until) in &node.sleeps {
                if from >= to {
                    break;
                }
                node.energy.accrue_idle(from);
                node.energy.accrue_sleep(until.min(to));
            }
            node.energy.accrue_idle(to);
            was_alive && !node.energy.alive()
        };
        if died_now {
            self.on_died(now_of_death(&self.nodes[n]), n);
        }
    }

    fn on_died(&mut self, now: SimTime, n: usize) {
        if self.trace {
            let _ = writeln!(self.log, "{:.6} died node={n}", now.secs());
        }
        let frames: Vec<Frame> = self.nodes[n].mac.queue.drain(..).collect();
        for f in frames {
            if let Payload::Data { packet, .. } = f.payload {
                self.record_drop(now, n, packet, DropCause::DeadNode);
            }
        }
    }

    fn record_drop(&mut self, now: SimTime, n: usize, packet: DataPacket, cause: DropCause) {
        *self.drops.entry(cause).or_insert(0) += 1;
        if self.trace {
            let _ = writeln!(
                self.log,
                "{:.6} drop cause={} flow={} seq={} at={}",
                now.secs(),
                cause.label(),
                packet.flow,
                packet.seq,
                n
            );
        }
    }

    fn record_delivery(&mut self, now: SimTime, packet: DataPacket) {
        let delay_s = now - packet.originated_at;
        if self.trace {
            let path: Vec<String> = packet.path.iter().map(|p| p.to_string()).collect();
            let _ = writeln!(
                self.log,
                "{:.6} deliver flow={} seq={} dst={} delay={:.6} path={}",
                now.secs(),
                packet.flow,
                packet.seq,
                packet.dst,
                delay_s,
                path.join(">")
            );
        }
        self.delivered.push(DeliveryRecord {
            flow: packet.flow,
            seq: packet.seq,
            src: packet.src,
            dst: packet.dst,
            delay_s,
            path: packet.path,
        });
    }

    fn apply(&mut self, engine: &mut Engine<SimEvent>, now: SimTime, n: usize, actions: Vec<Action>) {
        for action in actions {
            match action {
                Action::Send { dst, payload } => {
                    let frame = Frame {
                        src: NodeId(n as u32),
                        dst,
                        payload,
                    };
                    match self.nodes[n].mac.enqueue(frame, &self.radio) {
                        Ok(()) => self.kick_tx(engine, now, n),
                        Err(frame) => {
                            if let Payload::Data { packet, .. } = frame.payload {
                                self.record_drop(now, n, packet, DropCause::Queue);
                            }
                        }
                    }
                }
                Action::SetTimer { at, key } => {
                    engine
                        .schedule(at, SimEvent::Timer { node: n as u32, key })
                        .expect("timers are never set in the past");
                }
                Action::Deliver { packet } => self.record_delivery(now, packet),
                Action::Drop { packet, cause } => self.record_drop(now, n, packet, cause),
            }
        }
    }

    /// Start transmitting the head-of-line frame if the interface is free,
    /// the node is awake and alive, and the frame can finish inside the
    /// run. Transmit energy for the whole frame is committed at start.
    fn kick_tx(&mut self, engine: &mut Engine<SimEvent>, now: SimTime, n: usize) {
        if !self.nodes[n].mac.idle() || !self.nodes[n].energy.alive() || self.asleep(n, now) {
            return;
        }
        let Some(wire) = self.nodes[n]
            .mac
            .queue
            .front()
            .map(|f| f.wire_bytes(&self.radio))
        else {
            return;
        };
        let ends = now + self.radio.airtime_s(wire);
        if ends > self.end {
            // cannot finish before the run ends; stays queued
            return;
        }
        self.accrue(n, now);
        match self.nodes[n].energy.charge_tx(now, ends) {
            Err(EnergyError::DeadNode) => {
                // the accrual just above found the node depleted
            }
            Ok(c) if c.died => {
                // died mid-frame: the transmission never completes
                let frame = self.nodes[n].mac.queue.pop_front().expect("peeked frame");
                if let Payload::Data { packet, .. } = frame.payload {
                    self.record_drop(now, n, packet, DropCause::DeadNode);
                }
                self.on_died(now_of_death(&self.nodes[n]), n);
            }
            Ok(_) => {
                let frame = self.nodes[n].mac.queue.pop_front().expect("peeked frame");
                self.nodes[n].mac.in_flight = Some(InFlight {
                    frame,
                    started_at: now,
                    ends_at: ends,
                });
                engine
                    .schedule(ends, SimEvent::TxComplete { node: n as u32 })
                    .expect("tx completion within run");
            }
        }
    }

    fn on_emit(&mut self, engine: &mut Engine<SimEvent>, now: SimTime, flow: u32, seq: u64) {
        let f = &self.flows[flow as usize];
        let packet = DataPacket {
            flow,
            seq,
            src: f.src,
            dst: f.dst,
            payload_bytes: f.payload_bytes,
            originated_at: now,
            path: Vec::new(),
        };
        self.originated += 1;
        if self.trace {
            let _ = writeln!(
                self.log,
                "{:.6} emit flow={flow} seq={seq} src={} dst={}",
                now.secs(),
                f.src,
                f.dst
            );
        }
        let n = f.src.index();
        if !self.nodes[n].energy.alive() {
            self.record_drop(now, n, packet, DropCause::DeadNode);
            return;
        }
        // note-then-classify: originating counts as transmit activity
        self.nodes[n].activity.note_tx(now);
        let mut ctx = self.agent_ctx(now, n);
        self.nodes[n].agent.originate(&mut ctx, packet);
        self.apply(engine, now, n, ctx.actions);
    }

    fn on_timer(&mut self, engine: &mut Engine<SimEvent>, now: SimTime, n: usize, key: TimerKey) {
        if !self.nodes[n].energy.alive() {
            return;
        }
        let mut ctx = self.agent_ctx(now, n);
        self.nodes[n].agent.on_timer(&mut ctx, key);
        self.apply(engine, now, n, ctx.actions);
    }

    fn on_tx_complete(&mut self, engine: &mut Engine<SimEvent>, now: SimTime, n: usize) {
        let inflight = self.nodes[n]
            .mac
            .in_flight
            .take()
            .expect("completion implies an in-flight frame");
        debug_assert_eq!(inflight.ends_at, now);
        self.nodes[n].mac.transmitted += 1;
        if inflight.frame.payload.is_data() {
            self.data_frames += 1;
            self.nodes[n].data_tx += 1;
        } else {
            self.control_frames += 1;
            self.nodes[n].control_tx += 1;
        }
        self.nodes[n].activity.note_tx(now);
        if self.trace {
            let _ = writeln!(
                self.log,
                "{:.6} tx src={} dst={} kind={} bytes={}",
                now.secs(),
                inflight.frame.src,
                inflight.frame.dst,
                inflight.frame.payload.kind(),
                inflight.frame.wire_bytes(&self.radio)
            );
        }

        // Who hears the frame is fixed at transmit start: in range then,
        // awake then, and not already dead then.
        let started = inflight.started_at;
        let positions: Vec<Position> = (0..self.nodes.len())
            .map(|i| self.plan.position_at(i, started))
            .collect();
        let eligible: Vec<usize> = neighbors(&positions, n, self.radio.range_m)
            .into_iter()
            .filter(|&r| {
                !self.asleep(r, started)
                    && self.nodes[r]
                        .energy
                        .died_at
                        .map_or(true, |died| died > started)
            })
            .collect();

        match inflight.frame.dst {
            Dest::Unicast(d) => {
                if eligible.contains(&d.index()) {
                    self.receive_frame(engine, now, started, d.index(), &inflight.frame);
                } else {
                    if self.trace {
                        let _ = writeln!(
                            self.log,
                            "{:.6} linkbreak node={} next_hop={} kind={}",
                            now.secs(),
                            n,
                            d,
                            inflight.frame.payload.kind()
                        );
                    }
                    let mut ctx = self.agent_ctx(now, n);
                    self.nodes[n].agent.on_link_break(&mut ctx, d, &inflight.frame);
                    self.apply(engine, now, n, ctx.actions);
                }
            }
            Dest::Broadcast => {
                for r in eligible {
                    self.receive_frame(engine, now, started, r, &inflight.frame);
                }
            }
        }

        self.kick_tx(engine, now, n);
    }

    fn receive_frame(
        &mut self,
        engine: &mut Engine<SimEvent>,
        now: SimTime,
        started: SimTime,
        r: usize,
        frame: &Frame,
    ) {
        self.accrue(r, started);
        match self.nodes[r].energy.charge_rx(started, now) {
            Err(EnergyError::DeadNode) => return,
            Ok(c) if c.died => {
                // ran out partway through reception; the frame is lost
                self.on_died(now_of_death(&self.nodes[r]), r);
                return;
            }
            Ok(_) => {}
        }
        if frame.dst == Dest::Unicast(NodeId(r as u32)) {
            self.nodes[r].activity.note_rx(now);
        }
        if self.trace {
            let _ = writeln!(
                self.log,
                "{:.6} rx node={} from={} kind={}",
                now.secs(),
                r,
                frame.src,
                frame.payload.kind()
            );
        }
        let mut ctx = self.agent_ctx(now, r);
        self.nodes[r].agent.on_frame(&mut ctx, frame.src, &frame.payload);
        self.apply(engine, now, r, ctx.actions);
    }

    fn on_sample(&mut self, now: SimTime) {
        for n in 0..self.nodes.len() {
            self.accrue(n, now);
            let node = &self.nodes[n];
            let e = &node.energy;
            let _ = writeln!(
                self.energy_csv,
                "{},{},{},{},{},{},{}",
                now.secs(),
                n,
                e.remaining_mj,
                e.consumed_idle_mj,
                e.consumed_sleep_mj,
                e.consumed_tx_mj,
                e.consumed_rx_mj
            );
            let _ = writeln!(
                self.modes_csv,
                "{},{},{}",
                now.secs(),
                n,
                node.activity.classify(now)
            );
        }
    }

    fn finish(mut self, closing: Closing) -> RunOutput {
        // Close the books: attribute every node's remaining lifetime, and
        // account for packets still in the system.
        for n in 0..self.nodes.len() {
            self.accrue(n, closing.end);
        }
        for n in 0..self.nodes.len() {
            let alive = self.nodes[n].energy.alive();
            let parked =
                self.nodes[n].mac.data_frames_held() as u64 + self.nodes[n].agent.buffered_packets() as u64;
            if parked > 0 {
                let cause = if alive {
                    DropCause::EndOfRun
                } else {
                    DropCause::DeadNode
                };
                *self.drops.entry(cause).or_insert(0) += parked;
            }
        }

        let duration = self.cfg.duration_s;
        let mut per_node = Vec::with_capacity(self.nodes.len());
        let mut max_conservation = 0.0f64;
        let mut max_partition = 0.0f64;
        for (i, node) in self.nodes.iter().enumerate() {
            let e = &node.energy;
            max_conservation = max_conservation.max(e.conservation_residual());
            max_partition = max_partition.max(e.partition_residual(duration));
            per_node.push(NodeEnergy {
                node: i as u32,
                idle_mj: e.consumed_idle_mj,
                sleep_mj: e.consumed_sleep_mj,
                tx_mj: e.consumed_tx_mj,
                rx_mj: e.consumed_rx_mj,
                remaining_mj: e.remaining_mj,
                control_tx: node.control_tx,
                data_tx: node.data_tx,
                died_at_s: e.died_at.map(|t| t.secs()),
            });
        }
        let nf = self.nodes.len() as f64;
        let mean = |f: &dyn Fn(&NodeEnergy) -> f64| per_node.iter().map(|n| f(n)).sum::<f64>() / nf;

        let delivered_count = self.delivered.len() as u64;
        let dropped = |cause: DropCause| self.drops.get(&cause).copied().unwrap_or(0);
        let delivered_bits: f64 = self
            .delivered
            .iter()
            .map(|d| self.flows[d.flow as usize].payload_bytes as f64 * 8.0)
            .sum();
        let mean_delay_s = if self.delivered.is_empty() {
            None
        } else {
            Some(self.delivered.iter().map(|d| d.delay_s).sum::<f64>() / delivered_count as f64)
        };

        let metrics = RunMetrics {
            protocol: self.cfg.protocol,
            nodes: self.cfg.nodes,
            seed: self.cfg.seed,
            duration_s: duration,
            originated: self.originated,
            delivered: delivered_count,
            dropped_queue: dropped(DropCause::Queue),
            dropped_no_route: dropped(DropCause::NoRoute),
            dropped_dead_node: dropped(DropCause::DeadNode),
            dropped_end_of_run: dropped(DropCause::EndOfRun),
            pdr: if self.originated == 0 {
                0.0
            } else {
                delivered_count as f64 / self.originated as f64
            },
            throughput_bps: delivered_bits / duration,
            mean_delay_s,
            control_frames: self.control_frames,
            data_frames: self.data_frames,
            routing_overhead: (delivered_count > 0)
                .then(|| self.control_frames as f64 / delivered_count as f64),
            mean_idle_mj: mean(&|n| n.idle_mj),
            mean_sleep_mj: mean(&|n| n.sleep_mj),
            mean_tx_mj: mean(&|n| n.tx_mj),
            mean_rx_mj: mean(&|n| n.rx_mj),
            mean_consumed_mj: mean(&|n| n.consumed_mj()),
            mean_remaining_mj: mean(&|n| n.remaining_mj),
            nodes_dead: per_node.iter().filter(|n| n.died_at_s.is_some()).count() as u32,
            per_node,
        };

        debug_assert_eq!(
            metrics.originated,
            metrics.delivered + metrics.dropped_total(),
            "every originated packet must be delivered or accounted as a drop"
        );

        let sampled = closing.sample_interval.is_some();
        RunOutput {
            metrics,
            delivered: self.delivered,
            event_log: self.trace.then_some(self.log),
            energy_samples_csv: sampled.then_some(self.energy_csv),
            mode_samples_csv: sampled.then_some(self.modes_csv),
            positions_csv: closing.positions_csv,
            mobility_hash: closing.mobility_hash,
            traffic_hash: closing.traffic_hash,
            events_processed: closing.events_processed,
            max_conservation_residual: max_conservation,
            max_partition_residual: max_partition,
            assignment: closing.assignment,
        }
    }
}

/// End-of-run facts the runner needs to assemble the output.
struct Closing {
    end: SimTime,
    events_processed: u64,
    sample_interval: Option<f64>,
    mobility_hash: u64,
    traffic_hash: u64,
    positions_csv: Option<String>,
    assignment: Option<ProtocolAssignment>,
}

fn now_of_death(node: &SimNode) -> SimTime {
    node.energy.died_at.expect("caller observed the death")
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Order-sensitive digest of the materialized flows; equal digests mean two
/// runs offered identical traffic.
pub fn traffic_hash(flows: &[CbrFlow]) -> u64 {
    let mut s = String::new();
    for f in flows {
        let _ = write!(
            s,
            "{},{},{},{},{},{};",
            f.src, f.dst, f.payload_bytes, f.rate_pps, f.start_s, f.stop_s
        );
    }
    fnv1a(s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{FlowPair, SleepWindow};

    /// Two nodes 100 m apart, frozen in place for the whole run.
    fn static_pair(protocol: Protocol) -> ScenarioConfig {
        let mut cfg = ScenarioConfig {
            nodes: 2,
            protocol,
            duration_s: 60.0,
            pause_s: 120.0,
            positions: Some(vec![[0.0, 0.0], [100.0, 0.0]]),
            ..ScenarioConfig::default()
        };
        cfg.traffic.pairs = vec![FlowPair { src: 0, dst: 1 }];
        cfg.traffic.start_s = 20.0;
        cfg.traffic.rate_pps = 2.0;
        cfg.rpsc.nearest = true; // 2 nodes sit outside every stock table row
        cfg
    }

    #[test]
    fn static_pair_delivers_everything_under_every_protocol() {
        for protocol in Protocol::all() {
            let cfg = static_pair(protocol);
            let out = Simulation::new(&cfg).unwrap().run();
            assert_eq!(out.metrics.originated, 80, "{protocol}: 2 pps over [20, 60)");
            assert_eq!(
                out.metrics.pdr, 1.0,
                "{protocol}: lost {} of {}",
                out.metrics.originated - out.metrics.delivered,
                out.metrics.originated
            );
            for d in &out.delivered {
                assert_eq!(d.path, vec![NodeId(0), NodeId(1)], "{protocol}");
                assert!(d.delay_s > 0.0, "{protocol}: delivery takes airtime");
            }
        }
    }

    #[test]
    fn conservation_and_partition_hold_on_a_mobile_run() {
        for protocol in [Protocol::Dsdv, Protocol::Dsr, Protocol::Aodv] {
            let cfg = ScenarioConfig {
                protocol,
                seed: 3,
                duration_s: 60.0,
                ..ScenarioConfig::default()
            };
            let out = Simulation::new(&cfg).unwrap().run();
            assert_eq!(
                out.metrics.originated,
                out.metrics.delivered + out.metrics.dropped_total(),
                "{protocol}: packet books must balance"
            );
            assert!(out.max_conservation_residual < 1e-9, "{protocol}");
            assert!(out.max_partition_residual < 1e-9, "{protocol}");
            assert!(out.metrics.originated > 0);
        }
    }

    #[test]
    fn identical_seeds_reproduce_identical_runs() {
        let cfg = ScenarioConfig {
            protocol: Protocol::Dsr,
            seed: 11,
            duration_s: 40.0,
            ..ScenarioConfig::default()
        };
        let a = Simulation::new(&cfg).unwrap().with_trace(true).run();
        let b = Simulation::new(&cfg).unwrap().with_trace(true).run();
        assert_eq!(a.event_log, b.event_log);
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.mobility_hash, b.mobility_hash);
        assert_eq!(a.energy_samples_csv, b.energy_samples_csv);
    }

    #[test]
    fn protocol_choice_never_perturbs_the_world() {
        let mut hashes = Vec::new();
        for protocol in [Protocol::Dsdv, Protocol::Dsr, Protocol::Aodv] {
            let cfg = ScenarioConfig {
                protocol,
                seed: 42,
                duration_s: 30.0,
                ..ScenarioConfig::default()
            };
            let out = Simulation::new(&cfg).unwrap().run();
            hashes.push((out.mobility_hash, out.traffic_hash));
        }
        assert_eq!(hashes[0], hashes[1]);
        assert_eq!(hashes[1], hashes[2]);
    }

    #[test]
    fn depleted_nodes_die_and_the_books_still_balance() {
        let mut cfg = static_pair(Protocol::Dsr);
        cfg.duration_s = 10.0;
        // 230 mW idle drains 1150 mJ in 5 s, well before traffic at t = 6
        cfg.energy.initial_mj = 1150.0;
        cfg.traffic.start_s = 6.0;
        cfg.traffic.rate_pps = 1.0;
        let out = Simulation::new(&cfg).unwrap().run();
        assert_eq!(out.metrics.nodes_dead, 2);
        for n in &out.metrics.per_node {
            let died = n.died_at_s.expect("both nodes deplete");
            assert!((died - 5.0).abs() < 1e-9);
            assert_eq!(n.remaining_mj, 0.0);
        }
        assert_eq!(out.metrics.originated, 4);
        assert_eq!(out.metrics.dropped_dead_node, 4);
        assert_eq!(out.metrics.delivered, 0);
        assert!(out.max_partition_residual < 1e-9);
        assert!(out.max_conservation_residual < 1e-9);
    }

    #[test]
    fn sleep_windows_split_the_time_partition() {
        let mut cfg = static_pair(Protocol::Dsr);
        cfg.duration_s = 30.0;
        cfg.traffic.flows = Some(0);
        cfg.traffic.pairs.clear();
        cfg.sleep = vec![SleepWindow {
            node: 0,
            from_s: 10.0,
            to_s: 20.0,
        }];
        let out = Simulation::new(&cfg).unwrap().run();
        let n0 = &out.metrics.per_node[0];
        let n1 = &out.metrics.per_node[1];
        assert!((n0.idle_mj - 230.0 * 20.0).abs() < 1e-6);
        assert_eq!(n0.sleep_mj, 0.0, "default sleep draw is zero");
        assert!((n1.idle_mj - 230.0 * 30.0).abs() < 1e-6);
        assert!(out.max_partition_residual < 1e-9);
    }

    #[test]
    fn dsdv_beacons_are_the_only_traffic_free_control() {
        let mut cfg = ScenarioConfig {
            nodes: 3,
            protocol: Protocol::Dsdv,
            duration_s: 100.0,
            pause_s: 200.0,
            positions: Some(vec![[0.0, 0.0], [100.0, 0.0], [200.0, 0.0]]),
            ..ScenarioConfig::default()
        };
        cfg.traffic.flows = Some(0);
        let out = Simulation::new(&cfg).unwrap().run();
        assert_eq!(out.metrics.originated, 0);
        assert_eq!(out.metrics.data_frames, 0);
        // every node advertises at t = 15, 30, ..., 90
        assert_eq!(out.metrics.control_frames, 18);
        for n in &out.metrics.per_node {
            assert_eq!(n.control_tx, 6);
        }
    }

    #[test]
    fn hybrid_runs_fail_fast_outside_the_selection_table() {
        let cfg = ScenarioConfig {
            nodes: 100,
            protocol: Protocol::Deerp,
            area: crate::mobility::Area::square(2000.0),
            ..ScenarioConfig::default()
        };
        match Simulation::new(&cfg) {
            Err(SimError::Selection(e)) => assert_eq!(e.nodes, 100),
            other => panic!("expected a selection failure, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn hybrid_run_selects_from_the_builtin_table() {
        let cfg = ScenarioConfig {
            nodes: 10,
            protocol: Protocol::Deerp,
            duration_s: 30.0,
            ..ScenarioConfig::default()
        };
        let sim = Simulation::new(&cfg).unwrap();
        let assignment = sim.assignment().expect("hybrid run has an assignment");
        assert_eq!(assignment.idle, Protocol::Dsr);
        assert_eq!(assignment.tx, Protocol::Dsdv);
        assert_eq!(assignment.rx, Protocol::Dsr);
        let out = sim.run();
        assert_eq!(out.assignment, Some(assignment));
        assert_eq!(
            out.metrics.originated,
            out.metrics.delivered + out.metrics.dropped_total()
        );
    }

    #[test]
    fn traffic_hash_tracks_flow_identity() {
        let flow = |src: u32, dst: u32| CbrFlow {
            src: NodeId(src),
            dst: NodeId(dst),
            payload_bytes: 512,
            rate_pps: 8.0,
            start_s: 1.0,
            stop_s: 10.0,
        };
        let a = traffic_hash(&[flow(0, 1), flow(2, 3)]);
        let b = traffic_hash(&[flow(0, 1), flow(2, 3)]);
        let c = traffic_hash(&[flow(0, 1), flow(2, 4)]);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
