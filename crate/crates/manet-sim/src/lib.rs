//! Deterministic discrete-event simulation of mobile ad-hoc networks.
//!
//! The crate models a flat wireless network — nodes moving through a
//! rectangular area, a unit-disk radio with FIFO queues, CBR traffic —
//! and runs one of four routing protocols over it: proactive DSDV,
//! reactive DSR and AODV, or DEERP, a hybrid that picks a protocol per
//! node activity mode from a selection-criteria table. Every joule is
//! accounted: each instant of a node's life is attributed to exactly one
//! of transmit / receive / idle / sleep, so protocol differences show up
//! directly as energy differences.
//!
//! Everything is deterministic given a scenario seed: named RNG streams
//! decouple mobility from traffic from protocol behavior, so two
//! protocols compared on the same seed see byte-identical node
//! trajectories and traffic schedules.
//!
//! Start with the runnable examples:
//!
//! - `quickstart` — build a scenario, run it, read the metrics.
//! - `mobility_traces` — random-waypoint and group mobility trajectories.
//! - `energy_model` — the per-mode power accounting on a toy timeline.
//! - `routing_convergence` — watch DSDV/DSR/AODV find multi-hop routes.
//! - `deerp_selection` — the selection table, mode gating, and fallback.
//! - `protocol_comparison` — the full four-protocol sweep with charts.
//!
//! The same machinery is scriptable through the `manet-sim` binary
//! (`run`, `compare`, `preset`, `render` subcommands).

pub mod deerp;
pub mod energy;
pub mod engine;
pub mod metrics;
pub mod mobility;
pub mod radio;
pub mod report;
pub mod rng;
pub mod routing;
pub mod scenario;
pub mod sim;
pub mod time;
pub mod traffic;

pub use deerp::{ActivityTracker, DeerpAgent, Mode, ProtocolAssignment, RpscRow, RpscTable};
pub use energy::{EnergyAccount, EnergyParams};
pub use mobility::{Area, MobilityConfig, MobilityModel, MobilityPlan, Position};
pub use radio::{DropCause, RadioConfig};
pub use routing::Protocol;
pub use scenario::{preset, ScenarioConfig};
pub use sim::{RunOutput, Simulation};
pub use time::SimTime;
pub use traffic::{CbrFlow, DataPacket, NodeId};
