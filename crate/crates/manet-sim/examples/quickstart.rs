//! Smallest useful program: configure a scenario, run it, read the
//! numbers. Everything downstream — traces, comparisons, charts — is
//! elaboration on this loop.
//!
//! Run with: cargo run --example quickstart

use manet_sim::routing::Protocol;
use manet_sim::{ScenarioConfig, Simulation};

fn main() {
    // Start from the defaults (10 nodes, 600 m square, random waypoint,
    // 100 s) and pick a protocol and seed. Every field is plain data; a
    // TOML round trip of this struct is the run's manifest.
    let cfg = ScenarioConfig {
        protocol: Protocol::Aodv,
        nodes: 12,
        seed: 7,
        duration_s: 120.0,
        ..ScenarioConfig::default()
    };

    let out = Simulation::new(&cfg).expect("valid scenario").run();
    let m = &out.metrics;

    println!(
        "{} over {} nodes, seed {}, {} s ({} events)",
        m.protocol, m.nodes, m.seed, m.duration_s, out.events_processed
    );
    println!(
        "packets : {} originated, {} delivered (pdr {:.3})",
        m.originated, m.delivered, m.pdr
    );
    println!(
        "drops   : {} queue, {} no-route, {} dead-node, {} end-of-run",
        m.dropped_queue, m.dropped_no_route, m.dropped_dead_node, m.dropped_end_of_run
    );
    if let Some(d) = m.mean_delay_s {
        println!(
            "latency : mean {:.4} s, throughput {:.0} bit/s",
            d, m.throughput_bps
        );
    }
    println!(
        "frames  : {} control, {} data ({:.2} control frames per delivery)",
        m.control_frames,
        m.data_frames,
        m.routing_overhead.unwrap_or(0.0)
    );
    println!(
        "energy  : per node mean {:.1} mJ idle, {:.2} mJ tx, {:.2} mJ rx, {:.1} mJ left",
        m.mean_idle_mj, m.mean_tx_mj, m.mean_rx_mj, m.mean_remaining_mj
    );

    // A few delivered packets with the path each one took. The path lists
    // every transmitter plus the final recipient, so hops = len - 1.
    println!("\nfirst deliveries:");
    for rec in out.delivered.iter().take(5) {
        let path: Vec<String> = rec.path.iter().map(|n| n.to_string()).collect();
        println!(
            "  flow {} seq {}: {} -> {} in {:.4} s via [{}]",
            rec.flow,
            rec.seq,
            rec.src,
            rec.dst,
            rec.delay_s,
            path.join(" ")
        );
    }

    // Determinism is part of the contract: same config, same seed, same
    // everything.
    let again = Simulation::new(&cfg).expect("valid scenario").run();
    assert_eq!(out.metrics.to_csv(), again.metrics.to_csv());
    println!("\nre-ran with the same seed: metrics identical, as always");
}
