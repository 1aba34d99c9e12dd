//! The headline experiment: all four protocols over a node-count sweep,
//! several seeds each, reduced here to finish in seconds. Writes the
//! same CSV-plus-SVG report the `compare` subcommand produces.
//!
//! Run with: cargo run --release --example protocol_comparison

use std::path::Path;

use manet_sim::metrics::{compare, CompareSpec};
use manet_sim::report;
use manet_sim::routing::Protocol;
use manet_sim::scenario::preset;

fn main() {
    // The stock density sweep: random waypoint in a 600 m square,
    // 5..25 nodes, 300 s. Three seeds here; use more for smoother means.
    let spec = CompareSpec {
        base: preset("sim2").expect("built-in preset"),
        protocols: vec![Protocol::Dsdv, Protocol::Dsr, Protocol::Aodv, Protocol::Deerp],
        seeds: vec![1, 2, 3],
    };
    let cells = spec.protocols.len() * spec.base.sweep_points().len() * spec.seeds.len();
    println!("running {cells} simulations...");
    let comparison = compare(&spec); // parallel across cells

    assert!(comparison.failures.is_empty(), "{:?}", comparison.failures);

    // Remaining energy per node, the number the whole design optimizes.
    println!("\nmean remaining energy per node (mJ):");
    print!("{:>8}", "nodes");
    for p in &comparison.protocols {
        print!("{:>10}", p.to_string());
    }
    println!();
    for &nodes in &comparison.node_counts {
        print!("{nodes:>8}");
        for &p in &comparison.protocols {
            let cell = comparison
                .cell_stats("mean_remaining_mj")
                .into_iter()
                .find(|c| c.protocol == p && c.nodes == nodes)
                .unwrap();
            print!("{:>10.1}", cell.mean);
        }
        println!();
    }

    println!("\nmean idle energy per node (mJ):");
    print!("{:>8}", "nodes");
    for p in &comparison.protocols {
        print!("{:>10}", p.to_string());
    }
    println!();
    for &nodes in &comparison.node_counts {
        print!("{nodes:>8}");
        for &p in &comparison.protocols {
            let cell = comparison
                .cell_stats("mean_idle_mj")
                .into_iter()
                .find(|c| c.protocol == p && c.nodes == nodes)
                .unwrap();
            print!("{:>10.1}", cell.mean);
        }
        println!();
    }

    // The full report: one CSV per metric, grouped-bar SVG charts, and a
    // failures ledger. `manet-sim render --from <dir>` rebuilds the
    // charts from the CSVs byte-for-byte.
    let dir = Path::new("out/protocol_comparison");
    let files = report::write_report(dir, &comparison).expect("writable out dir");
    println!("\nwrote {} report files to {}", files.len(), dir.display());
    println!("open the chart_*.svg files to see the grouped bars");
}
