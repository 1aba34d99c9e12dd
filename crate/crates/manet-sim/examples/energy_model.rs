//! The energy model by hand, without the simulator: per-frame costs from
//! the power constants, then a node's account walked through a toy
//! timeline, ending with the two invariants every simulation run is held
//! to — conservation and full attribution of lifetime.
//!
//! Run with: cargo run --example energy_model

use manet_sim::time::SimTime;
use manet_sim::{EnergyAccount, EnergyParams};

fn main() {
    let params = EnergyParams::default();
    println!(
        "radio: tx {} mW, rx {} mW, idle {} mW, {} Mbit/s",
        params.tx_power_mw,
        params.rx_power_mw,
        params.idle_power_mw,
        params.bitrate_bps / 1e6
    );

    // Per-frame cost is power x airtime; airtime is bits / bitrate.
    println!("\nper-frame cost (payload plus 58 B MAC framing):");
    for payload in [64u64, 512, 1500] {
        let bits = (payload + 58) * 8;
        println!(
            "  {payload:>4} B payload: {:>7.1} us airtime, tx {:.5} mJ, rx {:.5} mJ",
            params.airtime_s(bits) * 1e6,
            params.tx_energy_mj(bits),
            params.rx_energy_mj(bits)
        );
    }

    // --- A node's account over a 10 s timeline. The account keeps a
    // watermark; charging a transmission first fills the gap since the
    // last charge with idle listening, then attributes the burst.
    let mut acct = EnergyAccount::new(EnergyParams {
        initial_mj: 3_000.0,
        ..EnergyParams::default()
    });
    println!("\ntimeline for one node (3000 mJ budget):");

    let tx = acct.charge_tx(SimTime::new(2.0), SimTime::new(2.3)).unwrap();
    println!("  0.0-2.0 s idle (implied), 2.0-2.3 s transmitting: {:.1} mJ burst", tx.energy_mj);

    let rx = acct.charge_rx(SimTime::new(5.0), SimTime::new(5.2)).unwrap();
    println!("  2.3-5.0 s idle (implied), 5.0-5.2 s receiving: {:.1} mJ burst", rx.energy_mj);

    acct.accrue_sleep(SimTime::new(8.0));
    println!("  5.2-8.0 s radio off: 0 mJ");

    acct.accrue_idle(SimTime::new(10.0));
    println!("  8.0-10.0 s idle");

    println!(
        "\n  consumed {:.1} mJ of {:.0}, {:.3} s of lifetime attributed",
        acct.consumed_total_mj(),
        acct.initial_mj(),
        acct.attributed_time_s()
    );
    println!(
        "  split: idle {:.1} + sleep {:.1} + tx {:.1} + rx {:.1} mJ",
        acct.consumed_idle_mj, acct.consumed_sleep_mj, acct.consumed_tx_mj, acct.consumed_rx_mj
    );

    // Invariant 1: initial = remaining + everything consumed (to 1e-9).
    println!("  conservation residual: {:.2e}", acct.conservation_residual());
    assert!(acct.conservation_residual() < 1e-9);

    // Invariant 2: every instant of the 10 s is in exactly one bucket.
    println!("  partition residual at t=10: {:.2e} s", acct.partition_residual(10.0));
    assert!(acct.partition_residual(10.0) < 1e-9);

    // --- Depletion: with a tiny budget the account dies at the exact
    // linear crossing, mid-interval, and refuses all further charges.
    let mut dying = EnergyAccount::new(EnergyParams {
        initial_mj: 230.0, // exactly one second of idle listening
        ..EnergyParams::default()
    });
    let charge = dying.accrue_idle(SimTime::new(5.0));
    println!("\nnode with a 230 mJ budget asked to idle for 5 s:");
    println!(
        "  died after {:.3} s having spent {:.1} mJ; alive = {}",
        dying.attributed_time_s(),
        charge.energy_mj,
        dying.alive()
    );
    assert!(charge.died && !dying.alive());
    assert!((dying.attributed_time_s() - 1.0).abs() < 1e-12);

    // Even in death the books balance: the partition residual measures
    // against the moment of death, not the end of the request.
    assert!(dying.conservation_residual() < 1e-9);
    assert!(dying.partition_residual(dying.attributed_time_s()) < 1e-9);
    println!("  books still balance at the moment of death");
}
