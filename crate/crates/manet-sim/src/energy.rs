//! Radio energy model.
//!
//! Power draw is per radio state: 330 mW transmitting, 230 mW receiving, and
//! the same 230 mW while idle-listening (an idle radio still powers its
//! receive chain). Over a 2 Mb/s link a frame of `b` bits therefore costs
//! `b * 330 / 2e6` mJ to send and `b * 230 / 2e6` mJ to receive.
//!
//! Each node owns an [`EnergyAccount`] that attributes every instant of the
//! run to exactly one of idle/sleep/tx/rx. Charges are clipped against a
//! single watermark, so the per-state time sums always partition elapsed time
//! and `consumed_state / state_time` recovers the state power identically.

use crate::time::SimTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    /// Transmit power, milliwatts.
    pub tx_power_mw: f64,
    /// Receive power, milliwatts.
    pub rx_power_mw: f64,
    /// Idle-listening power, milliwatts. Matches `rx_power_mw` by default.
    pub idle_power_mw: f64,
    /// Sleep power, milliwatts. Only drawn during explicitly scheduled
    /// sleep windows; no default scenario uses any.
    pub sleep_power_mw: f64,
    /// Link bitrate, bits per second.
    pub bitrate_bps: f64,
    /// Starting budget per node, millijoules.
    pub initial_mj: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            tx_power_mw: 330.0,
            rx_power_mw: 230.0,
            idle_power_mw: 230.0,
            sleep_power_mw: 0.0,
            bitrate_bps: 2.0e6,
            initial_mj: 1_000_000.0,
        }
    }
}

impl EnergyParams {
    /// Energy to transmit `bits` at the configured rate, in mJ.
    pub fn tx_energy_mj(&self, bits: u64) -> f64 {
        bits as f64 * self.tx_power_mw / self.bitrate_bps
    }

    /// Energy to receive `bits` at the configured rate, in mJ.
    pub fn rx_energy_mj(&self, bits: u64) -> f64 {
        bits as f64 * self.rx_power_mw / self.bitrate_bps
    }

    /// Seconds a frame of `bits` occupies the medium.
    pub fn airtime_s(&self, bits: u64) -> f64 {
        bits as f64 / self.bitrate_bps
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnergyError {
    #[error("node is out of energy")]
    DeadNode,
}

/// Outcome of charging one frame interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Charge {
    /// Energy actually drawn, mJ.
    pub energy_mj: f64,
    /// True if the budget ran out partway through the interval.
    pub died: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bucket {
    Idle,
    Sleep,
    Tx,
    Rx,
}

/// Per-node energy ledger.
#[derive(Debug, Clone)]
pub struct EnergyAccount {
    params: EnergyParams,
    pub remaining_mj: f64,
    pub consumed_idle_mj: f64,
    pub consumed_sleep_mj: f64,
    pub consumed_tx_mj: f64,
    pub consumed_rx_mj: f64,
    pub idle_time_s: f64,
    pub sleep_time_s: f64,
    pub tx_time_s: f64,
    pub rx_time_s: f64,
    /// Everything before this instant has been attributed to a bucket.
    watermark: SimTime,
    pub died_at: Option<SimTime>,
}

impl EnergyAccount {
    pub fn new(params: EnergyParams) -> Self {
        EnergyAccount {
            remaining_mj: params.initial_mj,
            params,
            consumed_idle_mj: 0.0,
            consumed_sleep_mj: 0.0,
            consumed_tx_mj: 0.0,
            consumed_rx_mj: 0.0,
            idle_time_s: 0.0,
            sleep_time_s: 0.0,
            tx_time_s: 0.0,
            rx_time_s: 0.0,
            watermark: SimTime::ZERO,
            died_at: None,
        }
    }

    pub fn params(&self) -> &EnergyParams {
        &self.params
    }

    pub fn alive(&self) -> bool {
        self.died_at.is_none()
    }

    pub fn initial_mj(&self) -> f64 {
        self.params.initial_mj
    }

    pub fn consumed_total_mj(&self) -> f64 {
        self.consumed_idle_mj + self.consumed_sleep_mj + self.consumed_tx_mj + self.consumed_rx_mj
    }

    /// Total time attributed to any bucket, seconds.
    pub fn attributed_time_s(&self) -> f64 {
        self.idle_time_s + self.sleep_time_s + self.tx_time_s + self.rx_time_s
    }

    fn bucket_power(&self, bucket: Bucket) -> f64 {
        match bucket {
            Bucket::Idle => self.params.idle_power_mw,
            Bucket::Sleep => self.params.sleep_power_mw,
            Bucket::Tx => self.params.tx_power_mw,
            Bucket::Rx => self.params.rx_power_mw,
        }
    }

    fn add(&mut self, bucket: Bucket, energy: f64, dt: f64) {
        match bucket {
            Bucket::Idle => {
                self.consumed_idle_mj += energy;
                self.idle_time_s += dt;
            }
            Bucket::Sleep => {
                self.consumed_sleep_mj += energy;
                self.sleep_time_s += dt;
            }
            Bucket::Tx => {
                self.consumed_tx_mj += energy;
                self.tx_time_s += dt;
            }
            Bucket::Rx => {
                self.consumed_rx_mj += energy;
                self.rx_time_s += dt;
            }
        }
    }

    /// Attribute the unclaimed part of `[from, to]` to `bucket`; dies at the
    /// linear depletion crossing if the budget runs out.
    fn attribute(&mut self, to: SimTime, bucket: Bucket) -> Charge {
        if self.died_at.is_some() || to <= self.watermark {
            return Charge {
                energy_mj: 0.0,
                died: false,
            };
        }
        let dt = to - self.watermark;
        let power = self.bucket_power(bucket);
        let need = power * dt;
        if power > 0.0 && need >= self.remaining_mj {
            let survivable = self.remaining_mj / power;
            let energy = self.remaining_mj;
            self.add(bucket, energy, survivable);
            self.remaining_mj = 0.0;
            let died_at = self.watermark + survivable;
            self.died_at = Some(died_at);
            self.watermark = died_at;
            Charge {
                energy_mj: energy,
                died: true,
            }
        } else {
            self.add(bucket, need, dt);
            self.remaining_mj -= need;
            self.watermark = to;
            Charge {
                energy_mj: need,
                died: false,
            }
        }
    }

    /// Accrue idle listening up to `to`. No-op for dead nodes and for
    /// instants already attributed.
    pub fn accrue_idle(&mut self, to: SimTime) -> Charge {
        self.attribute(to, Bucket::Idle)
    }

    /// Accrue a sleep window up to `to` (the caller brings the account to the
    /// window start with [`EnergyAccount::accrue_idle`] first).
    pub fn accrue_sleep(&mut self, to: SimTime) -> Charge {
        self.attribute(to, Bucket::Sleep)
    }

    fn charge_frame(&mut self, t0: SimTime, t1: SimTime, bucket: Bucket) -> Result<Charge, EnergyError> {
        // idle up to the frame boundary first so no interval is double-charged
        let idled = self.accrue_idle(t0);
        if self.died_at.is_some() {
            // ran out before (or exactly at) the frame start
            let _ = idled;
            return Err(EnergyError::DeadNode);
        }
        Ok(self.attribute(t1, bucket))
    }

    /// Charge a transmitted frame occupying `[t0, t1]`.
    pub fn charge_tx(&mut self, t0: SimTime, t1: SimTime) -> Result<Charge, EnergyError> {
        self.charge_frame(t0, t1, Bucket::Tx)
    }

    /// Charge a received frame occupying `[t0, t1]`.
    pub fn charge_rx(&mut self, t0: SimTime, t1: SimTime) -> Result<Charge, EnergyError> {
        self.charge_frame(t0, t1, Bucket::Rx)
    }

    /// `initial == remaining + consumed` residual, relative to the budget.
    pub fn conservation_residual(&self) -> f64 {
        let initial = self.params.initial_mj;
        ((self.remaining_mj + self.consumed_total_mj()) - initial).abs() / initial.max(1.0)
    }

    /// Residual of the time partition against `elapsed` run seconds: the
    /// attributed buckets must tile the node's lifetime exactly.
    pub fn partition_residual(&self, elapsed: f64) -> f64 {
        let lifetime = match self.died_at {
            Some(t) => t.secs().min(elapsed),
            None => elapsed,
        };
        (self.attributed_time_s() - lifetime).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: f64) -> SimTime {
        SimTime::new(s)
    }

    const REL: f64 = 1e-12;

    fn assert_rel(actual: f64, expected: f64) {
        let denom = expected.abs().max(1e-30);
        assert!(
            ((actual - expected) / denom).abs() <= REL,
            "expected {expected}, got {actual}"
        );
    }

    #[test]
    fn per_frame_energy_matches_closed_form() {
        let p = EnergyParams::default();
        assert_rel(p.tx_energy_mj(4096), 0.67584);
        assert_rel(p.rx_energy_mj(4096), 0.47104);
        assert_rel(p.airtime_s(4096), 0.002048);
    }

    #[test]
    fn one_second_of_bits_recovers_the_power_constants() {
        // exactly the bitrate's worth of bits takes one second
        let p = EnergyParams::default();
        assert_rel(p.tx_energy_mj(2_000_000), 330.0);
        assert_rel(p.rx_energy_mj(2_000_000), 230.0);
    }

    #[test]
    fn rx_to_tx_ratio_is_fixed_for_any_size() {
        let p = EnergyParams::default();
        for bits in [64 * 8, 512 * 8, 1500 * 8] {
            assert_rel(p.rx_energy_mj(bits) / p.tx_energy_mj(bits), 230.0 / 330.0);
        }
    }

    #[test]
    fn idle_accrual_draws_rx_power() {
        let mut acct = EnergyAccount::new(EnergyParams::default());
        let c = acct.accrue_idle(t(1.0));
        assert_rel(c.energy_mj, 230.0);
        assert_rel(acct.consumed_idle_mj, 230.0);
        assert_rel(acct.remaining_mj, 1_000_000.0 - 230.0);
        // repeated accrual at the same instant is a no-op
        let c2 = acct.accrue_idle(t(1.0));
        assert_eq!(c2.energy_mj, 0.0);
    }

    #[test]
    fn tx_charge_matches_formula_and_partitions_time() {
        let p = EnergyParams::default();
        let mut acct = EnergyAccount::new(p);
        acct.accrue_idle(t(10.0));
        let c = acct.charge_tx(t(10.0), t(10.0) + p.airtime_s(4096)).unwrap();
        assert_rel(c.energy_mj, 0.67584);
        assert_rel(acct.consumed_tx_mj, 0.67584);
        assert_rel(acct.tx_time_s, 0.002048);
        assert!(acct.partition_residual(10.002048) < 1e-9);
        assert!(acct.conservation_residual() < 1e-9);
        // power identity holds exactly by construction
        assert_rel(acct.consumed_tx_mj / acct.tx_time_s, 330.0);
    }

    #[test]
    fn charge_fills_idle_gap_before_frame() {
        let p = EnergyParams::default();
        let mut acct = EnergyAccount::new(p);
        // no explicit idle accrual: the charge attributes [0, 5) as idle
        acct.charge_rx(t(5.0), t(5.5)).unwrap();
        assert_rel(acct.idle_time_s, 5.0);
        assert_rel(acct.consumed_idle_mj, 230.0 * 5.0);
        assert_rel(acct.consumed_rx_mj, 230.0 * 0.5);
        assert_rel(acct.rx_time_s, 0.5);
    }

    #[test]
    fn overlapping_reception_is_clipped_not_double_counted() {
        let p = EnergyParams::default();
        let mut acct = EnergyAccount::new(p);
        acct.charge_rx(t(0.0), t(2.0)).unwrap();
        // second frame overlaps [1,2]; only [2,3] is new
        acct.charge_rx(t(1.0), t(3.0)).unwrap();
        assert_rel(acct.rx_time_s, 3.0);
        assert_rel(acct.consumed_rx_mj, 230.0 * 3.0);
        assert!(acct.partition_residual(3.0) < 1e-9);
        assert_rel(acct.consumed_rx_mj / acct.rx_time_s, 230.0);
    }

    #[test]
    fn depletion_dies_at_linear_crossing() {
        let p = EnergyParams {
            initial_mj: 115.0,
            ..EnergyParams::default()
        };
        let mut acct = EnergyAccount::new(p);
        let c = acct.accrue_idle(t(1.0));
        assert!(c.died);
        assert_rel(c.energy_mj, 115.0);
        assert_eq!(acct.died_at, Some(t(0.5))); // 115 mJ / 230 mW
        assert_eq!(acct.remaining_mj, 0.0);
        assert!(!acct.alive());
        // further activity is refused
        assert_eq!(acct.charge_tx(t(0.6), t(0.7)), Err(EnergyError::DeadNode));
        assert_eq!(acct.accrue_idle(t(2.0)).energy_mj, 0.0);
        // partition covers exactly the lived portion
        assert!(acct.partition_residual(1.0) < 1e-9);
    }

    #[test]
    fn sleep_window_draws_sleep_power() {
        let p = EnergyParams {
            sleep_power_mw: 20.0,
            ..EnergyParams::default()
        };
        let mut acct = EnergyAccount::new(p);
        acct.accrue_idle(t(10.0));
        acct.accrue_sleep(t(25.0));
        acct.accrue_idle(t(30.0));
        assert_rel(acct.consumed_sleep_mj, 20.0 * 15.0);
        assert_rel(acct.sleep_time_s, 15.0);
        assert_rel(acct.consumed_idle_mj, 230.0 * 15.0);
        assert!(acct.partition_residual(30.0) < 1e-9);
        assert!(acct.conservation_residual() < 1e-9);
    }

    #[test]
    fn account_identity_over_mixed_sequence() {
        let p = EnergyParams::default();
        let mut acct = EnergyAccount::new(p);
        let mut now = 0.0;
        for i in 0..1000 {
            let bits = 512 * 8 + (i % 7) * 100;
            let start = now + 0.01;
            let end = start + p.airtime_s(bits);
            if i % 3 == 0 {
                acct.charge_tx(t(start), t(end)).unwrap();
            } else {
                acct.charge_rx(t(start), t(end)).unwrap();
            }
            now = end;
        }
        acct.accrue_idle(t(now + 5.0));
        assert!(acct.conservation_residual() < 1e-9);
        assert!(acct.partition_residual(now + 5.0) < 1e-9);
        assert_rel(acct.consumed_tx_mj / acct.tx_time_s, 330.0);
        assert_rel(acct.consumed_rx_mj / acct.rx_time_s, 230.0);
        assert_rel(acct.consumed_idle_mj / acct.idle_time_s, 230.0);
    }
}
