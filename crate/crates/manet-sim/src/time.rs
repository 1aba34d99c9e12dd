//! Simulation clock type: seconds as f64, totally ordered, never NaN.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

/// A point in simulated time, in seconds since the start of the run.
///
/// Construction rejects NaN so the type can carry a total order; negative
/// values are allowed internally (durations subtract) but never scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct SimTime(f64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0.0);

    /// Panics on NaN; simulation time must stay totally ordered.
    pub fn new(secs: f64) -> SimTime {
        assert!(!secs.is_nan(), "simulation time cannot be NaN");
        SimTime(secs)
    }

    pub fn secs(self) -> f64 {
        self.0
    }
}

impl Eq for SimTime {}

impl PartialOrd for SimTime {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimTime {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Add<f64> for SimTime {
    type Output = SimTime;
    fn add(self, rhs: f64) -> SimTime {
        SimTime::new(self.0 + rhs)
    }
}

impl AddAssign<f64> for SimTime {
    fn add_assign(&mut self, rhs: f64) {
        *self = *self + rhs;
    }
}

impl Sub for SimTime {
    type Output = f64;
    fn sub(self, rhs: SimTime) -> f64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9}", self.0)
    }
}

impl From<f64> for SimTime {
    fn from(secs: f64) -> Self {
        SimTime::new(secs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_numeric() {
        assert!(SimTime::new(1.0) < SimTime::new(2.0));
        assert!(SimTime::new(-0.5) < SimTime::ZERO);
        assert_eq!(SimTime::new(3.25) - SimTime::new(1.25), 2.0);
    }

    #[test]
    #[should_panic]
    fn nan_rejected() {
        SimTime::new(f64::NAN);
    }

    #[test]
    fn display_is_fixed_width_seconds() {
        assert_eq!(SimTime::new(1.5).to_string(), "1.500000000");
    }
}
