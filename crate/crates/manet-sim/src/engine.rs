//! Discrete-event core: a monotonic clock and a future-event queue.
//!
//! Events fire in `(fire_at, sequence)` order, where `sequence` is the
//! insertion counter. Two events scheduled for the same instant therefore
//! fire in the order they were scheduled, which is what makes whole runs
//! reproducible byte-for-byte.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::time::SimTime;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("cannot schedule at {at} (clock already at {clock})")]
    SchedulingInPast { at: SimTime, clock: SimTime },
}

/// Token for a scheduled event; lets the owner cancel it before it fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

struct Queued<E> {
    fire_at: SimTime,
    seq: u64,
    kind: E,
}

// BinaryHeap is a max-heap; invert the comparison to pop the earliest
// (fire_at, seq) first.
impl<E> Ord for Queued<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_at
            .cmp(&self.fire_at)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl<E> PartialOrd for Queued<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> PartialEq for Queued<E> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_at == other.fire_at && self.seq == other.seq
    }
}

impl<E> Eq for Queued<E> {}

/// Counts reported by [`Engine::run_until`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunSummary {
    pub events_processed: u64,
    pub events_cancelled: u64,
}

/// The event queue + clock. Generic over the event payload so the routing
/// and radio layers can define their own event vocabulary.
pub struct Engine<E> {
    clock: SimTime,
    queue: BinaryHeap<Queued<E>>,
    next_seq: u64,
    pending: HashSet<u64>,
    cancelled: HashSet<u64>,
    processed: u64,
    cancelled_count: u64,
}

impl<E> Engine<E> {
    pub fn new() -> Self {
        Engine {
            clock: SimTime::ZERO,
            queue: BinaryHeap::new(),
            next_seq: 0,
            pending: HashSet::new(),
            cancelled: HashSet::new(),
            processed: 0,
            cancelled_count: 0,
        }
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    /// Schedule `kind` to fire at `fire_at`. Scheduling at the current clock
    /// is allowed (the event fires after everything already queued for that
    /// instant); scheduling strictly in the past is an error.
    pub fn schedule(&mut self, fire_at: SimTime, kind: E) -> Result<EventHandle, ScheduleError> {
        if fire_at < self.clock {
            return Err(ScheduleError::SchedulingInPast {
                at: fire_at,
                clock: self.clock,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.pending.insert(seq);
        self.queue.push(Queued { fire_at, seq, kind });
        Ok(EventHandle(seq))
    }

    /// Cancel a scheduled event. Returns `true` if the event was still
    /// pending, `false` if it already fired (or was already cancelled).
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        if self.pending.remove(&handle.0) {
            self.cancelled.insert(handle.0);
            self.cancelled_count += 1;
            true
        } else {
            false
        }
    }

    pub fn pending_events(&self) -> usize {
        self.pending.len()
    }

    /// Pop the next event with `fire_at <= end`, advancing the clock to its
    /// fire time. Returns `None` once the queue holds nothing due by `end`;
    /// the clock is then advanced to exactly `end`.
    pub fn pop_due(&mut self, end: SimTime) -> Option<(SimTime, u64, E)> {
        while let Some(head) = self.queue.peek() {
            if head.fire_at > end {
                break;
            }
            let ev = self.queue.pop().unwrap();
            if self.cancelled.remove(&ev.seq) {
                continue;
            }
            self.pending.remove(&ev.seq);
            debug_assert!(ev.fire_at >= self.clock, "event queue went backwards");
            self.clock = ev.fire_at;
            self.processed += 1;
            return Some((ev.fire_at, ev.seq, ev.kind));
        }
        if end > self.clock {
            self.clock = end;
        }
        None
    }

    /// Drive the queue with `handler` until every event at or before `end`
    /// has fired. The handler may schedule and cancel further events.
    pub fn run_until(
        &mut self,
        end: SimTime,
        mut handler: impl FnMut(&mut Self, SimTime, u64, E),
    ) -> RunSummary {
        let start_processed = self.processed;
        let start_cancelled = self.cancelled_count;
        while let Some((t, seq, kind)) = self.pop_due(end) {
            handler(self, t, seq, kind);
        }
        RunSummary {
            events_processed: self.processed - start_processed,
            events_cancelled: self.cancelled_count - start_cancelled,
        }
    }
}

impl<E> Default for Engine<E> {
    fn default() -> Self {
        Self::new()
    }
}
