//! Deterministic discrete-event scheduler and seeded random streams.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Kind tag of a simulation event, used for traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    EmitPacket,
    Deliver,
    /// The RSRU verifier finished confirming the packet at the head of service.
    VerifyDone,
    MoveTick,
    AssessTick,
    EndOfRun,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::EmitPacket => "EmitPacket",
            EventKind::Deliver => "Deliver",
            EventKind::VerifyDone => "VerifyDone",
            EventKind::MoveTick => "MoveTick",
            EventKind::AssessTick => "AssessTick",
            EventKind::EndOfRun => "EndOfRun",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Event<P> {
    pub time: f64,
    /// Scheduling order; never reused within a scheduler.
    pub tiebreak: u64,
    pub payload: P,
}

// Min-heap ordering on (time, tiebreak).
impl<P> Ord for Event<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.tiebreak.cmp(&self.tiebreak))
    }
}

impl<P> PartialOrd for Event<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Tiebreaks are unique, so queue identity is (time, tiebreak).
impl<P> PartialEq for Event<P> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<P> Eq for Event<P> {}

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("event scheduled in the past: at {at} while clock is {now}")]
    PastEvent { at: f64, now: f64 },
    #[error("event time is not a number")]
    NanTime,
}

/// Pending-event queue with a virtual clock.
#[derive(Debug)]
pub struct Scheduler<P> {
    now: f64,
    next_tiebreak: u64,
    executed: u64,
    queue: BinaryHeap<Event<P>>,
}

impl<P> Default for Scheduler<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Scheduler<P> {
    pub fn new() -> Self {
        Self {
            now: 0.0,
            next_tiebreak: 0,
            executed: 0,
            queue: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Total events executed so far.
    pub fn executed(&self) -> u64 {
        self.executed
    }

    /// Queues `payload` at `time`. Equal-time events run in scheduling order.
    pub fn schedule(&mut self, time: f64, payload: P) -> Result<u64, EngineError> {
        if time.is_nan() {
            return Err(EngineError::NanTime);
        }
        if time < self.now {
            return Err(EngineError::PastEvent {
                at: time,
                now: self.now,
            });
        }
        let tiebreak = self.next_tiebreak;
        self.next_tiebreak += 1;
        self.queue.push(Event {
            time,
            tiebreak,
            payload,
        });
        Ok(tiebreak)
    }

    /// Runs every event with `time <= t_end`, then sets the clock to `t_end`.
    /// Returns the number of events executed by this call.
    pub fn run_until<E, F>(&mut self, t_end: f64, mut handler: F) -> Result<u64, E>
    where
        F: FnMut(&mut Self, Event<P>) -> Result<(), E>,
    {
        let mut count = 0;
        while self.queue.peek().is_some_and(|ev| ev.time <= t_end) {
            let ev = self.queue.pop().expect("peeked");
            self.now = ev.time;
            self.executed += 1;
            count += 1;
            handler(self, ev)?;
        }
        if t_end > self.now {
            self.now = t_end;
        }
        Ok(count)
    }

    /// Runs until the queue is empty.
    pub fn drain<E, F>(&mut self, handler: F) -> Result<u64, E>
    where
        F: FnMut(&mut Self, Event<P>) -> Result<(), E>,
    {
        self.run_until(f64::INFINITY, handler)
    }
}

/// Fixed derivation indices for the per-subsystem random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Mobility = 1,
    Channel = 2,
    Attacker = 3,
}

/// Independent generator for one subsystem of the run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// FNV-1a, used for trace payload digests.
#[derive(Debug, Clone, Copy)]
pub struct Digest(u64);

impl Default for Digest {
    fn default() -> Self {
        Digest(0xcbf2_9ce4_8422_2325)
    }
}

impl Digest {
    pub fn bytes(mut self, bytes: &[u8]) -> Self {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
        self
    }

    pub fn u64(self, v: u64) -> Self {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f64(self, v: f64) -> Self {
        self.u64(v.to_bits())
    }

    pub fn finish(self) -> u64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    type Trace = Vec<(f64, &'static str)>;

    fn collect(s: &mut Scheduler<&'static str>, t_end: f64) -> Trace {
        let mut seen = Vec::new();
        s.run_until::<(), _>(t_end, |sched, ev| {
            seen.push((sched.now(), ev.payload));
            Ok(())
        })
        .unwrap();
        seen
    }

    #[test]
    fn future_event_is_queued() {
        let mut s = Scheduler::new();
        s.schedule(4.0, "advance").unwrap();
        collect(&mut s, 4.0);
        assert_eq!(s.now(), 4.0);
        s.schedule(5.0, "deliver").unwrap();
        assert_eq!(s.pending(), 1);
    }

    #[test]
    fn equal_times_run_fifo() {
        let mut s = Scheduler::new();
        s.schedule(5.0, "A").unwrap();
        s.schedule(5.0, "B").unwrap();
        s.schedule(1.0, "first").unwrap();
        assert_eq!(
            collect(&mut s, 10.0),
            vec![(1.0, "first"), (5.0, "A"), (5.0, "B")]
        );
    }

    #[test]
    fn past_event_is_refused() {
        let mut s: Scheduler<&str> = Scheduler::new();
        collect(&mut s, 4.0);
        assert_eq!(
            s.schedule(3.0, "late"),
            Err(EngineError::PastEvent { at: 3.0, now: 4.0 })
        );
        assert_eq!(s.schedule(f64::NAN, "nan"), Err(EngineError::NanTime));
    }

    #[test]
    fn empty_run_advances_clock() {
        let mut s: Scheduler<&str> = Scheduler::new();
        assert_eq!(s.run_until::<(), _>(200.0, |_, _| Ok(())), Ok(0));
        assert_eq!(s.now(), 200.0);
    }

    #[test]
    fn emit_spawning_deliver_is_two_events() {
        #[derive(Debug, PartialEq)]
        enum Ev {
            Emit,
            Deliver,
        }
        let mut s = Scheduler::new();
        s.schedule(1.0, Ev::Emit).unwrap();
        let mut times = Vec::new();
        let n = s
            .run_until(200.0, |sched, ev| {
                times.push(sched.now());
                if ev.payload == Ev::Emit {
                    sched.schedule(sched.now() + 0.002, Ev::Deliver)?;
                }
                Ok::<_, EngineError>(())
            })
            .unwrap();
        assert_eq!(n, 2);
        assert_eq!(times, vec![1.0, 1.002]);
        assert_eq!(s.executed(), 2);
    }

    #[test]
    fn events_after_horizon_stay_pending() {
        let mut s = Scheduler::new();
        s.schedule(1.0, "in").unwrap();
        s.schedule(2.5, "out").unwrap();
        assert_eq!(collect(&mut s, 2.0).len(), 1);
        assert_eq!(s.now(), 2.0);
        assert_eq!(s.pending(), 1);
        let rest = {
            let mut seen = Vec::new();
            s.drain::<(), _>(|_, ev| {
                seen.push(ev.payload);
                Ok(())
            })
            .unwrap();
            seen
        };
        assert_eq!(rest, vec!["out"]);
    }

    #[test]
    fn streams_are_independent_and_reproducible() {
        let a: Vec<u32> = stream_rng(7, Stream::Mobility)
            .sample_iter(rand::distributions::Standard)
            .take(4)
            .collect();
        let b: Vec<u32> = stream_rng(7, Stream::Mobility)
            .sample_iter(rand::distributions::Standard)
            .take(4)
            .collect();
        let c: Vec<u32> = stream_rng(7, Stream::Attacker)
            .sample_iter(rand::distributions::Standard)
            .take(4)
            .collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn digest_matches_reference_fnv() {
        assert_eq!(Digest::default().finish(), 0xcbf29ce484222325);
        assert_eq!(Digest::default().bytes(b"a").finish(), 0xaf63dc4c8601ec8c);
    }

    proptest! {
        #[test]
        fn execution_order_is_time_then_schedule_order(times in proptest::collection::vec(0u8..20, 1..60)) {
            let mut s = Scheduler::new();
            for (i, t) in times.iter().enumerate() {
                s.schedule(f64::from(*t) / 4.0, i).unwrap();
            }
            let mut seen = Vec::new();
            s.drain::<(), _>(|sched, ev| { seen.push((sched.now(), ev.payload)); Ok(()) }).unwrap();
            let mut expected: Vec<(f64, usize)> =
                times.iter().enumerate().map(|(i, t)| (f64::from(*t) / 4.0, i)).collect();
            expected.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            prop_assert_eq!(seen, expected);
        }
    }
}
