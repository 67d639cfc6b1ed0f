//! Delivery counters and the four evaluation metrics.
//!
//! Only legitimate traffic is counted. Attack packets are tallied on the
//! side for diagnostics but never enter `sent` or `received`.

/// Monotone per-run counters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsAccumulator {
    /// Legitimate packets emitted.
    pub sent: u64,
    /// Legitimate packets delivered past the detector and verifier.
    pub received: u64,
    pub range_drops: u64,
    pub buffer_drops: u64,
    /// Legitimate packets rejected by a detector verdict.
    pub verdict_drops: u64,
    /// `receive_time - ts_send` for every delivered legitimate packet.
    pub delay_samples: Vec<f64>,
    pub requests_done: u64,
    /// Observation time, seconds.
    pub elapsed: f64,
    /// Legitimate packets that received a detector verdict.
    pub legit_vetted: u64,
    /// Legitimate packets whose verdict was anything but Accept.
    pub false_positives: u64,
    pub attack_sent: u64,
    pub attack_blocked: u64,
    pub attack_confirmed_forged: u64,
}

impl MetricsAccumulator {
    pub fn record_delivery(&mut self, delay: f64) {
        self.received += 1;
        self.requests_done += 1;
        self.delay_samples.push(delay);
    }

    /// Legitimate packets neither delivered nor dropped yet.
    pub fn in_flight(&self) -> u64 {
        self.sent - self.received - self.range_drops - self.buffer_drops - self.verdict_drops
    }

    /// `sent == received + drops` with nothing in flight.
    pub fn is_conserved(&self) -> bool {
        self.sent == self.received + self.range_drops + self.buffer_drops + self.verdict_drops
    }

    /// Legitimate false-positive verdict rate, if anything was vetted.
    pub fn false_positive_rate(&self) -> Option<f64> {
        (self.legit_vetted > 0).then(|| self.false_positives as f64 / self.legit_vetted as f64)
    }
}

/// Packet delivery ratio in percent: `100 * received / sent`.
pub fn pdr(acc: &MetricsAccumulator) -> Option<f64> {
    (acc.sent > 0).then(|| 100.0 * acc.received as f64 / acc.sent as f64)
}

/// Fraction of legitimate packets lost: `(sent - received) / sent`.
///
/// Computed as the complement of [`pdr`] so that `drop_rate == 1 - pdr / 100`
/// holds bit for bit.
pub fn drop_rate(acc: &MetricsAccumulator) -> Option<f64> {
    pdr(acc).map(|p| 1.0 - p / 100.0)
}

/// Arithmetic mean end-to-end delay, seconds.
pub fn mean_e2e_delay(acc: &MetricsAccumulator) -> Option<f64> {
    let n = acc.delay_samples.len();
    (n > 0).then(|| acc.delay_samples.iter().sum::<f64>() / n as f64)
}

/// Accomplished requests per second of observation.
pub fn throughput(acc: &MetricsAccumulator) -> Option<f64> {
    (acc.elapsed > 0.0).then(|| acc.requests_done as f64 / acc.elapsed)
}
