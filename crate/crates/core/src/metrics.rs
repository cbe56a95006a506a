//! Goodput and packet-loss accounting per flow and per MTU group.

use crate::red::{RedVariant, Verdict};
use crate::tcp::{SenderStats, TcpVariant};

/// Arrival and drop counters of one queue, split by cause.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueueCounters {
    pub arrivals: u64,
    pub accepted: u64,
    pub drops_random: u64,
    pub drops_forced_avg: u64,
    pub drops_buffer: u64,
}

impl QueueCounters {
    pub fn record(&mut self, verdict: Verdict) {
        self.arrivals += 1;
        match verdict {
            Verdict::Accept => self.accepted += 1,
            Verdict::RandomDrop => self.drops_random += 1,
            Verdict::ForcedDropAvg => self.drops_forced_avg += 1,
            Verdict::ForcedDropBuffer => self.drops_buffer += 1,
        }
    }

    pub fn drops(&self) -> u64 {
        self.drops_random + self.drops_forced_avg + self.drops_buffer
    }

    /// `arrivals == accepted + drops`.
    pub fn is_conserved(&self) -> bool {
        self.arrivals == self.accepted + self.drops()
    }

    pub fn merge(&mut self, other: &QueueCounters) {
        self.arrivals += other.arrivals;
        self.accepted += other.accepted;
        self.drops_random += other.drops_random;
        self.drops_forced_avg += other.drops_forced_avg;
        self.drops_buffer += other.drops_buffer;
    }

    /// Drops over arrivals, `None` when nothing arrived.
    pub fn plr(&self) -> Option<f64> {
        (self.arrivals > 0).then(|| self.drops() as f64 / self.arrivals as f64)
    }
}

/// Sums per-flow delivered payload into per-group goodput, bits/s.
pub fn group_goodput(
    delivered: &[u64],
    interval: f64,
    group_of: &[usize],
    groups: usize,
) -> Vec<f64> {
    assert!(interval > 0.0, "measurement interval must be positive");
    debug_assert_eq!(delivered.len(), group_of.len());
    let mut out = vec![0.0; groups];
    for (&bytes, &g) in delivered.iter().zip(group_of) {
        out[g] += bytes as f64 * 8.0 / interval;
    }
    out
}

/// Per-group loss ratio at the bottleneck. Groups with no arrivals get
/// `None` and a diagnostic line.
pub fn group_plr(counters: &[QueueCounters], mtus: &[u32]) -> (Vec<Option<f64>>, Vec<String>) {
    let mut diagnostics = Vec::new();
    let plr = counters
        .iter()
        .zip(mtus)
        .map(|(c, mtu)| {
            let p = c.plr();
            if p.is_none() {
                diagnostics.push(format!(
                    "group mtu={mtu}: no arrivals at the bottleneck during the measurement interval; PLR omitted"
                ));
            }
            p
        })
        .collect();
    (plr, diagnostics)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub mtu: u32,
    pub flow_count: usize,
    /// Payload goodput summed over the group's flows, bits/s.
    pub goodput_bps: f64,
    pub plr: Option<f64>,
    /// Bottleneck counters for this group within the measurement interval.
    pub counters: QueueCounters,
    /// Payload bytes accepted at the bottleneck over the whole run.
    pub accepted_payload_total: u64,
    /// Payload bytes cumulatively acknowledged over the whole run.
    pub delivered_total: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowReport {
    pub flow: usize,
    pub group: usize,
    pub mtu: u32,
    /// Unique payload bytes acknowledged within the measurement interval.
    pub delivered_bytes: u64,
    pub goodput_bps: f64,
    pub sender: SenderStats,
}

/// Whole-run bookkeeping of the bottleneck queue, warmup included.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueueAudit {
    pub counters: QueueCounters,
    pub departures: u64,
    pub queued_at_end: u64,
    pub max_occupancy: usize,
    pub buffer_cap: usize,
}

impl QueueAudit {
    /// Conservation holds and occupancy never exceeded the buffer.
    pub fn is_consistent(&self) -> bool {
        self.counters.is_conserved()
            && self.counters.accepted == self.departures + self.queued_at_end
            && self.max_occupancy <= self.buffer_cap
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub scenario_name: String,
    pub red_variant: RedVariant,
    pub tcp_variant: TcpVariant,
    pub bottleneck_delay_ms: f64,
    pub seed: u64,
    /// Measurement interval, seconds.
    pub interval: f64,
    pub groups: Vec<GroupReport>,
    pub flows: Vec<FlowReport>,
    pub bottleneck: QueueAudit,
    /// Counters over the measurement interval, all groups.
    pub window: QueueCounters,
    pub bottleneck_rate: f64,
    pub events: u64,
    /// Events whose time preceded the previous dispatch; always zero.
    pub causality_violations: u64,
    /// Dispatches after which the bottleneck sat idle with packets queued.
    pub idle_with_backlog: u64,
    pub diagnostics: Vec<String>,
}

impl RunReport {
    pub fn total_goodput_bps(&self) -> f64 {
        self.groups.iter().map(|g| g.goodput_bps).sum()
    }

    pub fn group_by_mtu(&self, mtu: u32) -> Option<&GroupReport> {
        self.groups.iter().find(|g| g.mtu == mtu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goodput_examples() {
        assert_eq!(group_goodput(&[0, 0], 10.0, &[0, 0], 1), vec![0.0]);
        let c = 30e6;
        let interval = 50.0;
        let bytes = (c * interval / 8.0) as u64;
        assert_eq!(group_goodput(&[bytes], interval, &[0], 1), vec![c]);

        let per_flow: Vec<u64> = (1..=20).map(|i| i * 1000).collect();
        let group_of = vec![0usize; 20];
        let g = group_goodput(&per_flow, 1.0, &group_of, 1);
        let sum: f64 = per_flow.iter().map(|&b| b as f64 * 8.0).sum();
        assert!((g[0] - sum).abs() < 1e-6);
    }

    #[test]
    fn goodput_does_not_grow_with_idle_time() {
        let g1 = group_goodput(&[1_000_000], 10.0, &[0], 1)[0];
        let g2 = group_goodput(&[1_000_000], 15.0, &[0], 1)[0];
        assert!(g2 <= g1);
    }

    #[test]
    fn plr_examples() {
        let mut c = QueueCounters::default();
        for _ in 0..100 {
            c.record(Verdict::Accept);
        }
        let mut lossy = QueueCounters::default();
        for i in 0..100 {
            lossy.record(if i < 14 {
                Verdict::RandomDrop
            } else {
                Verdict::Accept
            });
        }
        let (plr, diag) = group_plr(&[c, lossy, QueueCounters::default()], &[1500, 750, 375]);
        assert_eq!(plr[0], Some(0.0));
        assert!((plr[1].unwrap() - 0.14).abs() < 1e-12);
        assert_eq!(plr[2], None);
        assert_eq!(diag.len(), 1);
        assert!(diag[0].contains("375"));
        assert!(lossy.is_conserved());
    }

    #[test]
    fn counters_split_by_cause() {
        let mut c = QueueCounters::default();
        c.record(Verdict::Accept);
        c.record(Verdict::RandomDrop);
        c.record(Verdict::ForcedDropAvg);
        c.record(Verdict::ForcedDropBuffer);
        assert_eq!(c.arrivals, 4);
        assert_eq!(c.drops(), 3);
        assert!(c.is_conserved());
        let mut sum = QueueCounters::default();
        sum.merge(&c);
        sum.merge(&c);
        assert_eq!(sum.arrivals, 8);
        assert_eq!(sum.drops_buffer, 2);
    }
}
