//! Bulk-transfer TCP endpoints: a Reno or SACK sender with an infinite
//! backlog, and a receiver that acknowledges every data segment.
//!
//! The sender is a plain state machine. It never touches the clock on its
//! own; the simulator hands it ACKs and timer expiries and transmits
//! whatever segments it returns. All data segments carry exactly one MSS.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::sim::time::SimTime;

/// TCP/IP header bytes carried by every segment.
pub const HEADER_BYTES: u32 = 40;

/// Upper bound on the backed-off retransmission timeout, seconds.
pub const MAX_RTO: f64 = 64.0;

const DUPACK_THRESHOLD: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TcpVariant {
    #[serde(alias = "Reno", alias = "RENO")]
    Reno,
    #[serde(alias = "Sack", alias = "SACK")]
    Sack,
}

impl TcpVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            TcpVariant::Reno => "reno",
            TcpVariant::Sack => "sack",
        }
    }
}

impl fmt::Display for TcpVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TcpVariant {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "reno" => Ok(TcpVariant::Reno),
            "sack" => Ok(TcpVariant::Sack),
            _ => Err(ConfigError::invalid(
                "tcp_variant",
                format!("unknown TCP variant {s:?}, expected reno or sack"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcpConfig {
    pub variant: TcpVariant,
    /// Payload bytes per segment.
    pub mss: u32,
    /// Receiver window, bytes.
    pub rcv_wnd: u64,
    /// Retransmission timer tick, seconds.
    pub timer_granularity: f64,
    pub min_rto_ticks: u32,
    /// Timeout used before the first RTT sample, seconds.
    pub initial_rto: f64,
    pub start_time: SimTime,
}

impl TcpConfig {
    pub fn new(variant: TcpVariant, mss: u32) -> Self {
        Self {
            variant,
            mss,
            rcv_wnd: 1_000_000,
            timer_granularity: 0.2,
            min_rto_ticks: 1,
            initial_rto: 1.0,
            start_time: SimTime::ZERO,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.mss == 0 {
            return Err(ConfigError::invalid("mss", "must be positive"));
        }
        if self.rcv_wnd < 2 * u64::from(self.mss) {
            return Err(ConfigError::invalid(
                "rcv_wnd",
                "must hold at least two segments",
            ));
        }
        if self.timer_granularity.is_nan() || self.timer_granularity <= 0.0 {
            return Err(ConfigError::invalid(
                "timer_granularity",
                "must be positive",
            ));
        }
        if self.min_rto_ticks == 0 {
            return Err(ConfigError::invalid(
                "min_rto_ticks",
                "must be at least one tick",
            ));
        }
        Ok(())
    }

    fn mss_f(&self) -> f64 {
        f64::from(self.mss)
    }
}

/// Half-open byte range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SackBlock {
    pub start: u64,
    pub end: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub flow: usize,
    pub seq: u64,
    /// Payload bytes; zero for a pure ACK.
    pub len: u32,
    pub is_ack: bool,
    pub ack_no: u64,
    pub sack_blocks: ArrayVec<SackBlock, 3>,
}

impl Segment {
    pub fn data(flow: usize, seq: u64, len: u32) -> Self {
        Self {
            flow,
            seq,
            len,
            is_ack: false,
            ack_no: 0,
            sack_blocks: ArrayVec::new(),
        }
    }

    pub fn ack(flow: usize, ack_no: u64) -> Self {
        Self {
            flow,
            seq: 0,
            len: 0,
            is_ack: true,
            ack_no,
            sack_blocks: ArrayVec::new(),
        }
    }

    pub fn wire_size(&self) -> u32 {
        self.len + HEADER_BYTES
    }

    pub fn end(&self) -> u64 {
        self.seq + u64::from(self.len)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct SegMark {
    sacked: bool,
    /// Retransmitted during the current loss recovery.
    retransmitted: bool,
}

/// Per-segment SACK state for the outstanding window `[base, base + len*mss)`.
#[derive(Debug, Clone, Default)]
struct Scoreboard {
    base: u64,
    mss: u64,
    marks: VecDeque<SegMark>,
}

impl Scoreboard {
    fn new(mss: u32) -> Self {
        Self {
            base: 0,
            mss: u64::from(mss),
            marks: VecDeque::new(),
        }
    }

    fn seq_of(&self, idx: usize) -> u64 {
        self.base + idx as u64 * self.mss
    }

    fn advance(&mut self, una: u64) {
        while self.base < una && !self.marks.is_empty() {
            self.marks.pop_front();
            self.base += self.mss;
        }
        if self.marks.is_empty() {
            self.base = una;
        }
    }

    fn extend_to(&mut self, nxt: u64) {
        while self.seq_of(self.marks.len()) < nxt {
            self.marks.push_back(SegMark::default());
        }
    }

    fn mark_sacked(&mut self, block: SackBlock) {
        for (i, m) in self.marks.iter_mut().enumerate() {
            let seq = self.base + i as u64 * self.mss;
            if seq >= block.start && seq + self.mss <= block.end {
                m.sacked = true;
            }
        }
    }

    fn clear(&mut self) {
        for m in &mut self.marks {
            *m = SegMark::default();
        }
    }

    fn clear_retransmitted(&mut self) {
        for m in &mut self.marks {
            m.retransmitted = false;
        }
    }

    /// A hole is presumed lost once `DUPACK_THRESHOLD` segments above it are SACKed.
    fn lost_flags(&self) -> Vec<bool> {
        let mut above = 0u32;
        let mut lost = vec![false; self.marks.len()];
        for (i, m) in self.marks.iter().enumerate().rev() {
            if m.sacked {
                above += 1;
            } else {
                lost[i] = above >= DUPACK_THRESHOLD;
            }
        }
        lost
    }

    /// Segments believed to be in the network, counting retransmissions.
    fn pipe(&self) -> u64 {
        let lost = self.lost_flags();
        self.marks
            .iter()
            .zip(lost)
            .map(|(m, lost)| {
                if m.sacked {
                    0
                } else {
                    u64::from(!lost) + u64::from(m.retransmitted)
                }
            })
            .sum()
    }

    /// Lowest hole that is presumed lost and not yet resent.
    fn next_hole(&self) -> Option<usize> {
        let lost = self.lost_flags();
        self.marks
            .iter()
            .zip(lost)
            .position(|(m, lost)| lost && !m.retransmitted)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SenderStats {
    pub segments_sent: u64,
    pub retransmissions: u64,
    pub fast_retransmits: u64,
    pub timeouts: u64,
}

/// Congestion-control state of one bulk-transfer sender.
#[derive(Debug, Clone)]
pub struct TcpSender {
    config: TcpConfig,
    flow: usize,
    /// Congestion window, bytes.
    pub cwnd: f64,
    /// Slow-start threshold, bytes.
    pub ssthresh: f64,
    snd_una: u64,
    snd_nxt: u64,
    /// Highest sequence ever sent; data below it is a retransmission.
    snd_max: u64,
    dupacks: u32,
    in_fast_recovery: bool,
    recover: u64,
    srtt: Option<f64>,
    rttvar: f64,
    rto: f64,
    backoff: u32,
    /// Segment end and send time of the segment being timed.
    timed: Option<(u64, SimTime)>,
    timer_deadline: Option<SimTime>,
    scoreboard: Scoreboard,
    stats: SenderStats,
}

impl TcpSender {
    pub fn new(flow: usize, config: TcpConfig) -> Self {
        let mss = config.mss_f();
        let rto = config.initial_rto;
        Self {
            flow,
            cwnd: mss,
            ssthresh: (config.rcv_wnd as f64).max(2.0 * mss),
            snd_una: 0,
            snd_nxt: 0,
            snd_max: 0,
            dupacks: 0,
            in_fast_recovery: false,
            recover: 0,
            srtt: None,
            rttvar: 0.0,
            rto,
            backoff: 0,
            timed: None,
            timer_deadline: None,
            scoreboard: Scoreboard::new(config.mss),
            stats: SenderStats::default(),
            config,
        }
    }

    pub fn config(&self) -> &TcpConfig {
        &self.config
    }

    pub fn flow(&self) -> usize {
        self.flow
    }

    pub fn snd_una(&self) -> u64 {
        self.snd_una
    }

    pub fn snd_nxt(&self) -> u64 {
        self.snd_nxt
    }

    pub fn dupacks(&self) -> u32 {
        self.dupacks
    }

    pub fn in_fast_recovery(&self) -> bool {
        self.in_fast_recovery
    }

    pub fn srtt(&self) -> Option<f64> {
        self.srtt
    }

    pub fn rttvar(&self) -> f64 {
        self.rttvar
    }

    /// Current retransmission timeout, seconds, including backoff.
    pub fn rto(&self) -> f64 {
        self.rto
    }

    pub fn backoff(&self) -> u32 {
        self.backoff
    }

    pub fn stats(&self) -> SenderStats {
        self.stats
    }

    /// When the retransmission timer fires, if armed.
    pub fn timer_deadline(&self) -> Option<SimTime> {
        self.timer_deadline
    }

    fn mss(&self) -> f64 {
        self.config.mss_f()
    }

    fn outstanding(&self) -> u64 {
        self.snd_nxt - self.snd_una
    }

    fn arm_timer(&mut self, now: SimTime) {
        self.timer_deadline = Some(now + SimTime::from_secs_f64(self.rto));
    }

    /// Opens the connection with a one-segment window.
    pub fn start(&mut self, now: SimTime) -> Vec<Segment> {
        self.send_allowed(now)
    }

    /// Standard smoothed estimator, rounded up to whole timer ticks.
    pub fn rto_update(&mut self, rtt_sample: f64) -> f64 {
        match self.srtt {
            None => {
                self.srtt = Some(rtt_sample);
                self.rttvar = rtt_sample / 2.0;
            }
            Some(srtt) => {
                self.rttvar = 0.75 * self.rttvar + 0.25 * (srtt - rtt_sample).abs();
                self.srtt = Some(0.875 * srtt + 0.125 * rtt_sample);
            }
        }
        let raw = self.srtt.unwrap_or(rtt_sample) + 4.0 * self.rttvar;
        let g = self.config.timer_granularity;
        // Snap values that sit on a tick boundary up to floating error.
        let ticks = (raw / g - 1e-9)
            .ceil()
            .max(f64::from(self.config.min_rto_ticks));
        self.rto = (ticks * g).min(MAX_RTO);
        self.backoff = 0;
        self.rto
    }

    fn emit(&mut self, seq: u64, now: SimTime, out: &mut Vec<Segment>) {
        let len = self.config.mss;
        let end = seq + u64::from(len);
        let is_retransmission = seq < self.snd_max;
        if is_retransmission {
            self.stats.retransmissions += 1;
            // Karn: a resent segment invalidates any pending sample it covers.
            if matches!(self.timed, Some((t_end, _)) if t_end > seq) {
                self.timed = None;
            }
        } else if self.timed.is_none() {
            self.timed = Some((end, now));
        }
        self.snd_max = self.snd_max.max(end);
        self.stats.segments_sent += 1;
        if self.timer_deadline.is_none() {
            self.arm_timer(now);
        }
        out.push(Segment::data(self.flow, seq, len));
    }

    /// New data the window currently permits.
    fn send_allowed(&mut self, now: SimTime) -> Vec<Segment> {
        let mut out = Vec::new();
        let mss = u64::from(self.config.mss);
        let wnd = self.cwnd.min(self.config.rcv_wnd as f64);
        while (self.outstanding() + mss) as f64 <= wnd + 1e-6 {
            let seq = self.snd_nxt;
            self.snd_nxt += mss;
            self.emit(seq, now, &mut out);
        }
        if self.config.variant == TcpVariant::Sack {
            self.scoreboard.extend_to(self.snd_nxt);
        }
        out
    }

    /// Recovery sending for SACK: holes first, then new data, while the
    /// pipe estimate leaves room in the window.
    fn send_sack_recovery(&mut self, now: SimTime) -> Vec<Segment> {
        let mut out = Vec::new();
        let mss = u64::from(self.config.mss);
        loop {
            let pipe = self.scoreboard.pipe() * mss;
            if (pipe + mss) as f64 > self.cwnd + 1e-6 {
                break;
            }
            if let Some(idx) = self.scoreboard.next_hole() {
                let seq = self.scoreboard.seq_of(idx);
                self.scoreboard.marks[idx].retransmitted = true;
                self.emit(seq, now, &mut out);
                continue;
            }
            if self.outstanding() + mss > self.config.rcv_wnd {
                break;
            }
            let seq = self.snd_nxt;
            self.snd_nxt += mss;
            self.scoreboard.extend_to(self.snd_nxt);
            self.emit(seq, now, &mut out);
        }
        out
    }

    fn enter_recovery(&mut self, now: SimTime) -> Vec<Segment> {
        let mss = self.mss();
        self.ssthresh = (self.cwnd / 2.0).max(2.0 * mss);
        self.in_fast_recovery = true;
        self.recover = self.snd_nxt;
        self.stats.fast_retransmits += 1;
        let mut out = Vec::new();
        match self.config.variant {
            TcpVariant::Reno => {
                self.emit(self.snd_una, now, &mut out);
                self.cwnd = self.ssthresh + f64::from(DUPACK_THRESHOLD) * mss;
                out.extend(self.send_allowed(now));
            }
            TcpVariant::Sack => {
                self.cwnd = self.ssthresh;
                self.scoreboard.clear_retransmitted();
                if let Some(first) = self.scoreboard.marks.front_mut() {
                    first.retransmitted = true;
                }
                self.emit(self.snd_una, now, &mut out);
                out.extend(self.send_sack_recovery(now));
            }
        }
        out
    }

    fn exit_recovery(&mut self) {
        self.in_fast_recovery = false;
        self.cwnd = self.ssthresh;
        self.dupacks = 0;
        self.scoreboard.clear_retransmitted();
    }

    /// Processes one ACK and returns the segments to transmit.
    pub fn on_ack(&mut self, ack: &Segment, now: SimTime) -> Vec<Segment> {
        debug_assert!(ack.is_ack && ack.flow == self.flow);
        let sack = self.config.variant == TcpVariant::Sack;
        if sack {
            for block in &ack.sack_blocks {
                self.scoreboard.mark_sacked(*block);
            }
        }

        if ack.ack_no > self.snd_una {
            if let Some((end, sent)) = self.timed {
                if ack.ack_no >= end {
                    self.timed = None;
                    self.rto_update((now - sent).as_secs_f64());
                }
            }
            self.snd_una = ack.ack_no;
            // After go-back-N the receiver may already hold data past snd_nxt.
            self.snd_nxt = self.snd_nxt.max(self.snd_una);
            self.snd_max = self.snd_max.max(self.snd_una);
            if sack {
                self.scoreboard.advance(self.snd_una);
                self.scoreboard.extend_to(self.snd_nxt);
            }

            if self.in_fast_recovery {
                match self.config.variant {
                    TcpVariant::Reno => self.exit_recovery(),
                    TcpVariant::Sack if ack.ack_no >= self.recover => self.exit_recovery(),
                    TcpVariant::Sack => {}
                }
            } else {
                let mss = self.mss();
                if self.cwnd < self.ssthresh {
                    self.cwnd += mss;
                } else {
                    self.cwnd += mss * mss / self.cwnd;
                }
                self.dupacks = 0;
            }

            if self.outstanding() > 0 {
                self.arm_timer(now);
            } else {
                self.timer_deadline = None;
            }
            return if self.in_fast_recovery && sack {
                self.send_sack_recovery(now)
            } else {
                self.send_allowed(now)
            };
        }

        if ack.ack_no == self.snd_una && self.outstanding() > 0 {
            self.dupacks += 1;
            if self.in_fast_recovery {
                return match self.config.variant {
                    TcpVariant::Reno => {
                        self.cwnd += self.mss();
                        self.send_allowed(now)
                    }
                    TcpVariant::Sack => self.send_sack_recovery(now),
                };
            }
            if self.dupacks == DUPACK_THRESHOLD {
                return self.enter_recovery(now);
            }
        }
        Vec::new()
    }

    /// Retransmission timer expiry: collapse to one segment and go back to `snd_una`.
    pub fn on_timeout(&mut self, now: SimTime) -> Segment {
        let mss = self.mss();
        self.ssthresh = (self.cwnd / 2.0).max(2.0 * mss);
        self.cwnd = mss;
        self.in_fast_recovery = false;
        self.dupacks = 0;
        self.rto = (self.rto * 2.0).min(MAX_RTO);
        self.backoff += 1;
        self.stats.timeouts += 1;
        self.timed = None;
        self.scoreboard.clear();
        self.snd_nxt = self.snd_una + u64::from(self.config.mss);
        self.timer_deadline = None;
        let mut out = Vec::with_capacity(1);
        self.emit(self.snd_una, now, &mut out);
        self.arm_timer(now);
        out.pop().expect("timeout always retransmits")
    }
}

/// Receiving side of a bulk transfer: reassembly plus one ACK per segment.
#[derive(Debug, Clone)]
pub struct TcpReceiver {
    flow: usize,
    variant: TcpVariant,
    rcv_nxt: u64,
    /// Out-of-order ranges keyed by start.
    ooo: BTreeMap<u64, u64>,
}

impl TcpReceiver {
    pub fn new(flow: usize, variant: TcpVariant) -> Self {
        Self {
            flow,
            variant,
            rcv_nxt: 0,
            ooo: BTreeMap::new(),
        }
    }

    /// In-order payload bytes delivered so far.
    pub fn delivered(&self) -> u64 {
        self.rcv_nxt
    }

    fn insert_range(&mut self, start: u64, end: u64) -> SackBlock {
        let mut start = start;
        let mut end = end;
        // Merge with an overlapping or adjacent predecessor.
        if let Some((&s, &e)) = self.ooo.range(..=start).next_back() {
            if e >= start {
                start = s;
                end = end.max(e);
                self.ooo.remove(&s);
            }
        }
        // And with any successors it now touches.
        while let Some((&s, &e)) = self.ooo.range(start..).next() {
            if s > end {
                break;
            }
            end = end.max(e);
            self.ooo.remove(&s);
        }
        self.ooo.insert(start, end);
        SackBlock { start, end }
    }

    /// Accepts one data segment and returns the ACK it triggers.
    ///
    /// SACK blocks: the block holding the segment that triggered the ACK
    /// first, then the remaining blocks from the highest sequence down.
    pub fn receiver_on_data(&mut self, segment: &Segment) -> Segment {
        debug_assert!(!segment.is_ack);
        let (start, end) = (segment.seq, segment.end());
        let mut first_block = None;
        if end > self.rcv_nxt {
            if start <= self.rcv_nxt {
                self.rcv_nxt = end;
                // Pull in anything now contiguous.
                while let Some((&s, &e)) = self.ooo.iter().next() {
                    if s > self.rcv_nxt {
                        break;
                    }
                    self.rcv_nxt = self.rcv_nxt.max(e);
                    self.ooo.remove(&s);
                }
            } else {
                first_block = Some(self.insert_range(start, end));
            }
        }

        let mut ack = Segment::ack(self.flow, self.rcv_nxt);
        if self.variant == TcpVariant::Sack {
            if let Some(b) = first_block {
                ack.sack_blocks.push(b);
            }
            for (&s, &e) in self.ooo.iter().rev() {
                if ack.sack_blocks.is_full() {
                    break;
                }
                if first_block.map(|b| b.start) != Some(s) {
                    ack.sack_blocks.push(SackBlock { start: s, end: e });
                }
            }
        }
        ack
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MSS: u32 = 1000;

    fn sender(variant: TcpVariant) -> TcpSender {
        TcpSender::new(0, TcpConfig::new(variant, MSS))
    }

    fn t(ms: u64) -> SimTime {
        SimTime::from_millis(ms)
    }

    fn ack(no: u64) -> Segment {
        Segment::ack(0, no)
    }

    /// Sender with `n` segments outstanding in congestion avoidance.
    fn with_window(variant: TcpVariant, n: u32) -> TcpSender {
        let mut s = sender(variant);
        s.cwnd = f64::from(n * MSS);
        s.ssthresh = f64::from(n * MSS);
        let sent = s.start(t(0));
        assert_eq!(sent.len(), n as usize);
        s
    }

    #[test]
    fn first_ack_doubles_window_in_slow_start() {
        let mut s = sender(TcpVariant::Reno);
        let first = s.start(t(0));
        assert_eq!(first.len(), 1);
        let out = s.on_ack(&ack(1000), t(50));
        assert_eq!(s.cwnd, 2000.0);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn congestion_avoidance_at_threshold() {
        let mut s = with_window(TcpVariant::Reno, 4);
        s.on_ack(&ack(1000), t(50));
        assert!((s.cwnd - (4000.0 + 1000.0 * 1000.0 / 4000.0)).abs() < 1e-9);
    }

    #[test]
    fn triple_dupack_retransmits_once() {
        for variant in [TcpVariant::Reno, TcpVariant::Sack] {
            let mut s = with_window(variant, 8);
            let mut out = s.on_ack(&ack(1000), t(50));
            let cwnd_before = s.cwnd;
            for i in 0..3 {
                let mut a = ack(1000);
                if variant == TcpVariant::Sack {
                    a.sack_blocks.push(SackBlock {
                        start: 2000,
                        end: 3000 + i * 1000,
                    });
                }
                out = s.on_ack(&a, t(60 + i));
                if i < 2 {
                    assert!(out.is_empty(), "{variant}: early send on dupack {i}");
                }
            }
            let retrans: Vec<_> = out.iter().filter(|seg| seg.seq < 9000).collect();
            assert_eq!(retrans.len(), 1, "{variant}: {out:?}");
            assert_eq!(retrans[0].seq, 1000);
            assert!(s.in_fast_recovery());
            assert!((s.ssthresh - (cwnd_before / 2.0).max(2000.0)).abs() < 1e-9);
            assert_eq!(s.stats().fast_retransmits, 1);
        }
    }

    #[test]
    fn reno_inflates_then_deflates() {
        let mut s = with_window(TcpVariant::Reno, 8);
        for i in 0..3 {
            s.on_ack(&ack(0), t(10 + i));
        }
        let ssthresh = s.ssthresh;
        assert_eq!(s.cwnd, ssthresh + 3000.0);
        s.on_ack(&ack(0), t(20));
        assert_eq!(s.cwnd, ssthresh + 4000.0);
        s.on_ack(&ack(8000), t(40));
        assert!(!s.in_fast_recovery());
        assert_eq!(s.cwnd, ssthresh);
    }

    #[test]
    fn sack_recovery_fills_holes_and_exits_at_recover() {
        let mut s = with_window(TcpVariant::Sack, 10);
        // segments 0 and 1 lost; 2..=9 arrive
        for i in 0..3u64 {
            let mut a = ack(0);
            a.sack_blocks.push(SackBlock {
                start: 2000,
                end: 3000 + i * 1000,
            });
            s.on_ack(&a, t(50 + i));
        }
        assert!(s.in_fast_recovery());
        let mut a = ack(0);
        a.sack_blocks.push(SackBlock {
            start: 2000,
            end: 10_000,
        });
        let out = s.on_ack(&a, t(60));
        assert!(out.iter().any(|seg| seg.seq == 1000), "{out:?}");
        // partial ack keeps recovery
        s.on_ack(&ack(1000), t(80));
        assert!(s.in_fast_recovery());
        s.on_ack(&ack(10_000), t(90));
        assert!(!s.in_fast_recovery());
        assert_eq!(s.cwnd, s.ssthresh);
    }

    #[test]
    fn timeout_halves_and_collapses() {
        let mut s = with_window(TcpVariant::Reno, 16);
        let seg = s.on_timeout(t(1000));
        assert_eq!(seg.seq, 0);
        assert_eq!(s.ssthresh, 8000.0);
        assert_eq!(s.cwnd, 1000.0);
        assert_eq!(s.snd_nxt(), 1000);

        let mut s = with_window(TcpVariant::Reno, 2);
        s.on_timeout(t(1000));
        assert_eq!(s.ssthresh, 2000.0);
    }

    #[test]
    fn consecutive_timeouts_back_off() {
        let mut s = sender(TcpVariant::Reno);
        s.start(t(0));
        let base = s.rto();
        s.on_timeout(t(1000));
        s.on_timeout(t(3000));
        assert_eq!(s.rto(), 4.0 * base);
        assert_eq!(s.backoff(), 2);
        for _ in 0..10 {
            s.on_timeout(t(5000));
        }
        assert_eq!(s.rto(), MAX_RTO);
    }

    #[test]
    fn rto_rounds_to_ticks() {
        let mut s = sender(TcpVariant::Reno);
        assert!((s.rto_update(0.05) - 0.2).abs() < 1e-12);

        let mut s = sender(TcpVariant::Reno);
        // srtt = 0.1, rttvar = 0.05 → raw 0.3 → 0.4
        assert!((s.rto_update(0.1) - 0.4).abs() < 1e-12);

        let mut s = sender(TcpVariant::Reno);
        s.srtt = Some(0.25);
        s.rttvar = 0.0;
        // raw = 0.25 after one steady sample
        assert!((s.rto_update(0.25) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn srtt_converges_on_constant_samples() {
        let mut s = sender(TcpVariant::Reno);
        s.rto_update(0.5);
        for _ in 0..50 {
            s.rto_update(0.08);
        }
        let srtt = s.srtt().unwrap();
        assert!((srtt - 0.08).abs() / 0.08 < 0.01, "srtt = {srtt}");
    }

    #[test]
    fn karn_skips_retransmitted_samples() {
        let mut s = sender(TcpVariant::Reno);
        s.start(t(0));
        s.on_timeout(t(1000));
        s.on_ack(&ack(1000), t(1020));
        assert_eq!(s.srtt(), None);
    }

    #[test]
    fn stale_ack_is_ignored() {
        let mut s = with_window(TcpVariant::Reno, 4);
        s.on_ack(&ack(2000), t(10));
        let before = (s.cwnd, s.snd_una(), s.dupacks());
        assert!(s.on_ack(&ack(1000), t(11)).is_empty());
        assert_eq!(before, (s.cwnd, s.snd_una(), s.dupacks()));
    }

    #[test]
    fn receiver_in_order_and_reassembly() {
        let mut r = TcpReceiver::new(0, TcpVariant::Reno);
        assert_eq!(r.receiver_on_data(&Segment::data(0, 0, 500)).ack_no, 500);
        assert_eq!(r.receiver_on_data(&Segment::data(0, 1000, 500)).ack_no, 500);
        assert_eq!(r.receiver_on_data(&Segment::data(0, 1500, 500)).ack_no, 500);
        let a = r.receiver_on_data(&Segment::data(0, 500, 500));
        assert_eq!(a.ack_no, 2000);
        assert_eq!(r.delivered(), 2000);
        // duplicate of delivered data
        assert_eq!(r.receiver_on_data(&Segment::data(0, 0, 500)).ack_no, 2000);
    }

    #[test]
    fn receiver_reports_sack_blocks() {
        let mut r = TcpReceiver::new(0, TcpVariant::Sack);
        r.receiver_on_data(&Segment::data(0, 0, 100));
        let a = r.receiver_on_data(&Segment::data(0, 200, 100));
        assert_eq!(a.ack_no, 100);
        assert_eq!(
            a.sack_blocks.as_slice(),
            &[SackBlock {
                start: 200,
                end: 300
            }]
        );
        let a = r.receiver_on_data(&Segment::data(0, 500, 100));
        assert_eq!(
            a.sack_blocks.as_slice(),
            &[
                SackBlock {
                    start: 500,
                    end: 600
                },
                SackBlock {
                    start: 200,
                    end: 300
                }
            ]
        );
        let a = r.receiver_on_data(&Segment::data(0, 300, 100));
        assert_eq!(
            a.sack_blocks[0],
            SackBlock {
                start: 200,
                end: 400
            }
        );
        // Reno receivers never attach blocks
        let mut reno = TcpReceiver::new(0, TcpVariant::Reno);
        assert!(reno
            .receiver_on_data(&Segment::data(0, 200, 100))
            .sack_blocks
            .is_empty());
    }

    #[test]
    fn wire_sizes() {
        assert_eq!(Segment::data(0, 0, 1460).wire_size(), 1500);
        assert_eq!(Segment::ack(0, 0).wire_size(), 40);
    }
}
