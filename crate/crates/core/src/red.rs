//! RED gatekeeper with five drop-probability variants.
//!
//! All variants share the EWMA average and the three regions delimited by
//! `min_th` and `max_th`. They differ only in how the final drop probability
//! of a packet in the random region depends on its size `L` relative to the
//! maximum size `M`, and in how `count` is advanced after an accepted packet:
//!
//! | variant | final probability `p_a`              | count after accept |
//! |---------|--------------------------------------|--------------------|
//! | RED_1   | `p_b / (1 - count*p_b)`              | `+ 1`              |
//! | RED_2   | `s*p_b / (1 - count*s*p_b)`          | `+ 1`              |
//! | RED_3   | `s*p_b / (1 - count*p_b)`            | `+ 1`              |
//! | RED_4   | `s*p_b / (1 - count*p_b)`            | `+ s`              |
//! | RED_5   | `s^2*p_b / (1 - count*p_b)`          | `+ s^2`            |
//!
//! with `s = L / M`. Occupancy and thresholds are counted in packets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RedVariant {
    #[serde(rename = "RED_1")]
    Red1,
    #[serde(rename = "RED_2")]
    Red2,
    #[serde(rename = "RED_3")]
    Red3,
    #[serde(rename = "RED_4")]
    Red4,
    #[serde(rename = "RED_5")]
    Red5,
}

impl RedVariant {
    pub const ALL: [RedVariant; 5] = [
        RedVariant::Red1,
        RedVariant::Red2,
        RedVariant::Red3,
        RedVariant::Red4,
        RedVariant::Red5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RedVariant::Red1 => "RED_1",
            RedVariant::Red2 => "RED_2",
            RedVariant::Red3 => "RED_3",
            RedVariant::Red4 => "RED_4",
            RedVariant::Red5 => "RED_5",
        }
    }

    /// Weight added to `count` by an accepted packet of relative size `s`.
    fn count_weight(self, s: f64) -> f64 {
        match self {
            RedVariant::Red1 | RedVariant::Red2 | RedVariant::Red3 => 1.0,
            RedVariant::Red4 => s,
            RedVariant::Red5 => s * s,
        }
    }
}

impl fmt::Display for RedVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RedVariant {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        let v = match norm.as_str() {
            "RED_1" | "RED1" | "1" => RedVariant::Red1,
            "RED_2" | "RED2" | "2" => RedVariant::Red2,
            "RED_3" | "RED3" | "3" => RedVariant::Red3,
            "RED_4" | "RED4" | "4" => RedVariant::Red4,
            "RED_5" | "RED5" | "5" => RedVariant::Red5,
            _ => {
                return Err(ConfigError::invalid(
                    "variant",
                    format!("unknown RED variant {s:?}, expected RED_1 .. RED_5"),
                ))
            }
        };
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RedParams {
    pub variant: RedVariant,
    /// EWMA weight.
    pub w_q: f64,
    /// Lower threshold, packets.
    pub min_th: f64,
    /// Upper threshold, packets.
    pub max_th: f64,
    pub max_p: f64,
    /// Maximum packet size in bytes.
    #[serde(rename = "M")]
    pub max_packet: u32,
    /// Physical queue capacity, packets.
    pub buffer_cap: usize,
}

impl Default for RedParams {
    fn default() -> Self {
        Self {
            variant: RedVariant::Red1,
            w_q: 0.002,
            min_th: 40.0,
            max_th: 120.0,
            max_p: 0.1,
            max_packet: 1500,
            buffer_cap: 200,
        }
    }
}

impl RedParams {
    pub fn with_variant(variant: RedVariant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.w_q > 0.0 && self.w_q <= 1.0) {
            return Err(ConfigError::invalid("w_q", "must satisfy 0 < w_q <= 1"));
        }
        if !(self.min_th >= 0.0 && self.min_th.is_finite()) {
            return Err(ConfigError::invalid(
                "min_th",
                "must be a finite value >= 0",
            ));
        }
        if !(self.max_th > self.min_th && self.max_th.is_finite()) {
            return Err(ConfigError::invalid(
                "max_th",
                "must be finite and greater than min_th",
            ));
        }
        if self.max_th > self.buffer_cap as f64 {
            return Err(ConfigError::invalid("max_th", "must not exceed buffer_cap"));
        }
        if !(self.max_p > 0.0 && self.max_p <= 1.0) {
            return Err(ConfigError::invalid("max_p", "must satisfy 0 < max_p <= 1"));
        }
        if self.max_packet == 0 {
            return Err(ConfigError::invalid(
                "M",
                "maximum packet size must be positive",
            ));
        }
        if self.buffer_cap == 0 {
            return Err(ConfigError::invalid(
                "buffer_cap",
                "must be at least one packet",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RedState {
    /// EWMA of the instantaneous occupancy, packets.
    pub avg: f64,
    /// Accepted-packet weight since the last drop.
    pub count: f64,
    /// Instantaneous occupancy, packets (including the one in service).
    pub q: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Accept,
    RandomDrop,
    ForcedDropAvg,
    ForcedDropBuffer,
}

impl Verdict {
    pub fn is_drop(self) -> bool {
        self != Verdict::Accept
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropDecision {
    pub verdict: Verdict,
    /// Final drop probability; zero outside the random region.
    pub p_a: f64,
    /// Temporary drop probability; zero outside the random region.
    pub p_b: f64,
}

impl DropDecision {
    fn outside_random_region(verdict: Verdict) -> Self {
        Self {
            verdict,
            p_a: 0.0,
            p_b: 0.0,
        }
    }
}

/// Folds the occupancy seen by an arriving packet into `state.avg`.
pub fn update_avg(state: &mut RedState, params: &RedParams, q_now: usize) -> f64 {
    state.avg = (1.0 - params.w_q) * state.avg + params.w_q * q_now as f64;
    state.avg
}

/// Temporary drop probability, linear from 0 at `min_th` to `max_p` at `max_th`.
///
/// Only meaningful inside the random region; callers branch on the
/// thresholds first. Out-of-region input is clamped.
pub fn compute_pb(avg: f64, params: &RedParams) -> f64 {
    debug_assert!(
        avg >= params.min_th && avg < params.max_th,
        "compute_pb called outside the random region (avg = {avg})"
    );
    let pb = params.max_p * (avg - params.min_th) / (params.max_th - params.min_th);
    pb.clamp(0.0, params.max_p)
}

/// Final drop probability for a packet of `len` bytes given the current `count`.
///
/// A non-positive denominator means the uniform spreading has run out of
/// room, and the packet is dropped with certainty.
pub fn compute_pa(variant: RedVariant, p_b: f64, count: f64, len: u32, max_packet: u32) -> f64 {
    let s = f64::from(len) / f64::from(max_packet);
    let (numerator, denominator) = match variant {
        RedVariant::Red1 => (p_b, 1.0 - count * p_b),
        RedVariant::Red2 => {
            let scaled = s * p_b;
            (scaled, 1.0 - count * scaled)
        }
        RedVariant::Red3 | RedVariant::Red4 => (s * p_b, 1.0 - count * p_b),
        RedVariant::Red5 => (s * s * p_b, 1.0 - count * p_b),
    };
    if denominator <= 0.0 {
        return 1.0;
    }
    (numerator / denominator).clamp(0.0, 1.0)
}

/// One RED-guarded queue: parameters plus the mutable averaging state.
///
/// The queue itself does not hold packets; it only tracks occupancy. The
/// owner reports departures through [`RedQueue::on_departure`].
#[derive(Debug, Clone, PartialEq)]
pub struct RedQueue {
    params: RedParams,
    state: RedState,
}

impl RedQueue {
    pub fn new(params: RedParams) -> Result<Self, ConfigError> {
        params.validate()?;
        Ok(Self {
            params,
            state: RedState::default(),
        })
    }

    pub fn params(&self) -> &RedParams {
        &self.params
    }

    pub fn state(&self) -> &RedState {
        &self.state
    }

    /// Overrides the averaging state. Intended for tests and replay.
    pub fn set_state(&mut self, state: RedState) {
        self.state = state;
    }

    /// Decides the fate of an arriving packet of `len` bytes.
    ///
    /// `u` is a uniform draw in `[0, 1)` supplied by the caller so that the
    /// decision is a pure function of `(state, params, len, u)`.
    pub fn on_packet_arrival(&mut self, len: u32, u: f64) -> DropDecision {
        let q_now = self.state.q;
        let avg = update_avg(&mut self.state, &self.params, q_now);

        if self.state.q >= self.params.buffer_cap {
            self.state.count = 0.0;
            return DropDecision::outside_random_region(Verdict::ForcedDropBuffer);
        }
        if avg < self.params.min_th {
            self.state.count = 0.0;
            self.state.q += 1;
            return DropDecision::outside_random_region(Verdict::Accept);
        }
        if avg >= self.params.max_th {
            self.state.count = 0.0;
            return DropDecision::outside_random_region(Verdict::ForcedDropAvg);
        }

        let p_b = compute_pb(avg, &self.params);
        let decision = self.decide_with_pb(p_b, len, u);
        if decision.verdict == Verdict::Accept {
            self.state.q += 1;
        }
        decision
    }

    /// Random-region step at a given temporary probability: computes `p_a`
    /// from the current count, draws the verdict, and advances or resets
    /// `count`. Occupancy is left untouched.
    ///
    /// `count` entering `p_a` is the weight accepted since the last drop, so
    /// the n-th arrival after a drop sees the weight of the first n-1.
    pub fn decide_with_pb(&mut self, p_b: f64, len: u32, u: f64) -> DropDecision {
        let variant = self.params.variant;
        let p_a = compute_pa(variant, p_b, self.state.count, len, self.params.max_packet);
        if u < p_a {
            self.state.count = 0.0;
            DropDecision {
                verdict: Verdict::RandomDrop,
                p_a,
                p_b,
            }
        } else {
            let s = f64::from(len) / f64::from(self.params.max_packet);
            self.state.count += variant.count_weight(s);
            DropDecision {
                verdict: Verdict::Accept,
                p_a,
                p_b,
            }
        }
    }

    /// Records that one accepted packet left the queue.
    pub fn on_departure(&mut self) {
        debug_assert!(self.state.q > 0, "departure from an empty RED queue");
        self.state.q = self.state.q.saturating_sub(1);
    }
}
