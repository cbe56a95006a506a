//! Declarative experiment description and its plain-text file format.
//!
//! Scenario files are TOML: top-level `key = value` pairs, a `[red]`
//! table, and one `[[group]]` table per MTU group. Rates are bits per
//! second, delays and durations seconds, sizes bytes. Unknown keys are
//! rejected.
//!
//! ```toml
//! schema = 1
//! name = "red1-reno-15ms"
//! duration = 60.0
//! warmup = 10.0
//! seed = 1
//! tcp_variant = "reno"
//! bottleneck_rate = 30e6
//! access_rate = 100e6
//! bottleneck_prop_delay = 0.015
//! access_prop_delay = 0.001
//!
//! [red]
//! variant = "RED_1"
//! w_q = 0.002
//! min_th = 40
//! max_th = 120
//! max_p = 0.1
//! M = 1500
//! buffer_cap = 200
//!
//! [[group]]
//! flow_count = 20
//! mtu = 1500
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::red::{RedParams, RedVariant};
use crate::tcp::{TcpVariant, HEADER_BYTES};

pub const SCHEMA_VERSION: u32 = 1;

/// MTUs of the three source groups in the reference experiment.
pub const DEFAULT_MTUS: [u32; 3] = [1500, 750, 375];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub flow_count: usize,
    /// Wire size of the group's data packets, bytes.
    pub mtu: u32,
}

fn default_timer_granularity() -> f64 {
    0.2
}

fn default_min_rto_ticks() -> u32 {
    1
}

fn default_rcv_wnd() -> u64 {
    1_000_000
}

fn default_start_jitter() -> f64 {
    1.0
}

fn default_access_prop_delay() -> f64 {
    0.001
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    /// Simulated seconds.
    pub duration: f64,
    /// Seconds excluded from measurement.
    pub warmup: f64,
    pub seed: u64,
    pub tcp_variant: TcpVariant,
    pub bottleneck_rate: f64,
    pub access_rate: f64,
    pub bottleneck_prop_delay: f64,
    #[serde(default = "default_access_prop_delay")]
    pub access_prop_delay: f64,
    #[serde(default = "default_timer_granularity")]
    pub timer_granularity: f64,
    #[serde(default = "default_min_rto_ticks")]
    pub min_rto_ticks: u32,
    #[serde(default = "default_rcv_wnd")]
    pub rcv_wnd: u64,
    /// Flow start times are drawn uniformly from `[0, start_jitter]`.
    #[serde(default = "default_start_jitter")]
    pub start_jitter: f64,
    /// Independent per-packet loss applied on the bottleneck wire, after the queue.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub bottleneck_loss: f64,
    pub red: RedParams,
    #[serde(rename = "group", default)]
    pub groups: Vec<GroupSpec>,
}

impl Scenario {
    /// 3 groups of 20 flows with MTUs 1500/750/375 over 30 Mbit/s.
    pub fn dumbbell_default(
        variant: RedVariant,
        tcp: TcpVariant,
        bottleneck_delay_ms: u32,
    ) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            name: format!("{}-{}-{}ms", variant, tcp, bottleneck_delay_ms),
            duration: 60.0,
            warmup: 10.0,
            seed: 1,
            tcp_variant: tcp,
            bottleneck_rate: 30e6,
            access_rate: 100e6,
            bottleneck_prop_delay: f64::from(bottleneck_delay_ms) / 1000.0,
            access_prop_delay: default_access_prop_delay(),
            timer_granularity: default_timer_granularity(),
            min_rto_ticks: default_min_rto_ticks(),
            rcv_wnd: default_rcv_wnd(),
            start_jitter: default_start_jitter(),
            bottleneck_loss: 0.0,
            red: RedParams::with_variant(variant),
            groups: DEFAULT_MTUS
                .iter()
                .map(|&mtu| GroupSpec {
                    flow_count: 20,
                    mtu,
                })
                .collect(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn flow_count(&self) -> usize {
        self.groups.iter().map(|g| g.flow_count).sum()
    }

    /// Bottleneck propagation delay in whole milliseconds, as reported in CSV rows.
    pub fn bottleneck_delay_ms(&self) -> f64 {
        self.bottleneck_prop_delay * 1000.0
    }

    /// Propagation-only round trip: two access hops and the bottleneck each way.
    pub fn rtt_floor(&self) -> f64 {
        2.0 * (self.bottleneck_prop_delay + 2.0 * self.access_prop_delay)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != SCHEMA_VERSION {
            return Err(ConfigError::invalid(
                "schema",
                format!(
                    "unsupported schema {}, expected {SCHEMA_VERSION}",
                    self.schema
                ),
            ));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(ConfigError::invalid("duration", "must be positive"));
        }
        if !(self.warmup >= 0.0 && self.warmup < self.duration) {
            return Err(ConfigError::invalid(
                "warmup",
                "must satisfy 0 <= warmup < duration",
            ));
        }
        for (field, v) in [
            ("bottleneck_rate", self.bottleneck_rate),
            ("access_rate", self.access_rate),
            ("timer_granularity", self.timer_granularity),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(field, "must be positive"));
            }
        }
        for (field, v) in [
            ("bottleneck_prop_delay", self.bottleneck_prop_delay),
            ("access_prop_delay", self.access_prop_delay),
            ("start_jitter", self.start_jitter),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(field, "must be a finite value >= 0"));
            }
        }
        if !(0.0..1.0).contains(&self.bottleneck_loss) {
            return Err(ConfigError::invalid(
                "bottleneck_loss",
                "must lie in [0, 1)",
            ));
        }
        if self.min_rto_ticks == 0 {
            return Err(ConfigError::invalid(
                "min_rto_ticks",
                "must be at least one tick",
            ));
        }
        self.red.validate()?;
        for (i, g) in self.groups.iter().enumerate() {
            if g.flow_count == 0 {
                return Err(ConfigError::invalid(
                    format!("group[{i}].flow_count"),
                    "must be at least 1",
                ));
            }
            if g.mtu <= HEADER_BYTES {
                return Err(ConfigError::invalid(
                    format!("group[{i}].mtu"),
                    format!("must exceed the {HEADER_BYTES}-byte header"),
                ));
            }
            if g.mtu > self.red.max_packet {
                return Err(ConfigError::invalid(
                    format!("group[{i}].mtu"),
                    format!(
                        "{} exceeds the maximum packet size M = {}",
                        g.mtu, self.red.max_packet
                    ),
                ));
            }
            if self.rcv_wnd < 2 * u64::from(g.mtu - HEADER_BYTES) {
                return Err(ConfigError::invalid(
                    "rcv_wnd",
                    "must hold at least two segments",
                ));
            }
        }
        Ok(())
    }
}
