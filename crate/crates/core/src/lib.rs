//! Packet-size aware RED queue management, a deterministic TCP dumbbell
//! simulator, and closed-form checks of RED's inter-drop behaviour.

pub mod error;
pub mod metrics;
pub mod oracle;
pub mod red;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod tcp;

pub use error::{ConfigError, OracleError, SimError};
pub use metrics::RunReport;
pub use red::{RedParams, RedQueue, RedVariant};
pub use scenario::Scenario;
pub use tcp::TcpVariant;
