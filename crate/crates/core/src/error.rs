use thiserror::Error;

/// A scenario or parameter set that cannot be simulated.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("cannot read scenario {path}: {reason}")]
    Io { path: String, reason: String },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Name of the offending field, when the error is tied to one.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(
        "simulation stalled at t = {at:.6} s: event queue drained with {flows} active flow(s)"
    )]
    Stalled { at: f64, flows: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("drop probability must lie in (0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("packet size {len} outside (0, {max}]")]
    InvalidSize { len: u32, max: u32 },
    #[error("size stream of {len} packets ends before the inter-drop support closes; supply a longer stream")]
    StreamExhausted { len: usize },
    #[error("round-trip time must be positive, got {0}")]
    InvalidRtt(f64),
    #[error("variant {0} has no weighted closed form; use RED_4 or RED_5")]
    UnsupportedVariant(crate::red::RedVariant),
}
