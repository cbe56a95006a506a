//! Closed-form inter-drop laws, the square-root goodput bound, and the
//! Monte Carlo harness that checks the RED implementation against them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::OracleError;
use crate::red::{RedParams, RedQueue, RedVariant, Verdict};

/// Tolerance on the total mass of a law.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// `sqrt(3/2)`, the constant used when the caller does not provide one.
pub fn default_mathis_constant() -> f64 {
    (1.5f64).sqrt()
}

/// Distribution of the number of arrivals from one drop to the next,
/// counting the dropped packet. `pmf[k]` is the probability of `n = k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterdropLaw {
    pmf: Vec<f64>,
}

impl InterdropLaw {
    pub fn from_pmf(mut pmf: Vec<f64>) -> Self {
        while pmf.last() == Some(&0.0) {
            pmf.pop();
        }
        Self { pmf }
    }

    /// Normalizes raw gap counts into an empirical law.
    pub fn from_counts(counts: &[u64]) -> Self {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Self { pmf: Vec::new() };
        }
        Self::from_pmf(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    /// `P[N = n]`, zero for `n = 0` and beyond the support.
    pub fn prob(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        self.pmf.get(n - 1).copied().unwrap_or(0.0)
    }

    pub fn support_max(&self) -> usize {
        self.pmf.len()
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn total_mass(&self) -> f64 {
        self.pmf.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(k, p)| (k + 1) as f64 * p)
            .sum()
    }

    /// Total-variation distance, `0.5 * sum |p - q|`.
    pub fn tv_distance(&self, other: &InterdropLaw) -> f64 {
        let len = self.pmf.len().max(other.pmf.len());
        0.5 * (1..=len)
            .map(|n| (self.prob(n) - other.prob(n)).abs())
            .sum::<f64>()
    }
}

/// Sizes of the packets that follow a drop, in arrival order.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeStream {
    sizes: Vec<u32>,
    max_packet: u32,
}

impl SizeStream {
    pub fn new(sizes: Vec<u32>, max_packet: u32) -> Result<Self, OracleError> {
        if let Some(&len) = sizes.iter().find(|&&l| l == 0 || l > max_packet) {
            return Err(OracleError::InvalidSize {
                len,
                max: max_packet,
            });
        }
        Ok(Self { sizes, max_packet })
    }

    /// `len` packets of identical size.
    pub fn constant(size: u32, len: usize, max_packet: u32) -> Result<Self, OracleError> {
        Self::new(vec![size; len], max_packet)
    }

    /// `pattern` repeated until `len` packets.
    pub fn cycled(pattern: &[u32], len: usize, max_packet: u32) -> Result<Self, OracleError> {
        Self::new(
            pattern.iter().copied().cycle().take(len).collect(),
            max_packet,
        )
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn max_packet(&self) -> u32 {
        self.max_packet
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    fn weight(&self, i: usize, variant: RedVariant) -> f64 {
        let s = f64::from(self.sizes[i]) / f64::from(self.max_packet);
        match variant {
            RedVariant::Red5 => s * s,
            _ => s,
        }
    }
}

fn check_probability(p_b: f64) -> Result<(), OracleError> {
    if p_b > 0.0 && p_b <= 1.0 {
        Ok(())
    } else {
        Err(OracleError::InvalidProbability(p_b))
    }
}

/// Builds a law from per-arrival weights: mass `p_b * w_n` while the
/// cumulative weight stays within `1 / p_b`, and whatever is left over at
/// the first arrival that crosses it.
fn weighted_law(p_b: f64, mut weights: impl Iterator<Item = f64>) -> Option<InterdropLaw> {
    let mut pmf = Vec::new();
    let mut remaining = 1.0f64;
    loop {
        let w = weights.next()?;
        let mass = (p_b * w).min(remaining);
        pmf.push(mass);
        remaining -= mass;
        if remaining <= MASS_TOLERANCE {
            if let Some(last) = pmf.last_mut() {
                *last += remaining;
            }
            return Some(InterdropLaw::from_pmf(pmf));
        }
    }
}

/// Inter-drop law of the size-blind variant: uniform `p_b` on
/// `1..=floor(1/p_b)` with any residual mass at `ceil(1/p_b)`.
pub fn interdrop_pmf_red1(p_b: f64) -> Result<InterdropLaw, OracleError> {
    check_probability(p_b)?;
    Ok(weighted_law(p_b, std::iter::repeat(1.0)).expect("infinite weight stream"))
}

/// Inter-drop law of RED_4 (weights `L/M`) or RED_5 (weights `(L/M)^2`).
pub fn interdrop_pmf_weighted(
    p_b: f64,
    stream: &SizeStream,
    variant: RedVariant,
) -> Result<InterdropLaw, OracleError> {
    check_probability(p_b)?;
    if !matches!(variant, RedVariant::Red4 | RedVariant::Red5) {
        return Err(OracleError::UnsupportedVariant(variant));
    }
    let weights = (0..stream.len()).map(|i| stream.weight(i, variant));
    weighted_law(p_b, weights).ok_or(OracleError::StreamExhausted { len: stream.len() })
}

/// Empirical inter-drop law from `trials` drops of a RED queue whose
/// temporary probability is frozen at `p_b_frozen`.
///
/// The size stream restarts after every drop, so the i-th arrival after a
/// drop always has size `stream[i]`; past the end of the stream it wraps.
pub fn montecarlo_interdrop(
    variant: RedVariant,
    p_b_frozen: f64,
    stream: &SizeStream,
    trials: u64,
    seed: u64,
) -> Result<InterdropLaw, OracleError> {
    check_probability(p_b_frozen)?;
    if stream.is_empty() {
        return Err(OracleError::StreamExhausted { len: 0 });
    }
    let params = RedParams {
        variant,
        max_packet: stream.max_packet(),
        max_p: 1.0,
        ..RedParams::default()
    };
    let mut queue = RedQueue::new(params).expect("oracle parameters are valid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = stream.sizes();

    let mut counts: Vec<u64> = Vec::new();
    for _ in 0..trials {
        let mut n = 0usize;
        loop {
            let len = sizes[n % sizes.len()];
            n += 1;
            let decision = queue.decide_with_pb(p_b_frozen, len, rng.gen::<f64>());
            if decision.verdict == Verdict::RandomDrop {
                break;
            }
        }
        if counts.len() < n {
            counts.resize(n, 0);
        }
        counts[n - 1] += 1;
    }
    Ok(InterdropLaw::from_counts(&counts))
}

/// Square-root goodput bound `8 * mss * C / (rtt * sqrt(p))` in bits/s.
pub fn mathis_goodput_bound(mss: u32, rtt: f64, p: f64, c: f64) -> Result<f64, OracleError> {
    check_probability(p)?;
    if rtt.is_nan() || rtt <= 0.0 {
        return Err(OracleError::InvalidRtt(rtt));
    }
    Ok(8.0 * f64::from(mss) * c / (rtt * p.sqrt()))
}

/// Normalized distance from the fairness condition `mss1^2/p1 = mss2^2/p2`.
pub fn fairness_gap(mss1: u32, p1: f64, mss2: u32, p2: f64) -> Result<f64, OracleError> {
    check_probability(p1)?;
    check_probability(p2)?;
    let a = f64::from(mss1).powi(2) / p1;
    let b = f64::from(mss2).powi(2) / p2;
    Ok((a - b).abs() / a.max(b))
}
