//! Interrupted-decoder accounting.
//!
//! A shot completes under stopping time `M` when its runtime is `<= M`. Every shot that
//! does not complete is a timeout failure; completed shots fail when the uninterrupted
//! decoder would have.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::DecoderModel;
use crate::trace::EmpiricalRuntimeDistribution;

/// Default number of failures a stopping time needs to be considered significant.
pub const DEFAULT_MIN_EVENTS: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterruptedStats {
    pub stopping_time_ns: u64,
    /// `P(t > M)`
    pub timeout_probability: f64,
    /// Failure rate of the uninterrupted decoder.
    pub decode_failure_rate: f64,
    /// Counted failure rate of the interrupted decoder, when per-shot flags exist.
    pub exact_failure_rate: Option<f64>,
    pub upper_bound_rate: f64,
    pub lower_bound_rate: f64,
    /// Timeouts plus completed decoding failures, when counted.
    pub failure_events: Option<u64>,
}

impl InterruptedStats {
    /// The rate used downstream: exact when counted, otherwise the upper bound.
    pub fn rate(&self) -> f64 {
        self.exact_failure_rate.unwrap_or(self.upper_bound_rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FailureBounds {
    pub upper: f64,
    pub lower: f64,
}

/// Sandwich on the interrupted failure rate from the uninterrupted rate and the
/// timeout probability. `lower >= upper / 2` always holds.
pub fn interrupted_failure_bound(p_fail: f64, timeout: f64) -> FailureBounds {
    FailureBounds {
        upper: (p_fail + timeout).min(1.0),
        lower: p_fail.max(timeout),
    }
}

/// Runtime distribution of the decoder stopped at `m_ns`, renormalized over `t <= m_ns`.
pub fn interrupted_distribution(
    dist: &EmpiricalRuntimeDistribution,
    m_ns: u64,
) -> Result<EmpiricalRuntimeDistribution> {
    dist.truncated(m_ns)
        .ok_or_else(|| Error::domain(format!("all shots time out at stopping time {m_ns} ns")))
}

/// Interrupted failure statistics counted from a distribution with failure flags.
pub fn interrupted_failure_exact(
    dist: &EmpiricalRuntimeDistribution,
    m_ns: u64,
) -> InterruptedStats {
    let shots = dist.shots() as f64;
    let timeouts = dist.count_above(m_ns);
    let completed_failures = dist.count_failed_at_or_below(m_ns);
    let total_failed = dist.total_failed();
    let events = timeouts + completed_failures;
    // bounds from integer counts so the sandwich survives rounding
    InterruptedStats {
        stopping_time_ns: m_ns,
        timeout_probability: timeouts as f64 / shots,
        decode_failure_rate: total_failed as f64 / shots,
        exact_failure_rate: Some(events as f64 / shots),
        upper_bound_rate: ((total_failed + timeouts) as f64 / shots).min(1.0),
        lower_bound_rate: total_failed.max(timeouts) as f64 / shots,
        failure_events: Some(events),
    }
}

/// Interrupted failure statistics of a modelled decoder, where only the bounds are known.
pub fn interrupted_failure_model(
    model: &DecoderModel,
    d: u32,
    p: f64,
    m_ns: u64,
) -> Result<InterruptedStats> {
    let p_fail = model.failure.failure_rate(d, p)?;
    let timeout = model.runtime.survival(m_ns);
    let bounds = interrupted_failure_bound(p_fail, timeout);
    Ok(InterruptedStats {
        stopping_time_ns: m_ns,
        timeout_probability: timeout,
        decode_failure_rate: p_fail,
        exact_failure_rate: None,
        upper_bound_rate: bounds.upper,
        lower_bound_rate: bounds.lower,
        failure_events: model.failure.failure_events(),
    })
}

/// Stopping times worth evaluating: 0 (everything below the fastest shot behaves
/// alike) and every observed runtime. The statistics are constant in between.
pub fn candidate_stopping_times(dist: &EmpiricalRuntimeDistribution) -> Vec<u64> {
    let mut out = Vec::with_capacity(dist.points().len() + 1);
    if dist.min_runtime_ns() > 0 {
        out.push(0);
    }
    out.extend(dist.points().iter().map(|p| p.runtime_ns));
    out
}

/// Candidates whose interrupted failure count reaches `min_events`.
pub fn significant_stopping_times(
    dist: &EmpiricalRuntimeDistribution,
    min_events: u64,
) -> Result<Vec<u64>> {
    if min_events == 0 {
        return Err(Error::domain("min_events must be at least 1"));
    }
    Ok(candidate_stopping_times(dist)
        .into_iter()
        .filter(|&m| dist.count_above(m) + dist.count_failed_at_or_below(m) >= min_events)
        .collect())
}

/// Exact statistics at every candidate plus any extra stopping times, sorted by `M`.
pub fn sweep(dist: &EmpiricalRuntimeDistribution, extra: &[u64]) -> Vec<InterruptedStats> {
    let mut ms = candidate_stopping_times(dist);
    ms.extend_from_slice(extra);
    ms.sort_unstable();
    ms.dedup();
    ms.into_iter()
        .map(|m| interrupted_failure_exact(dist, m))
        .collect()
}
