//! Logical-depth arithmetic: SEC depth, required code distance, and decoder range.
//!
//! One logical T gate compiled as an `H S^a T` step costs `schedule_total(d)` SEC
//! cycles of Clifford work plus the decoding delay `ceil(delay / t_SEC)` spent idle
//! waiting for the conditional S. With that schedule the range
//!
//! `max { n : n (total(d) + M) rate / d <= eps }`
//!
//! has the closed form `floor(eps d / (rate (total(d) + M)))`, which is what
//! [`decoder_range`] evaluates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::FailureModel;
use crate::stopping::{interrupted_failure_exact, significant_stopping_times};
use crate::trace::{validate_distance, validate_probability_open, EmpiricalRuntimeDistribution};

pub const DEFAULT_EPSILON: f64 = 0.5;
/// 1 µs per syndrome-extraction cycle.
pub const DEFAULT_T_SEC_NS: u64 = 1_000;
pub const DEFAULT_RANGE_CAP: u64 = 1_000_000_000_000_000_000;
pub const DEFAULT_D_MAX: u32 = 99;

/// SEC cycles per logical operation, as multiples of the code distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateSchedule {
    pub h_cycles: u32,
    pub s_cycles: u32,
    pub conditional_s_cycles: u32,
    pub measure_cycles: u32,
}

impl Default for GateSchedule {
    fn default() -> Self {
        Self {
            h_cycles: 2,
            s_cycles: 2,
            conditional_s_cycles: 2,
            measure_cycles: 1,
        }
    }
}

impl GateSchedule {
    pub fn validate(&self) -> Result<()> {
        if [
            self.h_cycles,
            self.s_cycles,
            self.conditional_s_cycles,
            self.measure_cycles,
        ]
        .contains(&0)
        {
            return Err(Error::domain("gate schedule multipliers must be positive"));
        }
        Ok(())
    }

    /// Multiplier of `d` per T gate; 7 for the default schedule.
    pub fn multiplier(&self) -> u64 {
        u64::from(self.h_cycles)
            + u64::from(self.s_cycles)
            + u64::from(self.conditional_s_cycles)
            + u64::from(self.measure_cycles)
    }

    /// Clifford cycles per T gate at distance `d`.
    pub fn total_cycles(&self, d: u32) -> u64 {
        self.multiplier() * u64::from(d)
    }
}

/// Settings shared by every range and cost evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeParams {
    /// Allowed logical circuit error probability.
    pub epsilon: f64,
    pub t_sec_ns: u64,
    pub schedule: GateSchedule,
    /// Ranges at or above this value are reported as saturated.
    pub saturation_cap: u64,
}

impl Default for RangeParams {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            t_sec_ns: DEFAULT_T_SEC_NS,
            schedule: GateSchedule::default(),
            saturation_cap: DEFAULT_RANGE_CAP,
        }
    }
}

impl RangeParams {
    pub fn validate(&self) -> Result<()> {
        validate_probability_open("epsilon", self.epsilon)?;
        if self.t_sec_ns == 0 {
            return Err(Error::domain("t_sec_ns must be at least 1"));
        }
        if self.saturation_cap == 0 {
            return Err(Error::domain("saturation cap must be at least 1"));
        }
        self.schedule.validate()
    }

    /// Delay in whole SEC cycles, rounded up.
    pub fn delay_cycles(&self, delay_ns: u64) -> u64 {
        delay_ns.div_ceil(self.t_sec_ns)
    }
}

/// Total SEC cycles to run `n_t` T gates with the given decoding delay.
pub fn sec_depth(n_t: u64, d: u32, delay_ns: u64, t_sec_ns: u64, schedule: &GateSchedule) -> u128 {
    let per_gate = schedule.total_cycles(d) + delay_ns.div_ceil(t_sec_ns);
    u128::from(n_t) * u128::from(per_gate)
}

/// T-depth reachable without encoding: `floor(eps / (3 p))`.
pub fn unencoded_range(p: f64, epsilon: f64) -> u64 {
    (epsilon / (3.0 * p)).floor() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RequiredDistance {
    /// Smallest sufficient odd distance, `None` when no distance up to the bound works.
    pub distance: Option<u32>,
    /// `n_t < eps / (3 p)`: bare physical qubits already suffice.
    pub no_encoding_suffices: bool,
}

/// Required distance with a delay that does not depend on `d`.
pub fn required_distance(
    n_t: u64,
    p: f64,
    delay_ns: u64,
    failure: &FailureModel,
    params: &RangeParams,
    d_max: u32,
) -> Result<RequiredDistance> {
    required_distance_with(n_t, p, failure, params, d_max, |_| Ok(delay_ns))
}

/// Smallest odd `d` in `[3, d_max]` with `sec_depth(n_t, d, delay(d)) / d * p_fail(d, p) <= eps`.
pub fn required_distance_with(
    n_t: u64,
    p: f64,
    failure: &FailureModel,
    params: &RangeParams,
    d_max: u32,
    mut delay_ns_at: impl FnMut(u32) -> Result<u64>,
) -> Result<RequiredDistance> {
    if n_t == 0 {
        return Err(Error::domain("n_T must be at least 1"));
    }
    validate_probability_open("physical error rate", p)?;
    params.validate()?;
    let no_encoding_suffices = (n_t as f64) < params.epsilon / (3.0 * p);
    let mut distance = None;
    for d in (3..=d_max).step_by(2) {
        let depth = sec_depth(n_t, d, delay_ns_at(d)?, params.t_sec_ns, &params.schedule);
        let proxy = depth as f64 / f64::from(d) * failure.failure_rate(d, p)?;
        if proxy <= params.epsilon {
            distance = Some(d);
            break;
        }
    }
    Ok(RequiredDistance {
        distance,
        no_encoding_suffices,
    })
}

/// Range of a decoder at one distance and stopping time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RangeResult {
    /// Equal to the saturation cap when `saturated`.
    pub n_t: u64,
    pub saturated: bool,
    pub stopping_time_ns: u64,
    pub stopping_cycles: u64,
    pub failure_rate_used: f64,
    pub distance: u32,
    pub epsilon: f64,
}

impl RangeResult {
    /// Whether `n_t` T gates fit within this range.
    pub fn covers(&self, n_t: u64) -> bool {
        self.n_t >= n_t
    }
}

fn floor_range(value: f64, cap: u64) -> (u64, bool) {
    if !value.is_finite() || value >= cap as f64 {
        (cap, true)
    } else {
        (value.floor() as u64, false)
    }
}

/// `floor(eps d / (rate (total(d) + M_cycles)))`; a zero rate saturates.
pub fn decoder_range(
    d: u32,
    m_ns: u64,
    failure_rate: f64,
    params: &RangeParams,
) -> Result<RangeResult> {
    validate_distance(d)?;
    params.validate()?;
    if !(0.0..=1.0).contains(&failure_rate) {
        return Err(Error::domain(format!(
            "failure rate must lie in [0, 1], got {failure_rate}"
        )));
    }
    let m_cycles = params.delay_cycles(m_ns);
    let cycles = (params.schedule.total_cycles(d) + m_cycles) as f64;
    let (n_t, saturated) = if failure_rate == 0.0 {
        (params.saturation_cap, true)
    } else {
        floor_range(
            params.epsilon * f64::from(d) / (failure_rate * cycles),
            params.saturation_cap,
        )
    };
    Ok(RangeResult {
        n_t,
        saturated,
        stopping_time_ns: m_ns,
        stopping_cycles: m_cycles,
        failure_rate_used: failure_rate,
        distance: d,
        epsilon: params.epsilon,
    })
}

/// Range with the exact interrupted failure rate at every significant stopping time.
pub fn range_curve(
    dist: &EmpiricalRuntimeDistribution,
    d: u32,
    params: &RangeParams,
    min_events: u64,
) -> Result<Vec<RangeResult>> {
    significant_stopping_times(dist, min_events)?
        .into_par_iter()
        .map(|m| decoder_range(d, m, interrupted_failure_exact(dist, m).rate(), params))
        .collect()
}

/// The significant stopping time with the largest range; ties go to the smaller `M`.
pub fn range_optimized_stopping_time(
    dist: &EmpiricalRuntimeDistribution,
    d: u32,
    params: &RangeParams,
    min_events: u64,
) -> Result<RangeResult> {
    let curve = range_curve(dist, d, params, min_events)?;
    let mut best: Option<RangeResult> = None;
    for r in curve {
        if best.is_none_or(|b| r.n_t > b.n_t) {
            best = Some(r);
        }
    }
    best.ok_or_else(|| {
        Error::domain(format!(
            "no stopping time has at least {min_events} failure events; collect more shots"
        ))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub alpha: f64,
    pub m_cycles: u64,
    pub range: u64,
    pub saturated: bool,
}

/// Range of a decoder with accuracy `alpha` relative to `base`, at stopping times given
/// in SEC cycles: `floor(eps d alpha / (p_fail (total(d) + M)))`. Rows are ordered by
/// `alpha`, then `M`.
pub fn accuracy_surface(
    d: u32,
    p: f64,
    base: &FailureModel,
    alphas: &[f64],
    m_cycles: &[u64],
    params: &RangeParams,
) -> Result<Vec<SurfacePoint>> {
    if alphas.is_empty() || m_cycles.is_empty() {
        return Err(Error::domain(
            "accuracy and stopping-time grids must be nonempty",
        ));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(Error::domain(format!(
            "accuracy must lie in (0, 1], got {a}"
        )));
    }
    params.validate()?;
    let p_fail = base.failure_rate(d, p)?;
    let total = params.schedule.total_cycles(d);
    let grid: Vec<(f64, u64)> = alphas
        .iter()
        .flat_map(|&a| m_cycles.iter().map(move |&m| (a, m)))
        .collect();
    Ok(grid
        .into_par_iter()
        .map(|(alpha, m)| {
            let value = params.epsilon * f64::from(d) * alpha / (p_fail * (total + m) as f64);
            let (range, saturated) = if p_fail == 0.0 {
                (params.saturation_cap, true)
            } else {
                floor_range(value, params.saturation_cap)
            };
            SurfacePoint {
                alpha,
                m_cycles: m,
                range,
                saturated,
            }
        })
        .collect())
}
