//! Spacetime cost `2 d² Δ` and its minimization over distance and stopping time.
//!
//! For a fixed decoder the candidate `(d, M)` pairs, their ranges and their per-gate
//! costs do not depend on `n_T`, so [`CostTable`] evaluates them once and answers
//! `mincost` for any workload by a scan.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{binomial_upper_quantile, DecoderFamily, DecoderModel, RuntimeModel};
use crate::range::{decoder_range, sec_depth, RangeParams, RangeResult};
use crate::stopping::{
    interrupted_failure_exact, interrupted_failure_model, significant_stopping_times,
};
use crate::trace::validate_distance;

/// Number of survival quantiles `1 - 10^-k` probed for analytic runtime laws.
pub const QUANTILE_GRID_DEPTH: i32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CostPoint {
    pub distance: u32,
    pub stopping_time_ns: u64,
    pub n_t: u64,
    /// `None` when the workload exceeds the range at this point.
    pub cost: Option<u128>,
    pub range_at_point: u64,
}

/// `2 d² Δ(n_T, d, M)`, or infeasible when `range_at_point < n_t`.
pub fn spacetime_cost(
    n_t: u64,
    d: u32,
    m_ns: u64,
    range_at_point: u64,
    params: &RangeParams,
) -> Result<CostPoint> {
    if n_t == 0 {
        return Err(Error::domain("n_T must be at least 1"));
    }
    validate_distance(d)?;
    let cost = (range_at_point >= n_t).then(|| {
        2 * u128::from(d)
            * u128::from(d)
            * sec_depth(n_t, d, m_ns, params.t_sec_ns, &params.schedule)
    });
    Ok(CostPoint {
        distance: d,
        stopping_time_ns: m_ns,
        n_t,
        cost,
        range_at_point,
    })
}

/// Converts a cost in qubit·cycles to qubit·seconds.
pub fn cost_in_qubit_seconds(cost: u128, t_sec_ns: u64) -> f64 {
    cost as f64 * t_sec_ns as f64 * 1e-9
}

/// One evaluated `(d, M)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub range: RangeResult,
    /// Cost of one T gate, `2 d² (total(d) + M_cycles)`.
    pub per_gate_cost: u128,
}

impl Candidate {
    pub fn distance(&self) -> u32 {
        self.range.distance
    }

    pub fn stopping_time_ns(&self) -> u64 {
        self.range.stopping_time_ns
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MinCostResult {
    pub n_t: u64,
    /// `None` when no candidate covers the workload.
    pub cost: Option<u128>,
    pub distance: Option<u32>,
    pub stopping_time_ns: Option<u64>,
}

impl MinCostResult {
    pub fn is_feasible(&self) -> bool {
        self.cost.is_some()
    }
}

/// Stopping times probed for an analytic runtime law: the quantiles `1 - 10^-k` of the
/// runtime and its maximum, sorted and deduplicated.
pub fn analytic_stopping_times(runtime: &RuntimeModel) -> Vec<u64> {
    let mut out = match runtime {
        RuntimeModel::Instantaneous => vec![0],
        RuntimeModel::Binomial { n, q, unit_ns } => {
            let mut ms: Vec<u64> = (1..=QUANTILE_GRID_DEPTH)
                .map(|k| binomial_upper_quantile(*n, *q, 10f64.powi(-k)) * unit_ns)
                .collect();
            ms.push(n * unit_ns);
            ms
        }
        RuntimeModel::Empirical(dist) => {
            let mut ms: Vec<u64> = (1..=QUANTILE_GRID_DEPTH)
                .map(|k| {
                    dist.percentile(1.0 - 10f64.powi(-k))
                        .unwrap_or(dist.max_runtime_ns())
                })
                .collect();
            ms.push(dist.max_runtime_ns());
            ms
        }
    };
    out.sort_unstable();
    out.dedup();
    out
}

/// Candidates of one decoder at one distance, sorted by `M`.
///
/// Trace-backed models use their significant stopping times and the exact interrupted
/// rate; analytic ones use [`analytic_stopping_times`] and the upper bound.
pub fn distance_candidates(
    model: &DecoderModel,
    d: u32,
    p: f64,
    params: &RangeParams,
    min_events: u64,
) -> Result<Vec<Candidate>> {
    let rated: Vec<(u64, f64)> = match &model.runtime {
        RuntimeModel::Empirical(dist) => significant_stopping_times(dist, min_events)?
            .into_iter()
            .map(|m| (m, interrupted_failure_exact(dist, m).rate()))
            .collect(),
        runtime => analytic_stopping_times(runtime)
            .into_iter()
            .map(|m| Ok((m, interrupted_failure_model(model, d, p, m)?.rate())))
            .collect::<Result<_>>()?,
    };
    let mult = u128::from(params.schedule.multiplier());
    rated
        .into_iter()
        .map(|(m, rate)| {
            let range = decoder_range(d, m, rate, params)?;
            let dd = u128::from(d);
            Ok(Candidate {
                range,
                per_gate_cost: 2 * dd * dd * (mult * dd + u128::from(range.stopping_cycles)),
            })
        })
        .collect()
}

/// Every candidate of a decoder family over a set of distances.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    candidates: Vec<Candidate>,
}

impl CostTable {
    /// Distances where the family has no model contribute no candidates.
    pub fn build(
        family: &DecoderFamily,
        p: f64,
        distances: &[u32],
        params: &RangeParams,
        min_events: u64,
    ) -> Result<Self> {
        if distances.is_empty() {
            return Err(Error::domain("distance candidate set must be nonempty"));
        }
        for &d in distances {
            validate_distance(d)?;
        }
        params.validate()?;
        let mut ds = distances.to_vec();
        ds.sort_unstable();
        ds.dedup();
        let per_d: Vec<Vec<Candidate>> = ds
            .par_iter()
            .map(|&d| match family.at_distance(d, p)? {
                Some(model) => distance_candidates(&model, d, p, params, min_events),
                None => Ok(Vec::new()),
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            candidates: per_d.into_iter().flatten().collect(),
        })
    }

    /// Sorted by distance, then stopping time.
    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    /// Cheapest candidate covering `n_t`; ties go to the smaller `d`, then the smaller `M`.
    pub fn min_cost(&self, n_t: u64) -> Result<MinCostResult> {
        if n_t == 0 {
            return Err(Error::domain("n_T must be at least 1"));
        }
        let mut best: Option<&Candidate> = None;
        for c in self.candidates.iter().filter(|c| c.range.covers(n_t)) {
            if best.is_none_or(|b| c.per_gate_cost < b.per_gate_cost) {
                best = Some(c);
            }
        }
        Ok(match best {
            Some(c) => MinCostResult {
                n_t,
                cost: Some(c.per_gate_cost * u128::from(n_t)),
                distance: Some(c.distance()),
                stopping_time_ns: Some(c.stopping_time_ns()),
            },
            None => MinCostResult {
                n_t,
                cost: None,
                distance: None,
                stopping_time_ns: None,
            },
        })
    }

    pub fn min_cost_grid(&self, n_ts: &[u64]) -> Result<Vec<MinCostResult>> {
        n_ts.par_iter().map(|&n| self.min_cost(n)).collect()
    }
}

/// Minimum spacetime cost of one workload.
pub fn min_spacetime_cost(
    family: &DecoderFamily,
    p: f64,
    n_t: u64,
    distances: &[u32],
    params: &RangeParams,
    min_events: u64,
) -> Result<MinCostResult> {
    CostTable::build(family, p, distances, params, min_events)?.min_cost(n_t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub n_t: u64,
    pub cost_a: Option<u128>,
    pub cost_b: Option<u128>,
    /// `cost_a / cost_b`; `None` when either side is infeasible.
    pub ratio: Option<f64>,
}

/// Minimum costs of two decoders over a workload grid.
pub fn compare_decoders(
    a: &DecoderFamily,
    b: &DecoderFamily,
    p: f64,
    n_ts: &[u64],
    distances: &[u32],
    params: &RangeParams,
    min_events: u64,
) -> Result<Vec<ComparisonRow>> {
    if n_ts.is_empty() {
        return Err(Error::domain("n_T grid must be nonempty"));
    }
    let ta = CostTable::build(a, p, distances, params, min_events)?;
    let tb = CostTable::build(b, p, distances, params, min_events)?;
    let ra = ta.min_cost_grid(n_ts)?;
    let rb = tb.min_cost_grid(n_ts)?;
    Ok(ra
        .into_iter()
        .zip(rb)
        .map(|(x, y)| ComparisonRow {
            n_t: x.n_t,
            cost_a: x.cost,
            cost_b: y.cost,
            ratio: match (x.cost, y.cost) {
                (Some(ca), Some(cb)) => Some(ca as f64 / cb as f64),
                _ => None,
            },
        })
        .collect())
}

/// Roughly `per_decade` points per decade from `10^lo` to `10^hi`, rounded to integers
/// and deduplicated.
pub fn log_grid(lo_exp: u32, hi_exp: u32, per_decade: u32) -> Vec<u64> {
    let steps = (hi_exp.saturating_sub(lo_exp)) * per_decade;
    let mut out: Vec<u64> = (0..=steps)
        .map(|i| {
            10f64
                .powf(f64::from(lo_exp) + f64::from(i) / f64::from(per_decade))
                .round() as u64
        })
        .collect();
    out.dedup();
    out
}

pub fn odd_distances(lo: u32, hi: u32) -> Vec<u32> {
    (lo.max(3)..=hi).filter(|d| d % 2 == 1).collect()
}
