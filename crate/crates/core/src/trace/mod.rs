//! Decoder runtime traces and the empirical runtime distributions built from them.
//!
//! Runtimes are integer nanoseconds. A trace is either a list of per-shot records or a
//! pre-aggregated histogram; both present the same shot-level view through
//! [`RuntimeTrace::bins`], so 10⁹-shot traces never need to be materialized.

mod parse;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use parse::{load_metadata, parse_trace, parse_trace_str, MetadataOverrides, TraceFormat};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMetadata {
    pub distance: u32,
    pub physical_error_rate: f64,
    pub shots: u64,
    /// Duration of one syndrome-extraction cycle.
    pub sec_cycle_ns: u64,
}

impl TraceMetadata {
    pub fn validate(&self) -> Result<()> {
        validate_distance(self.distance)?;
        validate_probability_open("physical_error_rate", self.physical_error_rate)?;
        if self.shots == 0 {
            return Err(Error::domain("shots must be at least 1"));
        }
        if self.sec_cycle_ns == 0 {
            return Err(Error::domain("sec_cycle_ns must be at least 1"));
        }
        Ok(())
    }
}

pub(crate) fn validate_distance(d: u32) -> Result<()> {
    if d < 3 || d.is_multiple_of(2) {
        return Err(Error::domain(format!(
            "code distance must be an odd integer >= 3, got {d}"
        )));
    }
    Ok(())
}

pub(crate) fn validate_probability_open(name: &str, p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("{name} must lie in (0, 1), got {p}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShotRecord {
    pub runtime_ns: u64,
    /// Decoding failure of the uninterrupted decoder.
    pub failed: bool,
}

/// Shots sharing one runtime value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub runtime_ns: u64,
    pub count_total: u64,
    pub count_failed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceRecords {
    PerShot(Vec<ShotRecord>),
    /// Sorted by runtime, one bin per distinct runtime.
    Histogram(Vec<HistogramBin>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeTrace {
    metadata: TraceMetadata,
    records: TraceRecords,
}

impl RuntimeTrace {
    pub fn from_records(metadata: TraceMetadata, records: Vec<ShotRecord>) -> Result<Self> {
        metadata.validate()?;
        if records.len() as u64 != metadata.shots {
            return Err(Error::Integrity(format!(
                "metadata declares {} shots but trace holds {} records",
                metadata.shots,
                records.len()
            )));
        }
        Ok(Self {
            metadata,
            records: TraceRecords::PerShot(records),
        })
    }

    /// Builds a histogram-backed trace. Bins may come in any order; duplicate runtimes
    /// are merged by summation.
    pub fn from_histogram(
        metadata: TraceMetadata,
        bins: impl IntoIterator<Item = HistogramBin>,
    ) -> Result<Self> {
        metadata.validate()?;
        let mut merged: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
        for bin in bins {
            if bin.count_failed > bin.count_total {
                return Err(Error::Integrity(format!(
                    "runtime {} ns has count_failed {} > count_total {}",
                    bin.runtime_ns, bin.count_failed, bin.count_total
                )));
            }
            let entry = merged.entry(bin.runtime_ns).or_default();
            entry.0 += bin.count_total;
            entry.1 += bin.count_failed;
        }
        let bins: Vec<HistogramBin> = merged
            .into_iter()
            .filter(|(_, (total, _))| *total > 0)
            .map(|(runtime_ns, (count_total, count_failed))| HistogramBin {
                runtime_ns,
                count_total,
                count_failed,
            })
            .collect();
        let total: u64 = bins.iter().map(|b| b.count_total).sum();
        if total != metadata.shots {
            return Err(Error::Integrity(format!(
                "metadata declares {} shots but histogram counts sum to {}",
                metadata.shots, total
            )));
        }
        Ok(Self {
            metadata,
            records: TraceRecords::Histogram(bins),
        })
    }

    pub fn metadata(&self) -> &TraceMetadata {
        &self.metadata
    }

    pub fn records(&self) -> &TraceRecords {
        &self.records
    }

    pub fn shots(&self) -> u64 {
        self.metadata.shots
    }

    pub fn failure_count(&self) -> u64 {
        match &self.records {
            TraceRecords::PerShot(r) => r.iter().filter(|s| s.failed).count() as u64,
            TraceRecords::Histogram(b) => b.iter().map(|b| b.count_failed).sum(),
        }
    }

    /// Shots as `(runtime_ns, count, failed_count)` groups, in storage order.
    pub fn bins(&self) -> Box<dyn Iterator<Item = HistogramBin> + '_> {
        match &self.records {
            TraceRecords::PerShot(r) => Box::new(r.iter().map(|s| HistogramBin {
                runtime_ns: s.runtime_ns,
                count_total: 1,
                count_failed: u64::from(s.failed),
            })),
            TraceRecords::Histogram(b) => Box::new(b.iter().copied()),
        }
    }
}

/// One step of the empirical runtime CDF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionPoint {
    pub runtime_ns: u64,
    /// Shots with runtime `<= runtime_ns`.
    pub cum_total: u64,
    /// Failed shots with runtime `<= runtime_ns`.
    pub cum_failed: u64,
}

/// Step-function runtime distribution with cumulative failure counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRuntimeDistribution {
    points: Vec<DistributionPoint>,
    shots: u64,
    max_runtime_ns: u64,
}

impl EmpiricalRuntimeDistribution {
    /// Builds a distribution from histogram bins in any order.
    pub fn from_bins(bins: impl IntoIterator<Item = HistogramBin>) -> Result<Self> {
        let mut merged: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
        for bin in bins {
            if bin.count_failed > bin.count_total {
                return Err(Error::Integrity(format!(
                    "runtime {} ns has more failures than shots",
                    bin.runtime_ns
                )));
            }
            if bin.count_total == 0 {
                continue;
            }
            let entry = merged.entry(bin.runtime_ns).or_default();
            entry.0 += bin.count_total;
            entry.1 += bin.count_failed;
        }
        if merged.is_empty() {
            return Err(Error::domain(
                "cannot build a distribution from an empty trace",
            ));
        }
        let mut points = Vec::with_capacity(merged.len());
        let (mut total, mut failed) = (0u64, 0u64);
        for (runtime_ns, (t, f)) in merged {
            total += t;
            failed += f;
            points.push(DistributionPoint {
                runtime_ns,
                cum_total: total,
                cum_failed: failed,
            });
        }
        let max_runtime_ns = points.last().map(|p| p.runtime_ns).unwrap_or(0);
        Ok(Self {
            points,
            shots: total,
            max_runtime_ns,
        })
    }

    pub fn points(&self) -> &[DistributionPoint] {
        &self.points
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    /// Largest observed runtime (t_max).
    pub fn max_runtime_ns(&self) -> u64 {
        self.max_runtime_ns
    }

    pub fn min_runtime_ns(&self) -> u64 {
        self.points[0].runtime_ns
    }

    /// Failures of the uninterrupted decoder across all shots.
    pub fn total_failed(&self) -> u64 {
        self.points.last().map(|p| p.cum_failed).unwrap_or(0)
    }

    pub fn decode_failure_rate(&self) -> f64 {
        self.total_failed() as f64 / self.shots as f64
    }

    /// Last point with `runtime_ns <= m_ns`.
    fn point_at_or_below(&self, m_ns: u64) -> Option<&DistributionPoint> {
        let idx = self.points.partition_point(|p| p.runtime_ns <= m_ns);
        idx.checked_sub(1).map(|i| &self.points[i])
    }

    pub fn count_total_at_or_below(&self, m_ns: u64) -> u64 {
        self.point_at_or_below(m_ns).map_or(0, |p| p.cum_total)
    }

    pub fn count_failed_at_or_below(&self, m_ns: u64) -> u64 {
        self.point_at_or_below(m_ns).map_or(0, |p| p.cum_failed)
    }

    /// Shots that do not complete within `m_ns`.
    pub fn count_above(&self, m_ns: u64) -> u64 {
        self.shots - self.count_total_at_or_below(m_ns)
    }

    /// `P(t > m_ns)`.
    pub fn survival(&self, m_ns: u64) -> f64 {
        self.count_above(m_ns) as f64 / self.shots as f64
    }

    /// Lower empirical quantile: the smallest runtime whose CDF reaches `q`.
    pub fn percentile(&self, q: f64) -> Result<u64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::domain(format!(
                "quantile must lie in [0, 1], got {q}"
            )));
        }
        let shots = self.shots as f64;
        let idx = self
            .points
            .partition_point(|p| (p.cum_total as f64 / shots) < q);
        Ok(self.points[idx.min(self.points.len() - 1)].runtime_ns)
    }

    pub fn mean_ns(&self) -> f64 {
        let mut prev = 0u64;
        let mut sum = 0.0;
        for p in &self.points {
            sum += (p.cum_total - prev) as f64 * p.runtime_ns as f64;
            prev = p.cum_total;
        }
        sum / self.shots as f64
    }

    /// Bessel-corrected standard deviation; `None` for a single shot.
    pub fn std_dev_ns(&self) -> Option<f64> {
        if self.shots < 2 {
            return None;
        }
        let mean = self.mean_ns();
        let mut prev = 0u64;
        let mut ss = 0.0;
        for p in &self.points {
            let dev = p.runtime_ns as f64 - mean;
            ss += (p.cum_total - prev) as f64 * dev * dev;
            prev = p.cum_total;
        }
        Some((ss / (self.shots - 1) as f64).sqrt())
    }

    /// Per-runtime probability masses.
    pub fn masses(&self) -> Vec<(u64, f64)> {
        let shots = self.shots as f64;
        let mut prev = 0u64;
        self.points
            .iter()
            .map(|p| {
                let m = (p.cum_total - prev) as f64 / shots;
                prev = p.cum_total;
                (p.runtime_ns, m)
            })
            .collect()
    }

    /// Distribution conditioned on `t <= m_ns`; counts are kept, so masses are
    /// renormalized by the surviving shot count.
    pub(crate) fn truncated(&self, m_ns: u64) -> Option<Self> {
        let idx = self.points.partition_point(|p| p.runtime_ns <= m_ns);
        if idx == 0 {
            return None;
        }
        let points = self.points[..idx].to_vec();
        let last = points[idx - 1];
        Some(Self {
            points,
            shots: last.cum_total,
            max_runtime_ns: last.runtime_ns,
        })
    }

    /// Draws a runtime given a uniform rank in `[0, shots)`.
    pub(crate) fn runtime_at_rank(&self, rank: u64) -> u64 {
        let idx = self.points.partition_point(|p| p.cum_total <= rank);
        self.points[idx.min(self.points.len() - 1)].runtime_ns
    }
}

pub fn build_distribution(trace: &RuntimeTrace) -> Result<EmpiricalRuntimeDistribution> {
    EmpiricalRuntimeDistribution::from_bins(trace.bins())
}
