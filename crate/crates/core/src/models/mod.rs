//! Failure-rate and runtime models for decoders, plus a seeded synthetic trace sampler.

mod binomial;
mod config;
mod sampler;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::{Error, Result};
use crate::trace::{validate_distance, validate_probability_open, EmpiricalRuntimeDistribution};

pub use binomial::{binomial_survival, binomial_upper_quantile};
pub use config::{load_decoder_config, DecoderConfig, FailureConfig, RuntimeConfig};
pub use sampler::{sample_trace, sample_trace_histogram, SAMPLER_CHUNK};

/// Nanoseconds per microsecond, the runtime unit of the built-in binomial decoders.
pub const MICROSECOND_NS: u64 = 1_000;

/// Decoding failure rate `p_fail(d, p)` of the uninterrupted decoder.
#[derive(Debug, Clone, PartialEq)]
pub enum FailureModel {
    /// `A (B p)^((d+1)/2)`
    Heuristic { a: f64, b: f64 },
    /// A decoder of accuracy `alpha` fails at `base / alpha`.
    AccuracyScaled {
        base: Box<FailureModel>,
        accuracy: f64,
    },
    /// Directly measured rate, with the event count backing it.
    Empirical { rate: f64, failure_events: u64 },
}

static ABOVE_THRESHOLD_WARNED: AtomicBool = AtomicBool::new(false);

impl FailureModel {
    /// The MWPM heuristic `0.1 (100 p)^((d+1)/2)`.
    pub fn heuristic() -> Self {
        FailureModel::Heuristic { a: 0.1, b: 100.0 }
    }

    /// Instantaneous-decoder fit `0.04 (0.1)^((d+1)/2)` at `p = 10⁻³`, written in
    /// heuristic form so it scales with `p`.
    pub fn pymatching_fit() -> Self {
        FailureModel::Heuristic { a: 0.04, b: 100.0 }
    }

    pub fn accuracy_scaled(base: FailureModel, accuracy: f64) -> Result<Self> {
        let model = FailureModel::AccuracyScaled {
            base: Box::new(base),
            accuracy,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FailureModel::Heuristic { a, b } => {
                if !(*a > 0.0 && a.is_finite() && *b > 0.0 && b.is_finite()) {
                    return Err(Error::domain(format!(
                        "heuristic coefficients must be positive, got A={a} B={b}"
                    )));
                }
            }
            FailureModel::AccuracyScaled { base, accuracy } => {
                if !(*accuracy > 0.0 && *accuracy <= 1.0) {
                    return Err(Error::domain(format!(
                        "accuracy must lie in (0, 1], got {accuracy}"
                    )));
                }
                base.validate()?;
            }
            FailureModel::Empirical { rate, .. } => {
                if !(0.0..=1.0).contains(rate) {
                    return Err(Error::domain(format!(
                        "empirical failure rate must lie in [0, 1], got {rate}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Failure rate at distance `d` and physical error rate `p`, clamped to 1.
    pub fn failure_rate(&self, d: u32, p: f64) -> Result<f64> {
        validate_distance(d)?;
        validate_probability_open("physical error rate", p)?;
        let rate = match self {
            FailureModel::Heuristic { a, b } => {
                if p >= 1e-2 && !ABOVE_THRESHOLD_WARNED.swap(true, Ordering::Relaxed) {
                    log::warn!("p = {p} is at or above threshold; the heuristic failure rate is not valid there");
                }
                a * (b * p).powf(f64::from(d + 1) / 2.0)
            }
            FailureModel::AccuracyScaled { base, accuracy } => base.failure_rate(d, p)? / accuracy,
            FailureModel::Empirical { rate, .. } => *rate,
        };
        Ok(rate.min(1.0))
    }

    /// Event count behind the estimate, when the model is measured.
    pub fn failure_events(&self) -> Option<u64> {
        match self {
            FailureModel::Empirical { failure_events, .. } => Some(*failure_events),
            _ => None,
        }
    }
}

/// Law of the decoder runtime.
#[derive(Debug, Clone, PartialEq)]
pub enum RuntimeModel {
    /// `T ~ Binomial(n, q)` in units of `unit_ns`.
    Binomial {
        n: u64,
        q: f64,
        unit_ns: u64,
    },
    Instantaneous,
    Empirical(EmpiricalRuntimeDistribution),
}

impl RuntimeModel {
    pub fn binomial(n: u64, q: f64, unit_ns: u64) -> Result<Self> {
        let model = RuntimeModel::Binomial { n, q, unit_ns };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if let RuntimeModel::Binomial { n, q, unit_ns } = self {
            if *n == 0 {
                return Err(Error::domain("binomial N must be at least 1"));
            }
            if !(*q > 0.0 && *q < 1.0) {
                return Err(Error::domain(format!(
                    "binomial Q must lie in (0, 1), got {q}"
                )));
            }
            if *unit_ns == 0 {
                return Err(Error::domain("binomial unit_ns must be at least 1"));
            }
        }
        Ok(())
    }

    /// `P(t > m_ns)`.
    pub fn survival(&self, m_ns: u64) -> f64 {
        match self {
            RuntimeModel::Binomial { n, q, unit_ns } => binomial_survival(*n, *q, m_ns / unit_ns),
            RuntimeModel::Instantaneous => 0.0,
            RuntimeModel::Empirical(dist) => dist.survival(m_ns),
        }
    }

    /// Largest runtime with nonzero probability (t_max).
    pub fn max_runtime_ns(&self) -> u64 {
        match self {
            RuntimeModel::Binomial { n, unit_ns, .. } => n.saturating_mul(*unit_ns),
            RuntimeModel::Instantaneous => 0,
            RuntimeModel::Empirical(dist) => dist.max_runtime_ns(),
        }
    }

    pub fn mean_ns(&self) -> f64 {
        match self {
            RuntimeModel::Binomial { n, q, unit_ns } => *n as f64 * q * *unit_ns as f64,
            RuntimeModel::Instantaneous => 0.0,
            RuntimeModel::Empirical(dist) => dist.mean_ns(),
        }
    }
}

/// A decoder at one code distance: how long it runs and how often it fails.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderModel {
    pub name: String,
    pub runtime: RuntimeModel,
    pub failure: FailureModel,
}

/// The quadratic- and linear-time binomial decoders of the linear-vs-quadratic comparison.
///
/// Quadratic: mean `p d³` µs, max `d⁶` µs, heuristic failure rate. Linear: max
/// `round(d³/4)` µs with `Q` re-derived so the mean stays `p d³ / 4` µs, failing at
/// `4/3` of the heuristic.
pub fn make_reference_decoders(d: u32, p: f64) -> Result<(DecoderModel, DecoderModel)> {
    validate_distance(d)?;
    validate_probability_open("physical error rate", p)?;
    let d3 = f64::from(d).powi(3);

    let quad_n = u64::from(d).pow(6);
    let quad_q = p / d3;
    let quadratic = DecoderModel {
        name: "quadratic".into(),
        runtime: RuntimeModel::binomial(quad_n, quad_q, MICROSECOND_NS)?,
        failure: FailureModel::heuristic(),
    };

    let lin_n = (0.25 * d3).round() as u64;
    let lin_q = 0.25 * p * d3 / lin_n as f64;
    if !(lin_q > 0.0 && lin_q < 1.0) {
        return Err(Error::domain(format!(
            "linear decoder Q = {lin_q} outside (0, 1) at d={d}, p={p}"
        )));
    }
    let linear = DecoderModel {
        name: "linear".into(),
        runtime: RuntimeModel::binomial(lin_n, lin_q, MICROSECOND_NS)?,
        failure: FailureModel::accuracy_scaled(FailureModel::heuristic(), 0.75)?,
    };
    Ok((quadratic, linear))
}

/// A decoder across code distances.
#[derive(Debug, Clone, PartialEq)]
pub enum DecoderFamily {
    /// Built-in quadratic-time binomial decoder.
    Quadratic,
    /// Built-in linear-time binomial decoder.
    Linear,
    /// No decoding delay, heuristic failure rate.
    Instantaneous,
    /// The same runtime law at every distance; failure evaluated per distance.
    Fixed(DecoderModel),
    /// Models available only at specific distances, e.g. one measured trace per distance.
    PerDistance {
        name: String,
        models: BTreeMap<u32, DecoderModel>,
    },
}

impl DecoderFamily {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "quadratic" => Some(DecoderFamily::Quadratic),
            "linear" => Some(DecoderFamily::Linear),
            "instantaneous" => Some(DecoderFamily::Instantaneous),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            DecoderFamily::Quadratic => "quadratic",
            DecoderFamily::Linear => "linear",
            DecoderFamily::Instantaneous => "instantaneous",
            DecoderFamily::Fixed(m) => &m.name,
            DecoderFamily::PerDistance { name, .. } => name,
        }
    }

    /// The decoder at distance `d`, or `None` when the family has no model there.
    pub fn at_distance(&self, d: u32, p: f64) -> Result<Option<DecoderModel>> {
        Ok(match self {
            DecoderFamily::Quadratic => Some(make_reference_decoders(d, p)?.0),
            DecoderFamily::Linear => Some(make_reference_decoders(d, p)?.1),
            DecoderFamily::Instantaneous => Some(DecoderModel {
                name: "instantaneous".into(),
                runtime: RuntimeModel::Instantaneous,
                failure: FailureModel::heuristic(),
            }),
            DecoderFamily::Fixed(m) => Some(m.clone()),
            DecoderFamily::PerDistance { models, .. } => models.get(&d).cloned(),
        })
    }
}
