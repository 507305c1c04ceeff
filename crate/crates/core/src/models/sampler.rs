use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Binomial, Distribution};
use rayon::prelude::*;

use super::{FailureModel, RuntimeModel};
use crate::error::{Error, Result};
use crate::trace::{HistogramBin, RuntimeTrace, ShotRecord, TraceMetadata};

/// Shots per independent RNG substream.
pub const SAMPLER_CHUNK: u64 = 1 << 16;

enum RuntimeDraw<'a> {
    Zero,
    Binomial(Binomial, u64),
    Empirical(&'a crate::trace::EmpiricalRuntimeDistribution),
}

impl RuntimeDraw<'_> {
    fn draw(&self, rng: &mut ChaCha8Rng) -> u64 {
        match self {
            RuntimeDraw::Zero => 0,
            RuntimeDraw::Binomial(b, unit) => b.sample(rng) * unit,
            RuntimeDraw::Empirical(dist) => dist.runtime_at_rank(rng.random_range(0..dist.shots())),
        }
    }
}

struct Sampler<'a> {
    runtime: RuntimeDraw<'a>,
    failure: Bernoulli,
    seed: u64,
}

impl<'a> Sampler<'a> {
    fn new(
        runtime: &'a RuntimeModel,
        failure: &FailureModel,
        d: u32,
        p: f64,
        seed: u64,
    ) -> Result<Self> {
        runtime.validate()?;
        let draw = match runtime {
            RuntimeModel::Instantaneous => RuntimeDraw::Zero,
            RuntimeModel::Binomial { n, q, unit_ns } => RuntimeDraw::Binomial(
                Binomial::new(*n, *q)
                    .map_err(|e| Error::domain(format!("binomial sampler: {e}")))?,
                *unit_ns,
            ),
            RuntimeModel::Empirical(dist) => {
                if dist.shots() == 0 {
                    return Err(Error::domain(
                        "empirical runtime model has an empty distribution",
                    ));
                }
                RuntimeDraw::Empirical(dist)
            }
        };
        let rate = failure.failure_rate(d, p)?;
        let failure =
            Bernoulli::new(rate).map_err(|e| Error::domain(format!("failure sampler: {e}")))?;
        Ok(Self {
            runtime: draw,
            failure,
            seed,
        })
    }

    /// Calls `f` for each shot of chunk `index`, in order.
    fn for_each_in_chunk(&self, index: u64, len: u64, mut f: impl FnMut(ShotRecord)) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        for _ in 0..len {
            let runtime_ns = self.runtime.draw(&mut rng);
            let failed = self.failure.sample(&mut rng);
            f(ShotRecord { runtime_ns, failed });
        }
    }
}

fn chunks(shots: u64) -> impl ParallelIterator<Item = (u64, u64)> {
    let n = shots.div_ceil(SAMPLER_CHUNK);
    (0..n).into_par_iter().map(move |i| {
        let start = i * SAMPLER_CHUNK;
        (i, SAMPLER_CHUNK.min(shots - start))
    })
}

fn metadata(d: u32, p: f64, shots: u64, sec_cycle_ns: u64) -> Result<TraceMetadata> {
    let meta = TraceMetadata {
        distance: d,
        physical_error_rate: p,
        shots,
        sec_cycle_ns,
    };
    meta.validate()?;
    Ok(meta)
}

/// Draws a per-shot trace. Runtime and failure flag are independent; the result is a
/// pure function of the arguments regardless of thread count.
pub fn sample_trace(
    runtime: &RuntimeModel,
    failure: &FailureModel,
    d: u32,
    p: f64,
    shots: u64,
    sec_cycle_ns: u64,
    seed: u64,
) -> Result<RuntimeTrace> {
    let meta = metadata(d, p, shots, sec_cycle_ns)?;
    let sampler = Sampler::new(runtime, failure, d, p, seed)?;
    let parts: Vec<Vec<ShotRecord>> = chunks(shots)
        .map(|(i, len)| {
            let mut out = Vec::with_capacity(len as usize);
            sampler.for_each_in_chunk(i, len, |r| out.push(r));
            out
        })
        .collect();
    RuntimeTrace::from_records(meta, parts.into_iter().flatten().collect())
}

/// Same draws as [`sample_trace`], aggregated into a histogram as they are generated.
pub fn sample_trace_histogram(
    runtime: &RuntimeModel,
    failure: &FailureModel,
    d: u32,
    p: f64,
    shots: u64,
    sec_cycle_ns: u64,
    seed: u64,
) -> Result<RuntimeTrace> {
    let meta = metadata(d, p, shots, sec_cycle_ns)?;
    let sampler = Sampler::new(runtime, failure, d, p, seed)?;
    let merged = chunks(shots)
        .map(|(i, len)| {
            let mut hist: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
            sampler.for_each_in_chunk(i, len, |r| {
                let e = hist.entry(r.runtime_ns).or_default();
                e.0 += 1;
                e.1 += u64::from(r.failed);
            });
            hist
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, (t, f)) in b {
                let e = a.entry(k).or_default();
                e.0 += t;
                e.1 += f;
            }
            a
        });
    RuntimeTrace::from_histogram(
        meta,
        merged
            .into_iter()
            .map(|(runtime_ns, (count_total, count_failed))| HistogramBin {
                runtime_ns,
                count_total,
                count_failed,
            }),
    )
}
