use std::path::{Path, PathBuf};

use super::args::{Command, CostUnit, Layout, TraceArgs, WorkloadArgs};
use super::output::{emit, write_atomic, Cell, Table};
use super::{CliError, CliResult, RunConfig};
use crate::cost::{cost_in_qubit_seconds, log_grid, odd_distances, CostTable, MinCostResult};
use crate::error::{Error, Result};
use crate::models::{
    load_decoder_config, sample_trace, sample_trace_histogram, DecoderFamily, FailureModel,
};
use crate::range::{
    accuracy_surface, range_curve, range_optimized_stopping_time, required_distance_with,
};
use crate::stopping::sweep;
use crate::trace::{
    build_distribution, load_metadata, parse_trace, EmpiricalRuntimeDistribution,
    MetadataOverrides, RuntimeTrace, TraceRecords,
};

const PERCENTILES: [(&str, f64); 5] = [
    ("p50_ns", 0.5),
    ("p90_ns", 0.9),
    ("p99_ns", 0.99),
    ("p99_9_ns", 0.999),
    ("p100_ns", 1.0),
];

pub(super) fn dispatch(command: Command, cfg: &RunConfig) -> CliResult<()> {
    match command {
        Command::TraceStats { trace } => trace_stats(&trace, cfg),
        Command::Range { trace } => range(&trace, cfg),
        Command::Stop { trace, m_ns } => stop(&trace, &m_ns, cfg),
        Command::Surface {
            d,
            p,
            alpha,
            m_cycles,
            a,
            b,
        } => surface(d, p, alpha, m_cycles, a, b, cfg),
        Command::Mincost { decoder, workload } => mincost(&decoder, &workload, cfg),
        Command::Compare {
            decoder_a,
            decoder_b,
            workload,
        } => compare(&decoder_a, &decoder_b, &workload, cfg),
        Command::Synth {
            model,
            d,
            p,
            shots,
            layout,
        } => synth(&model, d, p, shots, layout, cfg),
        Command::RequiredDistance {
            p,
            n_t,
            delay_ns,
            decoder,
            d_max,
            a,
            b,
        } => required_distance(p, &n_t, delay_ns, decoder.as_deref(), d_max, a, b, cfg),
    }
}

fn load_trace(args: &TraceArgs) -> Result<RuntimeTrace> {
    std::fs::metadata(&args.trace).map_err(|e| Error::io(&args.trace, e))?;
    let sidecar = match &args.meta {
        Some(p) => Some(p.clone()),
        None => Some(args.trace.with_extension("json")).filter(|p| p.is_file()),
    };
    let overrides = MetadataOverrides {
        distance: args.distance,
        physical_error_rate: args.physical_error_rate,
        shots: args.shots,
        sec_cycle_ns: args.sec_cycle_ns,
    };
    let meta = load_metadata(sidecar.as_deref(), &overrides)?;
    parse_trace(&args.trace, meta)
}

fn load_distribution(args: &TraceArgs) -> Result<(RuntimeTrace, EmpiricalRuntimeDistribution)> {
    let trace = load_trace(args)?;
    let dist = build_distribution(&trace)?;
    Ok((trace, dist))
}

fn load_family(name: &str) -> Result<DecoderFamily> {
    match DecoderFamily::from_name(name) {
        Some(f) => Ok(f),
        None => load_decoder_config(Path::new(name)),
    }
}

fn write_table(table: &Table, cfg: &RunConfig) -> Result<()> {
    emit(cfg.out.as_deref(), &table.render(cfg.format))
}

fn trace_stats(args: &TraceArgs, cfg: &RunConfig) -> CliResult<()> {
    let (trace, dist) = load_distribution(args)?;
    let std = dist.std_dev_ns().unwrap_or_else(|| {
        log::warn!(
            "{}: a single shot has no spread; reporting std 0",
            args.trace.display()
        );
        0.0
    });
    let mut columns = vec!["shots", "mean_ns", "std_ns", "t_max_ns"];
    columns.extend(PERCENTILES.iter().map(|(name, _)| *name));
    columns.extend(["failure_rate", "failure_events"]);
    let mut row = vec![
        Cell::from(trace.shots()),
        Cell::from(dist.mean_ns()),
        Cell::from(std),
        Cell::from(dist.max_runtime_ns()),
    ];
    for (_, q) in PERCENTILES {
        row.push(Cell::from(dist.percentile(q)?));
    }
    row.push(Cell::from(dist.decode_failure_rate()));
    row.push(Cell::from(dist.total_failed()));
    let mut table = Table::new(columns);
    table.push(row);
    write_table(&table, cfg)?;
    Ok(())
}

fn range_cell(n_t: u64, saturated: bool) -> Cell {
    if saturated {
        Cell::AtLeast(n_t)
    } else {
        Cell::from(n_t)
    }
}

fn range(args: &TraceArgs, cfg: &RunConfig) -> CliResult<()> {
    let (trace, dist) = load_distribution(args)?;
    let meta = trace.metadata();
    let params = cfg.range_params(Some(meta.sec_cycle_ns));
    let curve = range_curve(&dist, meta.distance, &params, cfg.min_events)?;
    if curve.is_empty() {
        return Err(CliError::Infeasible(format!(
            "{}: no stopping time has at least {} failure events; collect more shots or lower --min-events",
            args.trace.display(),
            cfg.min_events
        )));
    }
    let mut table = Table::new(vec!["M_ns", "M_cycles", "exact_rate", "range"]);
    for r in &curve {
        table.push(vec![
            r.stopping_time_ns.into(),
            r.stopping_cycles.into(),
            r.failure_rate_used.into(),
            range_cell(r.n_t, r.saturated),
        ]);
    }
    write_table(&table, cfg)?;
    let best = range_optimized_stopping_time(&dist, meta.distance, &params, cfg.min_events)?;
    eprintln!(
        "range-optimized stopping time: M = {} ns ({} cycles), range = {}",
        best.stopping_time_ns,
        best.stopping_cycles,
        range_cell(best.n_t, best.saturated)
    );
    Ok(())
}

fn stop(args: &TraceArgs, extra: &[u64], cfg: &RunConfig) -> CliResult<()> {
    let (_, dist) = load_distribution(args)?;
    let mut table = Table::new(vec![
        "M_ns",
        "timeout_prob",
        "exact_rate",
        "upper_bound",
        "lower_bound",
        "failure_events",
    ]);
    for s in sweep(&dist, extra) {
        table.push(vec![
            s.stopping_time_ns.into(),
            s.timeout_probability.into(),
            s.exact_failure_rate.into(),
            s.upper_bound_rate.into(),
            s.lower_bound_rate.into(),
            s.failure_events.into(),
        ]);
    }
    write_table(&table, cfg)?;
    Ok(())
}

fn surface(
    d: u32,
    p: f64,
    alpha: Vec<f64>,
    m_cycles: Vec<u64>,
    a: f64,
    b: f64,
    cfg: &RunConfig,
) -> CliResult<()> {
    let alphas = if alpha.is_empty() {
        (1..=20).map(|i| f64::from(i) / 20.0).collect()
    } else {
        alpha
    };
    let ms = if m_cycles.is_empty() {
        (0..=20).map(|i| i * 50).collect()
    } else {
        m_cycles
    };
    let base = FailureModel::Heuristic { a, b };
    base.validate()?;
    let points = accuracy_surface(d, p, &base, &alphas, &ms, &cfg.range_params(None))?;
    let mut table = Table::new(vec!["alpha", "M_cycles", "range"]);
    for s in points {
        table.push(vec![
            s.alpha.into(),
            s.m_cycles.into(),
            range_cell(s.range, s.saturated),
        ]);
    }
    write_table(&table, cfg)?;
    Ok(())
}

struct Workload {
    n_ts: Vec<u64>,
    distances: Vec<u32>,
}

fn workload(w: &WorkloadArgs) -> Result<Workload> {
    let n_ts = if !w.n_t.is_empty() {
        w.n_t.clone()
    } else {
        let grid = w.n_t_grid.as_deref().unwrap_or("0:12:20");
        let (lo, hi, per) = super::parse_grid(grid).map_err(Error::Config)?;
        log_grid(lo, hi, per)
    };
    if n_ts.contains(&0) {
        return Err(Error::Domain("n_T must be at least 1".into()));
    }
    let distances = odd_distances(w.d_min, w.d_max);
    if distances.is_empty() {
        return Err(Error::Domain(format!(
            "no odd distance >= 3 in [{}, {}]",
            w.d_min, w.d_max
        )));
    }
    Ok(Workload { n_ts, distances })
}

fn cost_cell(cost: Option<u128>, unit: CostUnit, t_sec_ns: u64) -> Cell {
    match (cost, unit) {
        (None, _) => Cell::Inf,
        (Some(c), CostUnit::QubitCycles) => Cell::from(c),
        (Some(c), CostUnit::QubitSeconds) => Cell::from(cost_in_qubit_seconds(c, t_sec_ns)),
    }
}

fn mincost(decoder: &str, w: &WorkloadArgs, cfg: &RunConfig) -> CliResult<()> {
    let family = load_family(decoder)?;
    let work = workload(w)?;
    let params = cfg.range_params(None);
    let table = CostTable::build(&family, w.p, &work.distances, &params, cfg.min_events)?;
    let results = table.min_cost_grid(&work.n_ts)?;
    let mut out = Table::new(vec!["n_T", "cost", "distance", "M_ns"]);
    for r in &results {
        out.push(vec![
            r.n_t.into(),
            cost_cell(r.cost, w.cost_unit, params.t_sec_ns),
            r.distance.into(),
            r.stopping_time_ns.into(),
        ]);
    }
    write_table(&out, cfg)?;
    if !results.iter().any(MinCostResult::is_feasible) {
        return Err(CliError::Infeasible(format!(
            "decoder `{}` cannot reach any requested n_T with d <= {}",
            family.name(),
            w.d_max
        )));
    }
    Ok(())
}

fn compare(a: &str, b: &str, w: &WorkloadArgs, cfg: &RunConfig) -> CliResult<()> {
    let fa = load_family(a)?;
    let fb = load_family(b)?;
    let work = workload(w)?;
    let params = cfg.range_params(None);
    let rows = crate::cost::compare_decoders(
        &fa,
        &fb,
        w.p,
        &work.n_ts,
        &work.distances,
        &params,
        cfg.min_events,
    )?;
    let mut out = Table::new(vec!["n_T", "cost_a", "cost_b", "ratio"]);
    for r in &rows {
        out.push(vec![
            r.n_t.into(),
            cost_cell(r.cost_a, w.cost_unit, params.t_sec_ns),
            cost_cell(r.cost_b, w.cost_unit, params.t_sec_ns),
            Cell::or_inf(r.ratio),
        ]);
    }
    write_table(&out, cfg)?;
    if rows.iter().all(|r| r.ratio.is_none()) {
        return Err(CliError::Infeasible(format!(
            "`{}` and `{}` are never both feasible on the requested grid",
            fa.name(),
            fb.name()
        )));
    }
    Ok(())
}

fn trace_csv(trace: &RuntimeTrace) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let res: std::result::Result<(), csv::Error> = (|| {
        match trace.records() {
            TraceRecords::PerShot(records) => {
                w.write_record(["runtime_ns", "failed"])?;
                for r in records {
                    w.write_record([r.runtime_ns.to_string(), u8::from(r.failed).to_string()])?;
                }
            }
            TraceRecords::Histogram(bins) => {
                w.write_record(["runtime_ns", "count_total", "count_failed"])?;
                for b in bins {
                    w.write_record([
                        b.runtime_ns.to_string(),
                        b.count_total.to_string(),
                        b.count_failed.to_string(),
                    ])?;
                }
            }
        }
        Ok(())
    })();
    res.map_err(|e| Error::Integrity(format!("serializing trace: {e}")))?;
    w.into_inner()
        .map_err(|e| Error::Integrity(format!("serializing trace: {e}")))
}

fn synth(
    model: &str,
    d: u32,
    p: f64,
    shots: u64,
    layout: Layout,
    cfg: &RunConfig,
) -> CliResult<()> {
    let out: PathBuf = cfg
        .out
        .clone()
        .ok_or_else(|| Error::Config("synth needs --out for the trace file".into()))?;
    let family = load_family(model)?;
    let decoder = family.at_distance(d, p)?.ok_or_else(|| {
        Error::Config(format!(
            "decoder `{}` has no model at d = {d}",
            family.name()
        ))
    })?;
    let t_sec_ns = cfg.range_params(None).t_sec_ns;
    let sample = match layout {
        Layout::PerShot => sample_trace,
        Layout::Histogram => sample_trace_histogram,
    };
    let trace = sample(
        &decoder.runtime,
        &decoder.failure,
        d,
        p,
        shots,
        t_sec_ns,
        cfg.seed,
    )?;
    let sidecar = out.with_extension("json");
    if sidecar == out {
        return Err(Error::Config(
            "--out must not end in .json; the sidecar uses that name".into(),
        )
        .into());
    }
    write_atomic(&out, &trace_csv(&trace)?)?;
    let mut meta = serde_json::to_string_pretty(trace.metadata())
        .map_err(|e| Error::Integrity(format!("serializing metadata: {e}")))?;
    meta.push('\n');
    write_atomic(&sidecar, meta.as_bytes())?;
    log::info!(
        "wrote {} shots to {} and {}",
        shots,
        out.display(),
        sidecar.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn required_distance(
    p: f64,
    n_ts: &[u64],
    delay_ns: Option<u64>,
    decoder: Option<&str>,
    d_max: u32,
    a: f64,
    b: f64,
    cfg: &RunConfig,
) -> CliResult<()> {
    let failure = FailureModel::Heuristic { a, b };
    failure.validate()?;
    let family = decoder.map(load_family).transpose()?;
    let params = cfg.range_params(None);
    let mut table = Table::new(vec!["n_T", "distance", "no_encoding"]);
    let mut any = false;
    for &n_t in n_ts {
        let r = required_distance_with(n_t, p, &failure, &params, d_max, |d| match &family {
            Some(f) => f
                .at_distance(d, p)?
                .map(|m| m.runtime.max_runtime_ns())
                .ok_or_else(|| {
                    Error::Config(format!("decoder `{}` has no model at d = {d}", f.name()))
                }),
            None => Ok(delay_ns.unwrap_or(0)),
        })?;
        any |= r.distance.is_some();
        table.push(vec![
            n_t.into(),
            r.distance.into(),
            r.no_encoding_suffices.into(),
        ]);
    }
    write_table(&table, cfg)?;
    if !any {
        return Err(CliError::Infeasible(format!(
            "no odd distance up to {d_max} is sufficient"
        )));
    }
    Ok(())
}
