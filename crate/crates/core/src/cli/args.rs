//! Command-line definitions and value parsers.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::output::OutputFormat;

#[derive(Debug, Parser)]
#[command(
    name = "qec-stopping",
    version,
    about = "Decoder stopping-time, range and spacetime-cost analysis"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Allowed logical error probability [default: 0.5]
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// SEC cycle time in ns [default: trace metadata, else 1000]
    #[arg(long, global = true, value_parser = parse_count)]
    pub t_sec_ns: Option<u64>,
    /// Failures a stopping time needs to count as significant [default: 20]
    #[arg(long, global = true, value_parser = parse_count)]
    pub min_events: Option<u64>,
    /// Cycles per T gate as multiples of d: H,S,conditional S,measurement [default: 2,2,2,1]
    #[arg(long, global = true)]
    pub schedule: Option<String>,
    /// Output format [default: csv]
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Output file; stdout when omitted
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// RNG seed [default: 0]
    #[arg(long, global = true, value_parser = parse_count)]
    pub seed: Option<u64>,
    /// JSON file with defaults for the flags above
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Log more (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Args)]
pub struct TraceArgs {
    /// Trace CSV, per-shot or histogram
    #[arg(long)]
    pub trace: PathBuf,
    /// Metadata JSON [default: the trace path with a .json extension, when present]
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Override the code distance
    #[arg(long = "d")]
    pub distance: Option<u32>,
    /// Override the physical error rate
    #[arg(long = "p")]
    pub physical_error_rate: Option<f64>,
    /// Override the shot count
    #[arg(long, value_parser = parse_count)]
    pub shots: Option<u64>,
    /// Override the SEC cycle time recorded with the trace
    #[arg(long, value_parser = parse_count)]
    pub sec_cycle_ns: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct WorkloadArgs {
    /// Physical error rate
    #[arg(long = "p", default_value = "1e-3")]
    pub p: f64,
    /// T-depths, comma separated
    #[arg(long = "nT", value_delimiter = ',', value_parser = parse_count, conflicts_with = "n_t_grid")]
    pub n_t: Vec<u64>,
    /// Log grid LO:HI:PER, PER points per decade from 10^LO to 10^HI [default: 0:12:20]
    #[arg(long = "nT-grid")]
    pub n_t_grid: Option<String>,
    /// Smallest distance considered
    #[arg(long, default_value_t = 3)]
    pub d_min: u32,
    /// Largest distance considered
    #[arg(long, default_value_t = 31)]
    pub d_max: u32,
    /// Cost unit
    #[arg(long, value_enum, default_value_t = CostUnit::QubitCycles)]
    pub cost_unit: CostUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CostUnit {
    QubitCycles,
    QubitSeconds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Layout {
    PerShot,
    Histogram,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Runtime statistics and failure rate of a trace
    TraceStats {
        #[command(flatten)]
        trace: TraceArgs,
    },
    /// Range at every significant stopping time of a trace, and the best one
    Range {
        #[command(flatten)]
        trace: TraceArgs,
    },
    /// Interrupted failure rate and bounds at every candidate stopping time
    Stop {
        #[command(flatten)]
        trace: TraceArgs,
        /// Extra stopping times in ns, comma separated
        #[arg(long = "M", value_delimiter = ',', value_parser = parse_count)]
        m_ns: Vec<u64>,
    },
    /// Range over decoder accuracy and stopping time
    Surface {
        #[arg(long = "d", default_value_t = 15)]
        d: u32,
        #[arg(long = "p", default_value = "1e-3")]
        p: f64,
        /// Accuracies, comma separated [default: 0.05,0.1,...,1]
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        /// Stopping times in SEC cycles, comma separated [default: 0,50,...,1000]
        #[arg(long = "M-cycles", value_delimiter = ',', value_parser = parse_count)]
        m_cycles: Vec<u64>,
        /// Heuristic prefactor of the base failure rate
        #[arg(long = "A", default_value_t = 0.1)]
        a: f64,
        /// Heuristic base of the base failure rate
        #[arg(long = "B", default_value_t = 100.0)]
        b: f64,
    },
    /// Minimum spacetime cost per T-depth
    Mincost {
        /// quadratic, linear, instantaneous, or a decoder JSON file
        #[arg(long)]
        decoder: String,
        #[command(flatten)]
        workload: WorkloadArgs,
    },
    /// Cost ratio of two decoders per T-depth
    Compare {
        #[arg(long)]
        decoder_a: String,
        #[arg(long)]
        decoder_b: String,
        #[command(flatten)]
        workload: WorkloadArgs,
    },
    /// Synthetic trace from a decoder model, with a metadata sidecar
    Synth {
        /// quadratic, linear, instantaneous, or a decoder JSON file
        #[arg(long)]
        model: String,
        #[arg(long = "d")]
        d: u32,
        #[arg(long = "p", default_value = "1e-3")]
        p: f64,
        #[arg(long, value_parser = parse_count)]
        shots: u64,
        #[arg(long, value_enum, default_value_t = Layout::PerShot)]
        layout: Layout,
    },
    /// Smallest distance that keeps a circuit of T-depth nT reliable
    RequiredDistance {
        #[arg(long = "p", default_value = "1e-3")]
        p: f64,
        #[arg(long = "nT", value_delimiter = ',', value_parser = parse_count, required = true)]
        n_t: Vec<u64>,
        /// Decoding delay per T gate in ns
        #[arg(long, value_parser = parse_count, conflicts_with = "decoder")]
        delay_ns: Option<u64>,
        /// Use this decoder's maximum runtime at each distance as the delay
        #[arg(long)]
        decoder: Option<String>,
        #[arg(long, default_value_t = 99)]
        d_max: u32,
        #[arg(long = "A", default_value_t = 0.1)]
        a: f64,
        #[arg(long = "B", default_value_t = 100.0)]
        b: f64,
    },
}

/// Non-negative integer, also accepted in exponent form such as `1e6`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    let s = s.trim().replace('_', "");
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(f.is_finite() && f >= 0.0 && f.fract() == 0.0 && f < 18_446_744_073_709_551_616.0) {
        return Err(format!("`{s}` is not a non-negative integer"));
    }
    Ok(f as u64)
}

/// `LO:HI:PER` log grid specification.
pub fn parse_grid(s: &str) -> Result<(u32, u32, u32), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, per] = parts.as_slice() else {
        return Err(format!("grid `{s}` must look like LO:HI:PER"));
    };
    let num = |x: &str| {
        x.trim()
            .parse::<u32>()
            .map_err(|_| format!("grid `{s}`: `{x}` is not an integer"))
    };
    let (lo, hi, per) = (num(lo)?, num(hi)?, num(per)?);
    if hi < lo || per == 0 || hi > 18 {
        return Err(format!("grid `{s}` needs LO <= HI <= 18 and PER >= 1"));
    }
    Ok((lo, hi, per))
}
