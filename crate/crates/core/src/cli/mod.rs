//! The `qec-stopping` command line.
//!
//! Settings resolve as flags, then the `--config` JSON file, then defaults.
//! Exit codes: 0 success, 2 usage or validation error, 3 infeasible analysis, 4 I/O error.

mod args;
mod commands;
mod output;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Deserialize;

pub use args::{parse_count, parse_grid, Cli, Command, CommonArgs, CostUnit, Layout};
pub use output::{write_atomic, Cell, OutputFormat, Table};

use crate::error::Error;
use crate::range::{
    GateSchedule, RangeParams, DEFAULT_EPSILON, DEFAULT_RANGE_CAP, DEFAULT_T_SEC_NS,
};
use crate::stopping::DEFAULT_MIN_EVENTS;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    /// The analysis ran but nothing is feasible.
    Infeasible(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(Error::Io { .. }) => EXIT_IO,
            CliError::Lib(_) => EXIT_VALIDATION,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Contents of a `--config` file; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub epsilon: Option<f64>,
    pub t_sec_ns: Option<u64>,
    pub min_events: Option<u64>,
    pub schedule: Option<GateSchedule>,
    pub format: Option<OutputFormat>,
    pub seed: Option<u64>,
    pub saturation_cap: Option<u64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> crate::Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub epsilon: f64,
    /// `None` means "take it from the trace metadata, else the default".
    pub t_sec_ns: Option<u64>,
    pub min_events: u64,
    pub schedule: GateSchedule,
    pub saturation_cap: u64,
    pub format: OutputFormat,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(flags: &CommonArgs, file: &ConfigFile) -> crate::Result<Self> {
        let schedule = match &flags.schedule {
            Some(s) => parse_schedule(s)?,
            None => file.schedule.unwrap_or_default(),
        };
        let cfg = RunConfig {
            epsilon: flags.epsilon.or(file.epsilon).unwrap_or(DEFAULT_EPSILON),
            t_sec_ns: flags.t_sec_ns.or(file.t_sec_ns),
            min_events: flags
                .min_events
                .or(file.min_events)
                .unwrap_or(DEFAULT_MIN_EVENTS),
            schedule,
            saturation_cap: file.saturation_cap.unwrap_or(DEFAULT_RANGE_CAP),
            format: flags.format.or(file.format).unwrap_or_default(),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            out: flags.out.clone(),
        };
        if cfg.min_events == 0 {
            return Err(Error::Domain("min_events must be at least 1".into()));
        }
        cfg.range_params(None).validate()?;
        Ok(cfg)
    }

    /// Range settings, with `trace_t_sec_ns` filling in an unset cycle time.
    pub fn range_params(&self, trace_t_sec_ns: Option<u64>) -> RangeParams {
        RangeParams {
            epsilon: self.epsilon,
            t_sec_ns: self.t_sec_ns.or(trace_t_sec_ns).unwrap_or(DEFAULT_T_SEC_NS),
            schedule: self.schedule,
            saturation_cap: self.saturation_cap,
        }
    }
}

/// `H,S,CS,MEAS` multipliers of `d`.
pub fn parse_schedule(s: &str) -> crate::Result<GateSchedule> {
    let parts: Vec<u32> = s
        .split(',')
        .map(|x| x.trim().parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("schedule `{s}` must be four integers")))?;
    let [h, s_, cs, m] = parts.as_slice() else {
        return Err(Error::Config(format!(
            "schedule `{s}` must be four integers"
        )));
    };
    let schedule = GateSchedule {
        h_cycles: *h,
        s_cycles: *s_,
        conditional_s_cycles: *cs,
        measure_cycles: *m,
    };
    schedule.validate()?;
    Ok(schedule)
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
        }
    };
    init_logging(cli.common.verbose);
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .format_target(false)
        .try_init();
}

pub fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.common.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let cfg = RunConfig::resolve(&cli.common, &file)?;
    commands::dispatch(cli.command, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_flags_then_file_then_defaults() {
        let file = ConfigFile {
            epsilon: Some(0.1),
            min_events: Some(5),
            seed: Some(9),
            ..Default::default()
        };
        let flags = CommonArgs {
            epsilon: Some(0.2),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&flags, &file).unwrap();
        assert_eq!(cfg.epsilon, 0.2);
        assert_eq!(cfg.min_events, 5);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.format, OutputFormat::Csv);
        assert_eq!(cfg.range_params(Some(400)).t_sec_ns, 400);
        assert_eq!(cfg.range_params(None).t_sec_ns, DEFAULT_T_SEC_NS);

        let bad = CommonArgs {
            epsilon: Some(1.5),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&bad, &file).is_err());
    }

    #[test]
    fn schedule_flag() {
        assert_eq!(parse_schedule("2,2,2,1").unwrap(), GateSchedule::default());
        assert_eq!(parse_schedule("1, 1, 1, 1").unwrap().multiplier(), 4);
        assert!(parse_schedule("2,2,2").is_err());
        assert!(parse_schedule("2,0,2,1").is_err());
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"epsilon":0.3,"schedule":{"h_cycles":3}}"#).unwrap();
        let c = ConfigFile::load(&p).unwrap();
        assert_eq!(c.schedule.unwrap().h_cycles, 3);
        assert_eq!(c.schedule.unwrap().measure_cycles, 1);
        fs::write(&p, r#"{"epsilon":0.3,"bogus":1}"#).unwrap();
        assert!(matches!(ConfigFile::load(&p), Err(Error::Config(_))));
    }
}
