use std::fs;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::{HistogramBin, RuntimeTrace, ShotRecord, TraceMetadata};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    /// `runtime_ns,failed`
    PerShot,
    /// `runtime_ns,count_total,count_failed`
    Histogram,
}

impl TraceFormat {
    fn from_header(cols: &[&str]) -> Option<Self> {
        match cols {
            ["runtime_ns", "failed"] => Some(Self::PerShot),
            ["runtime_ns", "count_total", "count_failed"] => Some(Self::Histogram),
            _ => None,
        }
    }
}

/// Field-level overrides applied on top of a sidecar file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetadataOverrides {
    pub distance: Option<u32>,
    pub physical_error_rate: Option<f64>,
    pub shots: Option<u64>,
    pub sec_cycle_ns: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SidecarFile {
    distance: Option<u32>,
    physical_error_rate: Option<f64>,
    shots: Option<u64>,
    sec_cycle_ns: Option<u64>,
}

/// Resolves trace metadata from an optional JSON sidecar plus overrides.
///
/// A sidecar must carry every field; without a sidecar the overrides must.
pub fn load_metadata(
    sidecar: Option<&Path>,
    overrides: &MetadataOverrides,
) -> Result<TraceMetadata> {
    let file = match sidecar {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let parsed: SidecarFile = serde_json::from_str(&text)
                .map_err(|e| Error::config(format!("metadata {}: {}", path.display(), e)))?;
            let missing = [
                ("distance", parsed.distance.is_none()),
                ("physical_error_rate", parsed.physical_error_rate.is_none()),
                ("shots", parsed.shots.is_none()),
                ("sec_cycle_ns", parsed.sec_cycle_ns.is_none()),
            ];
            if let Some((name, _)) = missing.iter().find(|(_, m)| *m) {
                return Err(Error::config(format!(
                    "metadata {} is missing field `{name}`",
                    path.display()
                )));
            }
            parsed
        }
        None => SidecarFile::default(),
    };
    let require = |name: &str| Error::config(format!("metadata field `{name}` not provided"));
    let meta = TraceMetadata {
        distance: overrides
            .distance
            .or(file.distance)
            .ok_or_else(|| require("distance"))?,
        physical_error_rate: overrides
            .physical_error_rate
            .or(file.physical_error_rate)
            .ok_or_else(|| require("physical_error_rate"))?,
        shots: overrides
            .shots
            .or(file.shots)
            .ok_or_else(|| require("shots"))?,
        sec_cycle_ns: overrides
            .sec_cycle_ns
            .or(file.sec_cycle_ns)
            .ok_or_else(|| require("sec_cycle_ns"))?,
    };
    meta.validate()
        .map_err(|e| Error::config(format!("invalid metadata: {e}")))?;
    Ok(meta)
}

pub fn parse_trace(path: &Path, metadata: TraceMetadata) -> Result<RuntimeTrace> {
    let mut text = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    parse_trace_str(&text, &path.display().to_string(), metadata)
}

/// Parses trace CSV text; `name` labels diagnostics.
pub fn parse_trace_str(text: &str, name: &str, metadata: TraceMetadata) -> Result<RuntimeTrace> {
    // csv positions drift across skipped lines, so comments and blanks are dropped up
    // front and each record maps back to its source line by index
    let mut kept = String::with_capacity(text.len());
    let mut source_lines = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let t = l.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        kept.push_str(l);
        kept.push('\n');
        source_lines.push(i as u64 + 1);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(kept.as_bytes());
    let line_of = |pos: Option<&csv::Position>| -> u64 {
        pos.and_then(|p| source_lines.get(p.record() as usize).copied())
            .unwrap_or(0)
    };
    let parse_err = |line: u64, message: String| Error::Parse {
        path: name.to_string(),
        line,
        message,
    };

    let mut records = reader.records();
    let (format, header_line) = loop {
        match records.next() {
            None => return Err(parse_err(1, "missing header row".into())),
            Some(Err(e)) => return Err(parse_err(line_of(e.position()), e.to_string())),
            Some(Ok(rec)) => {
                let line = line_of(rec.position());
                let cols: Vec<&str> = rec.iter().collect();
                if cols.iter().all(|c| c.is_empty()) {
                    continue;
                }
                match TraceFormat::from_header(&cols) {
                    Some(f) => break (f, line),
                    None => {
                        return Err(parse_err(
                            line,
                            format!(
                                "unrecognized header `{}`; expected `runtime_ns,failed` or \
                                 `runtime_ns,count_total,count_failed`",
                                cols.join(",")
                            ),
                        ))
                    }
                }
            }
        }
    };
    log::debug!("{name}: {format:?} trace, header on line {header_line}");

    let mut shots = Vec::new();
    let mut bins = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| parse_err(line_of(e.position()), e.to_string()))?;
        let line = line_of(rec.position());
        let cols: Vec<&str> = rec.iter().collect();
        if cols.iter().all(|c| c.is_empty()) {
            continue;
        }
        let int = |idx: usize, col: &str| -> Result<u64> {
            cols[idx].parse::<u64>().map_err(|_| {
                parse_err(
                    line,
                    format!(
                        "column `{col}`: `{}` is not a non-negative integer",
                        cols[idx]
                    ),
                )
            })
        };
        match format {
            TraceFormat::PerShot => {
                if cols.len() != 2 {
                    return Err(parse_err(
                        line,
                        format!("expected 2 columns, found {}", cols.len()),
                    ));
                }
                let runtime_ns = int(0, "runtime_ns")?;
                let failed = match cols[1] {
                    "0" => false,
                    "1" => true,
                    other => {
                        return Err(parse_err(
                            line,
                            format!("column `failed`: expected 0 or 1, found `{other}`"),
                        ))
                    }
                };
                shots.push(ShotRecord { runtime_ns, failed });
            }
            TraceFormat::Histogram => {
                if cols.len() != 3 {
                    return Err(parse_err(
                        line,
                        format!("expected 3 columns, found {}", cols.len()),
                    ));
                }
                let bin = HistogramBin {
                    runtime_ns: int(0, "runtime_ns")?,
                    count_total: int(1, "count_total")?,
                    count_failed: int(2, "count_failed")?,
                };
                if bin.count_failed > bin.count_total {
                    return Err(parse_err(line, "count_failed exceeds count_total".into()));
                }
                bins.push(bin);
            }
        }
    }

    match format {
        TraceFormat::PerShot => RuntimeTrace::from_records(metadata, shots),
        TraceFormat::Histogram => RuntimeTrace::from_histogram(metadata, bins),
    }
}
