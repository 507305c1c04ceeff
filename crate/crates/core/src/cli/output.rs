//! Plot-ready tables written as CSV or JSON with identical numerals.

use std::fmt;
use std::io::{self, Write};
use std::path::Path;

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u128),
    Float(f64),
    Bool(bool),
    Text(String),
    /// Infeasible: `inf` in CSV, `null` in JSON.
    Inf,
    /// No value: empty in CSV, `null` in JSON.
    Null,
    /// A saturated lower bound, `>=N` in both formats.
    AtLeast(u64),
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(u128::from(v))
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(u128::from(v))
    }
}

impl From<u128> for Cell {
    fn from(v: u128) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            Cell::Float(v)
        } else {
            Cell::Inf
        }
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

impl Cell {
    /// `Some(v)` as a value, `None` as infeasible.
    pub fn or_inf<T: Into<Cell>>(v: Option<T>) -> Cell {
        v.map_or(Cell::Inf, Into::into)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => f.write_str(ryu::Buffer::new().format_finite(*v)),
            Cell::Bool(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Inf => f.write_str("inf"),
            Cell::Null => Ok(()),
            Cell::AtLeast(v) => write!(f, ">={v}"),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Int(v) => s.serialize_u128(*v),
            Cell::Float(v) => s.serialize_f64(*v),
            Cell::Bool(v) => s.serialize_bool(*v),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Inf | Cell::Null => s.serialize_none(),
            Cell::AtLeast(_) => s.serialize_str(&self.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

struct JsonRow<'a>(&'a [&'static str], &'a [Cell]);

impl Serialize for JsonRow<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl Serialize for Table {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.rows.len()))?;
        for row in &self.rows {
            seq.serialize_element(&JsonRow(&self.columns, row))?;
        }
        seq.end()
    }
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_string))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

/// Writes to `path` through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Writes to `out`, or stdout when absent.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn sample() -> Table {
        let mut t = Table::new(vec!["n_T", "cost", "rate", "range"]);
        t.push(vec![
            Cell::from(10u64),
            Cell::from(378u128),
            1e-7.into(),
            Cell::AtLeast(5),
        ]);
        t.push(vec![Cell::from(20u64), Cell::Inf, 0.1.into(), Cell::Null]);
        t
    }

    #[test]
    fn csv_markers() {
        assert_eq!(
            sample().to_csv(),
            "n_T,cost,rate,range\n10,378,1e-7,>=5\n20,inf,0.1,\n"
        );
    }

    #[test]
    fn csv_and_json_numerals_agree() {
        let t = sample();
        let json: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(json[0]["rate"].to_string(), "1e-7");
        assert_eq!(json[0]["cost"], 378);
        assert!(json[1]["cost"].is_null());
        assert_eq!(json[0]["range"], ">=5");
        for v in [0.1, 1.0 / 3.0, 4e-17, 123456.789, 1.0] {
            let csv = Cell::from(v).to_string();
            assert_eq!(csv, serde_json::to_string(&v).unwrap());
            assert_eq!(csv.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, b"a").unwrap();
        write_atomic(&p, b"b").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "b");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(matches!(
            write_atomic(&dir.path().join("missing/out.csv"), b"x"),
            Err(Error::Io { .. })
        ));
    }
}
