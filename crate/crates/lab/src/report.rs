//! In-memory reports and their CSV / JSON serialization.
//!
//! CSV floats use 17 significant digits. JSON uses the shortest
//! round-trip representation. Non-finite numbers are written as the text
//! `NaN`, `inf` or `-inf` in both formats. Wall-clock timing appears only in
//! JSON so CSV bodies are reproducible byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Config, Format};
use crate::error::LabError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Value {
    pub fn num(x: f64) -> Self {
        if x.is_finite() {
            Value::Float(x)
        } else {
            Value::Text(non_finite(x).to_string())
        }
    }

    pub fn int(n: usize) -> Self {
        Value::Int(n as i64)
    }

    pub fn text(s: impl Into<String>) -> Self {
        Value::Text(s.into())
    }

    /// Numeric value, reading the non-finite spellings back.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(n) => Some(*n as f64),
            Value::Float(x) => Some(*x),
            Value::Text(s) => match s.as_str() {
                "NaN" => Some(f64::NAN),
                "inf" => Some(f64::INFINITY),
                "-inf" => Some(f64::NEG_INFINITY),
                _ => None,
            },
        }
    }

    fn csv_field(&self) -> String {
        match self {
            Value::Int(n) => n.to_string(),
            Value::Float(x) => format_float(*x),
            Value::Text(s) => s.clone(),
        }
    }
}

fn non_finite(x: f64) -> &'static str {
    if x.is_nan() {
        "NaN"
    } else if x > 0.0 {
        "inf"
    } else {
        "-inf"
    }
}

/// 17 significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        non_finite(x).to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Value::csv_field)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

/// A scalar result with an optional standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub key: String,
    pub value: Value,
    pub std_error: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub experiment: String,
    pub fingerprint: String,
    pub seed: u64,
    pub config: Config,
    pub summary: Vec<Summary>,
    pub tables: Vec<Table>,
    pub timing: Timing,
}

impl Report {
    pub fn new(experiment: &str, config: &Config) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.to_string(),
            fingerprint: fingerprint(config),
            seed: config.seed,
            config: config.clone(),
            summary: Vec::new(),
            tables: Vec::new(),
            timing: Timing { wall_seconds: 0.0 },
        }
    }

    pub fn scalar(&mut self, key: &str, value: f64) {
        self.summary.push(Summary {
            key: key.to_string(),
            value: Value::num(value),
            std_error: None,
        });
    }

    pub fn count(&mut self, key: &str, value: usize) {
        self.summary.push(Summary {
            key: key.to_string(),
            value: Value::int(value),
            std_error: None,
        });
    }

    pub fn estimate(&mut self, key: &str, value: f64, std_error: f64) {
        self.summary.push(Summary {
            key: key.to_string(),
            value: Value::num(value),
            std_error: Some(Value::num(std_error)),
        });
    }

    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|s| s.key == key).and_then(|s| s.value.as_f64())
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new("summary", &["key", "value", "std_error"]);
        for s in &self.summary {
            t.push(vec![
                Value::text(s.key.clone()),
                s.value.clone(),
                s.std_error.clone().unwrap_or_else(|| Value::text("")),
            ]);
        }
        t
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// SHA-256 over the resolved config, hex encoded. Thread count, output
/// directory and format do not affect results and are left out.
pub fn fingerprint(config: &Config) -> String {
    let defaults = Config::default();
    let canonical = Config {
        threads: defaults.threads,
        out: defaults.out,
        format: defaults.format,
        ..config.clone()
    };
    let digest = Sha256::digest(canonical.to_toml().as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Writes the report into `dir` and returns the written paths.
///
/// CSV: `<experiment>.summary.csv` plus `<experiment>.<table>.csv` per table.
/// JSON: a single `<experiment>.json`.
pub fn emit_report(report: &Report, format: Format, dir: &Path) -> Result<Vec<PathBuf>, LabError> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let mut written = Vec::new();
    let mut write = |name: String, body: String| -> Result<(), LabError> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| LabError::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    match format {
        Format::Csv => {
            write(format!("{}.summary.csv", report.experiment), report.summary_table().to_csv())?;
            for t in &report.tables {
                write(format!("{}.{}.csv", report.experiment, t.name), t.to_csv())?;
            }
        }
        Format::Json => write(format!("{}.json", report.experiment), report.to_json())?,
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("price", &Config::default());
        r.estimate("x", 0.1 + 0.2, 1e-17);
        r.scalar("nan", f64::NAN);
        r.count("n", 7);
        let mut t = Table::new("rows", &["a", "b"]);
        t.push(vec![Value::num(std::f64::consts::PI), Value::int(3)]);
        t.push(vec![Value::num(-1e-300), Value::text("F_t0")]);
        r.tables.push(t);
        r
    }

    #[test]
    fn csv_uses_seventeen_significant_digits() {
        assert_eq!(format_float(0.1 + 0.2), "3.0000000000000004e-1");
        assert_eq!(format_float(f64::NAN), "NaN");
        let back: f64 = format_float(std::f64::consts::E).parse().unwrap();
        assert_eq!(back, std::f64::consts::E);
    }

    #[test]
    fn json_round_trip_is_value_identical() {
        let r = sample();
        let back = Report::from_json(&r.to_json()).unwrap();
        assert_eq!(back.tables, r.tables);
        assert_eq!(back.config, r.config);
        assert_eq!(back.summary_value("x"), Some(0.1 + 0.2));
        assert!(back.summary_value("nan").unwrap().is_nan());
    }

    #[test]
    fn csv_round_trip_is_value_identical() {
        let r = sample();
        let csv = r.tables[0].to_csv();
        let mut rd = csv::Reader::from_reader(csv.as_bytes());
        let rows: Vec<csv::StringRecord> = rd.records().map(|x| x.unwrap()).collect();
        assert_eq!(rows[0][0].parse::<f64>().unwrap(), std::f64::consts::PI);
        assert_eq!(rows[1][0].parse::<f64>().unwrap(), -1e-300);
        assert_eq!(&rows[1][1], "F_t0");
    }

    #[test]
    fn fingerprint_tracks_config_and_seed() {
        let a = Config::default();
        let b = Config { seed: 43, ..Config::default() };
        assert_eq!(fingerprint(&a), fingerprint(&a.clone()));
        assert_ne!(fingerprint(&a), fingerprint(&b));
        assert_eq!(fingerprint(&a).len(), 64);
        let c = Config { threads: 4, format: Format::Json, ..Config::default() };
        assert_eq!(fingerprint(&a), fingerprint(&c));
    }

    #[test]
    fn unwritable_directory_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("blocker");
        fs::write(&file, "x").unwrap();
        let err = emit_report(&sample(), Format::Csv, &file.join("sub")).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert!(err.to_string().contains("blocker"));
    }
}
