//! Tables with a provenance header, rendered as CSV or JSON.

use std::fmt::Write as _;
use std::time::SystemTime;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::args::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    Num(f64),
    Int(i64),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Str(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Str(s) => s.clone(),
            // `{:?}` is locale-free and round-trips
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Str(s) => json!(s),
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(format!("{v:?}")),
            Cell::Int(v) => json!(v),
            Cell::Bool(v) => json!(v),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Str(v)
    }
}

/// Result of one command.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    /// Everything that determines the output; hashed into the header.
    pub inputs: Value,
    /// A precomputed configuration hash that replaces the hash of `inputs`.
    pub config_hash: Option<String>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// JSON result; defaults to the rows as objects.
    pub json: Option<Value>,
}

impl Report {
    pub fn table(command: &'static str, inputs: impl Serialize, columns: Vec<&'static str>) -> Self {
        Self {
            command,
            inputs: serde_json::to_value(inputs).expect("inputs serialize"),
            config_hash: None,
            columns,
            rows: Vec::new(),
            json: None,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn hash(&self) -> String {
        if let Some(h) = &self.config_hash {
            return h.clone();
        }
        let canon = json!({ "command": self.command, "inputs": self.inputs }).to_string();
        format!("{:x}", Sha256::digest(canon.as_bytes()))
    }

    fn rows_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    Value::Object(
                        self.columns
                            .iter()
                            .zip(r)
                            .map(|(c, v)| (c.to_string(), v.json()))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    pub fn render(&self, format: Format, seed: u64, timestamp: bool) -> String {
        let version = env!("CARGO_PKG_VERSION");
        let hash = self.hash();
        let stamp = timestamp.then(|| humantime::format_rfc3339_seconds(SystemTime::now()).to_string());
        match format {
            Format::Csv => {
                let mut s = String::new();
                writeln!(s, "# extremal-sv {version}").unwrap();
                writeln!(s, "# command: {}", self.command).unwrap();
                writeln!(s, "# config_hash: {hash}").unwrap();
                writeln!(s, "# seed: {seed}").unwrap();
                if let Some(t) = stamp {
                    writeln!(s, "# timestamp: {t}").unwrap();
                }
                writeln!(s, "{}", self.columns.join(",")).unwrap();
                for r in &self.rows {
                    let line: Vec<String> = r.iter().map(Cell::csv).collect();
                    writeln!(s, "{}", line.join(",")).unwrap();
                }
                s
            }
            Format::Json => {
                let mut prov = json!({
                    "version": version,
                    "command": self.command,
                    "config_hash": hash,
                    "seed": seed,
                });
                if let Some(t) = stamp {
                    prov["timestamp"] = json!(t);
                }
                let result = self.json.clone().unwrap_or_else(|| self.rows_json());
                let mut text = serde_json::to_string_pretty(&json!({ "provenance": prov, "result": result }))
                    .expect("report serializes");
                text.push('\n');
                text
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_numbers_and_quoting() {
        assert_eq!(Cell::Num(0.5).csv(), "0.5");
        assert_eq!(Cell::Num(1.0).csv(), "1.0");
        assert_eq!(Cell::Num(1e-20).csv(), "1e-20");
        assert_eq!(Cell::Num(f64::INFINITY).csv(), "inf");
        assert_eq!(Cell::Str("a,b".into()).csv(), "\"a,b\"");
    }

    #[test]
    fn header_without_timestamp_is_stable() {
        let mut r = Report::table("tau", json!({"m": 1}), vec!["tau"]);
        r.push(vec![3.0.into()]);
        let a = r.render(Format::Csv, 1, false);
        assert_eq!(a, r.render(Format::Csv, 1, false));
        assert!(!a.contains("timestamp"));
        assert!(r.render(Format::Csv, 1, true).contains("# timestamp: "));
        let j: Value = serde_json::from_str(&r.render(Format::Json, 1, false)).unwrap();
        assert_eq!(j["result"][0]["tau"], json!(3.0));
        assert_eq!(j["provenance"]["seed"], json!(1));
    }
}
