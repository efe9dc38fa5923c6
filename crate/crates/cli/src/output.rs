//! Report envelopes: JSON with 12 significant digits, or CSV tables.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Map, Number, Value};

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A CSV view of a report.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_coords(prefix: &str, dim: usize, rest: &[&str]) -> Self {
        let mut header: Vec<String> = (1..=dim).map(|i| format!("{prefix}{i}")).collect();
        header.extend(rest.iter().map(|s| s.to_string()));
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "+infinity".into()
    } else if v == f64::NEG_INFINITY {
        "-infinity".into()
    } else {
        round(v).to_string()
    }
}

pub fn nums(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| num(*x)).collect()
}

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().unwrap_or(v)
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|f| Number::from_f64(round(f)))
            .map(Value::Number)
            .unwrap_or(Value::Null),
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect::<Map<_, _>>()),
        other => other,
    }
}

/// `{report, metadata}`; everything nondeterministic lives in `metadata`.
pub fn envelope<T: Serialize>(command: &str, seed: u64, report: &T) -> Value {
    let report = round_value(serde_json::to_value(report).expect("reports serialize"));
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    json!({
        "report": report,
        "metadata": {
            "command": command,
            "seed": seed,
            "version": env!("CARGO_PKG_VERSION"),
            "unix_time": stamp,
        }
    })
}

pub fn write_json(value: &Value, out: Option<&Path>) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    emit(text.as_bytes(), out)
}

pub fn write_csv(table: &Table, out: Option<&Path>) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    emit(&bytes, out)
}

fn emit(bytes: &[u8], out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round(0.1234567890123456), 0.123456789012);
        assert_eq!(round(2.0f64.sqrt()), 1.41421356237);
        assert_eq!(round(0.0), 0.0);
        assert_eq!(num(f64::INFINITY), "+infinity");
    }

    #[test]
    fn envelope_separates_metadata() {
        let v = envelope("merit", 3, &json!({"a": 1.0 / 3.0}));
        assert_eq!(v["report"]["a"], json!(0.333333333333));
        assert_eq!(v["metadata"]["seed"], json!(3));
    }
}
