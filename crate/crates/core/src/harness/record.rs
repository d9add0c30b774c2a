//! Run records and their CSV / JSON forms.
//!
//! A CSV file starts with a `# config_hash: <hex>` line followed by the
//! header and numeric rows. Floats use the shortest decimal that parses
//! back exactly, so CSV → JSON → CSV reproduces the bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::fmt_f64;
use super::thresholds::{threshold, THRESHOLDS_VERSION};
use crate::{Error, Result};

/// One pass/fail verdict against a pinned threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= threshold(id)`.
    pub fn at_most(name: &str, value: f64, id: &str) -> Self {
        let limit = threshold(id);
        Self {
            name: name.into(),
            value,
            threshold: limit,
            passed: value <= limit,
            detail: format!("{} <= {}", fmt_f64(value), fmt_f64(limit)),
        }
    }

    /// Passes when `value >= threshold(id)`.
    pub fn at_least(name: &str, value: f64, id: &str) -> Self {
        let limit = threshold(id);
        Self {
            name: name.into(),
            value,
            threshold: limit,
            passed: value >= limit,
            detail: format!("{} >= {}", fmt_f64(value), fmt_f64(limit)),
        }
    }

    /// A boolean condition; `value` is reported alongside.
    pub fn holds(name: &str, passed: bool, value: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            threshold: f64::NAN,
            passed,
            detail: detail.into(),
        }
    }
}

/// Header plus numeric rows: the part of a record that goes to CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub config_hash: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn json_number(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(fmt_f64(x))
    }
}

fn number_from_json(v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| fmt_err("number out of range")),
        Value::String(s) => s.parse().map_err(|_| fmt_err(format!("bad number {s:?}"))),
        other => Err(fmt_err(format!("expected a number, got {other}"))),
    }
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = format!("# config_hash: {}\n{}\n", self.config_hash, self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| fmt_f64(*x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let config_hash = lines
            .next()
            .and_then(|l| l.strip_prefix("# config_hash: "))
            .ok_or_else(|| fmt_err("missing `# config_hash:` line"))?
            .to_string();
        let header = lines.next().ok_or_else(|| fmt_err("missing header"))?;
        let columns: Vec<String> = header.split(',').map(str::to_string).collect();
        let rows = lines
            .map(|line| {
                let row = line
                    .split(',')
                    .map(|c| c.parse().map_err(|_| fmt_err(format!("bad number {c:?}"))))
                    .collect::<Result<Vec<f64>>>()?;
                if row.len() != columns.len() {
                    return Err(fmt_err(format!("row has {} cells, header {}", row.len(), columns.len())));
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            config_hash,
            columns,
            rows,
        })
    }

    fn to_json_value(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(|x| json_number(*x)).collect()))
            .collect();
        json!({
            "config_hash": self.config_hash,
            "columns": self.columns,
            "rows": rows,
        })
    }

    /// Reads the table part of any JSON this module writes.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        let config_hash = v["config_hash"]
            .as_str()
            .ok_or_else(|| fmt_err("missing config_hash"))?
            .to_string();
        let columns = v["columns"]
            .as_array()
            .ok_or_else(|| fmt_err("missing columns"))?
            .iter()
            .map(|c| c.as_str().map(str::to_string).ok_or_else(|| fmt_err("column is not a string")))
            .collect::<Result<_>>()?;
        let rows = v["rows"]
            .as_array()
            .ok_or_else(|| fmt_err("missing rows"))?
            .iter()
            .map(|r| {
                r.as_array()
                    .ok_or_else(|| fmt_err("row is not an array"))?
                    .iter()
                    .map(number_from_json)
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            config_hash,
            columns,
            rows,
        })
    }
}

pub fn csv_to_json(csv: &str) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Table::from_csv(csv)?.to_json_value())?)
}

pub fn json_to_csv(json: &str) -> Result<String> {
    Ok(Table::from_json(json)?.to_csv())
}

/// Result of one experiment run. Rows and checks are append-only.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub experiment: String,
    pub config_hash: String,
    pub thresholds_version: String,
    pub wall_time_s: f64,
    table: Table,
    checks: Vec<Check>,
    notes: Vec<String>,
}

impl RunRecord {
    pub fn new(experiment: &str, config_hash: &str, columns: &[&str]) -> Self {
        Self {
            experiment: experiment.into(),
            config_hash: config_hash.into(),
            thresholds_version: THRESHOLDS_VERSION.into(),
            wall_time_s: 0.0,
            table: Table {
                config_hash: config_hash.into(),
                columns: columns.iter().map(|c| c.to_string()).collect(),
                rows: Vec::new(),
            },
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.table.columns.len(), "row width must match the header");
        self.table.rows.push(row);
    }

    pub fn push_check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn push_note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn columns(&self) -> &[String] {
        &self.table.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.table.rows
    }

    /// Values of one column.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.table.columns.iter().position(|c| c == name)?;
        Some(self.table.rows.iter().map(|r| r[i]).collect())
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut v = self.table.to_json_value();
        v["experiment"] = json!(self.experiment);
        v["thresholds_version"] = json!(self.thresholds_version);
        v["wall_time_s"] = json_number(self.wall_time_s);
        v["checks"] = Value::Array(
            self.checks
                .iter()
                .map(|c| {
                    json!({
                        "name": c.name,
                        "value": json_number(c.value),
                        "threshold": json_number(c.threshold),
                        "passed": c.passed,
                        "detail": c.detail,
                    })
                })
                .collect(),
        );
        v["notes"] = json!(self.notes);
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn emit_csv(record: &RunRecord, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &record.table.to_csv())
}

pub fn emit_json(record: &RunRecord, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &record.to_json()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunRecord {
        let mut r = RunRecord::new("evolve", "abc123", &["t", "mass", "energy", "h1", "l2mu"]);
        r.push_row(vec![0.0, 1.0, 0.5, 2.0, 1.25]);
        r.push_row(vec![0.01, 1.0000000001, 1e-300, 1.0 / 3.0, f64::NAN]);
        r.push_row(vec![0.02, f64::INFINITY, -0.0, 123456789.125, 7e22]);
        r
    }

    #[test]
    fn empty_record_is_header_only() {
        let r = RunRecord::new("evolve", "h", &["t", "mass", "energy", "h1", "l2mu"]);
        assert_eq!(r.table().to_csv(), "# config_hash: h\nt,mass,energy,h1,l2mu\n");
    }

    #[test]
    fn csv_json_csv_is_byte_identical() {
        let csv = sample().table().to_csv();
        let back = json_to_csv(&csv_to_json(&csv).unwrap()).unwrap();
        assert_eq!(back, csv);
        let full = json_to_csv(&sample().to_json().unwrap()).unwrap();
        assert_eq!(full, csv);
    }

    #[test]
    fn files_are_written_with_hash() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = sample();
        r.push_check(Check::at_most("mass", 1e-9, "mass_drift"));
        assert!(r.passed());
        let csv = dir.path().join("a/trace.csv");
        emit_csv(&r, &csv).unwrap();
        emit_json(&r, dir.path().join("a/run.json")).unwrap();
        let text = fs::read_to_string(&csv).unwrap();
        assert!(text.starts_with("# config_hash: abc123\n"));
        assert_eq!(Table::from_csv(&text).unwrap().rows.len(), 3);
        let json = fs::read_to_string(dir.path().join("a/run.json")).unwrap();
        assert!(json.contains("\"thresholds_version\""));
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(Table::from_csv("t,mass\n1,2\n").is_err());
        assert!(Table::from_csv("# config_hash: x\na,b\n1\n").is_err());
    }

    #[test]
    fn checks_compare_against_the_table() {
        assert!(!Check::at_least("gap", 0.1, "defect_gap").passed);
        assert!(Check::at_least("gap", 0.3, "defect_gap").passed);
    }
}
